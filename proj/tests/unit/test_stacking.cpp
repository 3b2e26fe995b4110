#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "copy_model0.hpp"
#include "generators.hpp"
#include "medner/error.hpp"
#include "medner/stacking.hpp"
#include "oracles.hpp"

using namespace medner;

namespace {

std::vector<WordPrediction> word_labels(std::initializer_list<LabelId> labels) {
  std::vector<WordPrediction> out;
  std::size_t i = 0;
  for (LabelId l : labels) out.push_back({i++, l, std::nullopt});
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected medner::Error";
  return ErrorCode::InvalidArgument;
}

StackedExample random_example(gen::Rng& rng, std::size_t width, std::size_t classes) {
  StackedExample ex;
  for (std::size_t i = 0; i < width; ++i) ex.features.push_back(rng.uniform(-1.0, 1.0));
  ex.label = rng.below(classes);
  return ex;
}

}  // namespace

TEST(StackingData, AllOWordExcluded) {
  std::vector<std::vector<WordPrediction>> models(8, word_labels({0}));
  EXPECT_TRUE(collect_examples(models, std::vector<LabelId>{0}, FeatureMode::OneHot).empty());
}

TEST(StackingData, OneHotLayout) {
  const LabelId drug = label_index("B-Drug");
  std::vector<std::vector<WordPrediction>> models(8, word_labels({0}));
  models[0] = models[1] = word_labels({drug});
  const auto ex = collect_examples(models, std::vector<LabelId>{drug}, FeatureMode::OneHot);
  ASSERT_EQ(ex.size(), 1u);
  ASSERT_EQ(ex[0].features.size(), 152u);
  EXPECT_EQ(ex[0].features[0 * 19 + drug], 1.0);
  EXPECT_EQ(ex[0].features[1 * 19 + drug], 1.0);
  for (std::size_t m = 2; m < 8; ++m) EXPECT_EQ(ex[0].features[m * 19], 1.0);
  EXPECT_TRUE(oracle::one_hot_matches(ex[0].features, {drug, drug, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(std::accumulate(ex[0].features.begin(), ex[0].features.end(), 0.0), 8.0);
}

TEST(StackingData, FilterBoundary) {
  std::vector<std::vector<WordPrediction>> models(8, word_labels({0, 0}));
  models[0] = word_labels({3, 3});
  models[1] = word_labels({0, 5});
  const auto ex = collect_examples(models, std::vector<LabelId>{3, 5}, FeatureMode::OneHot);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].label, 5u);
  EXPECT_EQ(count_non_o(models, 0), 1u);
  EXPECT_EQ(count_non_o(models, 1), 2u);
}

TEST(StackingData, SplitEightyTwenty) {
  std::vector<StackedExample> ex(10);
  for (std::size_t i = 0; i < ex.size(); ++i) ex[i].label = i;
  const auto ds = split_dataset(ex, FeatureMode::OneHot, 1);
  ASSERT_EQ(ds.train.size(), 8u);
  ASSERT_EQ(ds.test.size(), 2u);
  EXPECT_EQ(ds.train.front().label, 0u);
  EXPECT_EQ(ds.test.back().label, 9u);

  const auto shuffled = split_dataset(ex, FeatureMode::OneHot, 1, 0.8, 99);
  EXPECT_EQ(shuffled.train.size(), 8u);
  const auto again = split_dataset(ex, FeatureMode::OneHot, 1, 0.8, 99);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(shuffled.train[i].label, again.train[i].label);
  EXPECT_EQ(code_of([&] { split_dataset(ex, FeatureMode::OneHot, 1, 1.5); }),
            ErrorCode::InvalidArgument);
}

TEST(StackingData, LogitsModeNeedsLogits) {
  std::vector<std::vector<WordPrediction>> models(2, word_labels({4}));
  EXPECT_EQ(code_of([&] { collect_examples(models, std::vector<LabelId>{4}, FeatureMode::Logits); }),
            ErrorCode::MissingLogits);
  Logits a{}, b{};
  a[4] = 1.5;
  b[4] = -2.5;
  models[0][0].logits = a;
  models[1][0].logits = b;
  const auto ex = collect_examples(models, std::vector<LabelId>{4}, FeatureMode::Logits);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].features[4], 1.5);
  EXPECT_EQ(ex[0].features[19 + 4], -2.5);
}

TEST(StackingData, Mismatches) {
  std::vector<std::vector<WordPrediction>> models{word_labels({1, 2}), word_labels({1})};
  EXPECT_EQ(code_of([&] { collect_examples(models, std::vector<LabelId>{1, 2}, FeatureMode::OneHot); }),
            ErrorCode::LengthMismatch);
  std::vector<std::vector<WordPrediction>> ok{word_labels({1, 2})};
  EXPECT_EQ(code_of([&] { collect_examples(ok, std::vector<LabelId>{1}, FeatureMode::OneHot); }),
            ErrorCode::LengthMismatch);
}

TEST(StackingDataProperty, OneHotEveryExample) {
  gen::Rng rng(1);
  for (int iter = 0; iter < 20; ++iter) {
    const std::size_t n_models = rng.between(2, 8);
    const auto pm = gen::copy_model0_words(rng, 100, n_models);
    const auto ex = collect_examples(pm.models, pm.gold, FeatureMode::OneHot);
    std::size_t k = 0;
    for (std::size_t w = 0; w < pm.gold.size(); ++w) {
      std::vector<std::size_t> labels;
      std::size_t non_o = 0;
      for (const auto& m : pm.models) {
        labels.push_back(m[w].label);
        non_o += m[w].label != 0;
      }
      if (non_o < 2) continue;
      ASSERT_LT(k, ex.size());
      ASSERT_TRUE(oracle::one_hot_matches(ex[k].features, labels));
      ASSERT_EQ(ex[k].label, pm.gold[w]);
      ++k;
    }
    ASSERT_EQ(k, ex.size());
  }
}

TEST(MetaNet, ZeroNetPredictsO) {
  const MetaNet net({152, 16, 19});
  std::vector<double> x(152, 1.0);
  EXPECT_EQ(predict(net, x), 0u);
  const auto p = net.forward(x);
  for (double v : p) EXPECT_NEAR(v, 1.0 / 19.0, 1e-15);
}

TEST(MetaNet, DimensionMismatch) {
  const auto net = MetaNet::initialized({10, 4, 3}, 1);
  std::vector<double> x(9, 0.0);
  EXPECT_EQ(code_of([&] { predict(net, x); }), ErrorCode::DimensionMismatch);
}

TEST(MetaNet, InitializationRangeAndDeterminism) {
  const auto a = MetaNet::initialized({152, 128, 19}, 5);
  EXPECT_EQ(a, MetaNet::initialized({152, 128, 19}, 5));
  EXPECT_FALSE(a == MetaNet::initialized({152, 128, 19}, 6));
  for (const auto& layer : a.layers()) {
    const double limit = std::sqrt(6.0 / double(layer.in + layer.out));
    for (double w : layer.weights) EXPECT_LE(std::abs(w), limit);
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(a.parameter_count(), 152u * 128 + 128 + 128 * 19 + 19);
}

TEST(MetaNet, SoftmaxSumsToOne) {
  gen::Rng rng(2);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<double> z(rng.between(1, 30));
    for (double& v : z) v = rng.uniform(-500.0, 500.0);
    const auto p = softmax(z);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  }
  const auto net = MetaNet::initialized({20, 8, 5}, 3);
  for (int iter = 0; iter < 100; ++iter) {
    const auto ex = random_example(rng, 20, 5);
    const auto p = net.forward(ex.features);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(MetaNet, GradientCheckSmallNet) {
  gen::Rng rng(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto net = MetaNet::initialized({10, 5, 4}, seed);
    EXPECT_LT(gradient_check(net, random_example(rng, 10, 4)), 1e-4);
  }
}

TEST(MetaNet, LinearNetMatchesClosedForm) {
  gen::Rng rng(4);
  auto net = MetaNet::initialized({6, 4}, 9);
  for (double& b : net.layers()[0].bias) b = rng.uniform(-0.5, 0.5);
  const auto ex = random_example(rng, 6, 4);
  auto grads = net.zero_gradients();
  net.accumulate_gradient(ex.features, ex.label, grads);
  const auto want = oracle::softmax_ce_gradient(net.layers()[0].weights, net.layers()[0].bias,
                                                ex.features, ex.label);
  for (std::size_t k = 0; k < want.dw.size(); ++k) EXPECT_NEAR(grads[0].weights[k], want.dw[k], 1e-12);
  for (std::size_t k = 0; k < want.db.size(); ++k) EXPECT_NEAR(grads[0].bias[k], want.db[k], 1e-12);
  EXPECT_LT(gradient_check(net, ex), 1e-6);
}

TEST(MetaNet, GradientCheckRejectsZeroStep) {
  const auto net = MetaNet::initialized({3, 2}, 1);
  StackedExample ex{{0.1, 0.2, 0.3}, 1};
  EXPECT_EQ(code_of([&] { gradient_check(net, ex, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(Training, EmptyDataset) {
  StackedDataset ds;
  ds.n_models = 8;
  EXPECT_EQ(code_of([&] { train(ds, TrainConfig{}); }), ErrorCode::EmptyDataset);
}

TEST(Training, ConfigValidation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Training, NonFiniteLoss) {
  auto ds = gen::copy_model0_dataset(1, 50);
  TrainConfig c;
  c.learning_rate = 1e300;
  c.hidden_width = 8;
  c.epochs = 5;
  EXPECT_EQ(code_of([&] { train(ds, c); }), ErrorCode::NonFiniteLoss);
}

TEST(Training, SingleExampleLossDoesNotIncrease) {
  StackedDataset ds;
  ds.n_models = 1;
  ds.train.push_back({std::vector<double>(19, 0.0), 3});
  ds.train[0].features[3] = 1.0;
  TrainConfig c;
  c.hidden_width = 8;
  c.epochs = 1;
  c.learning_rate = 1e-3;
  const auto r = train(ds, c);
  EXPECT_LE(r.epoch_loss.front(), r.initial_loss);
}

TEST(Training, DeterministicGivenSeed) {
  const auto ds = gen::copy_model0_dataset(2, 300);
  TrainConfig c;
  c.hidden_width = 16;
  c.epochs = 5;
  c.learning_rate = 0.05;
  c.seed = 11;
  const auto a = train(ds, c);
  const auto b = train(ds, c);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  c.seed = 12;
  EXPECT_FALSE(train(ds, c).net == a.net);
}

TEST(Training, LossNonIncreasingAtSmallRate) {
  const auto ds = gen::copy_model0_dataset(3, 400);
  TrainConfig c;
  c.hidden_width = 32;
  c.epochs = 30;
  c.learning_rate = 1e-3;
  const auto r = train(ds, c);
  double prev = r.initial_loss;
  for (double l : r.epoch_loss) {
    EXPECT_LE(l, prev);
    prev = l;
  }
}

TEST(Training, LearnsCopyOfModelZero) {
  const auto ds = gen::copy_model0_dataset(4, 2000);
  TrainConfig c;
  c.hidden_width = 64;
  c.epochs = 40;
  c.learning_rate = 0.5;
  c.batch_size = 32;
  const auto r = train(ds, c);
  EXPECT_GE(r.test_accuracy, 0.99);
  EXPECT_DOUBLE_EQ(r.test_accuracy, accuracy(r.net, ds.test));
}

TEST(StackedPredict, FilteredWordsAreO) {
  StackedModel model{MetaNet::initialized({2 * 19, 4, 19}, 1), FeatureMode::OneHot, 2, 2};
  // Force the net to always say B-Drug.
  model.net.layers().back().bias[label_index("B-Drug")] = 100.0;
  std::vector<std::vector<WordPrediction>> models{word_labels({0, 3, 3}), word_labels({0, 0, 7})};
  const auto out = stacked_predict(model, models);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].label, 0u);
  EXPECT_EQ(out[1].label, 0u);
  EXPECT_EQ(out[2].label, label_index("B-Drug"));
  std::vector<std::vector<WordPrediction>> three(3, word_labels({1}));
  EXPECT_EQ(code_of([&] { stacked_predict(model, three); }), ErrorCode::DimensionMismatch);
}

TEST(ModelIo, RoundTripBitExact) {
  gen::Rng rng(5);
  StackedModel model{MetaNet::initialized({3 * 19, 7, 19}, 77), FeatureMode::Logits, 3, 3};
  for (auto& layer : model.net.layers()) {
    for (double& b : layer.bias) b = rng.uniform(-1e-300, 1e300);
  }
  model.net.layers()[0].weights[0] = -0.0;
  model.net.layers()[0].weights[1] = 5e-324;
  std::stringstream buf;
  write_stacked_model(buf, model);
  const std::string bytes = buf.str();
  const StackedModel back = read_stacked_model(buf);
  EXPECT_EQ(back, model);
  EXPECT_TRUE(std::signbit(back.net.layers()[0].weights[0]));
  std::stringstream again;
  write_stacked_model(again, back);
  EXPECT_EQ(again.str(), bytes);
}

TEST(ModelIo, RejectsCorruptInput) {
  std::stringstream bad("NOTMODEL");
  EXPECT_THROW(read_stacked_model(bad), Error);
  StackedModel model{MetaNet::initialized({19, 19}, 1), FeatureMode::OneHot, 1, 2};
  std::stringstream buf;
  write_stacked_model(buf, model);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW(read_stacked_model(truncated), Error);
}
