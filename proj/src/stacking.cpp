#include "medner/stacking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "medner/error.hpp"

namespace medner {

namespace {

// The standard distributions and std::shuffle are implementation-defined;
// these keep seeded results identical across toolchains.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[static_cast<std::size_t>(rng() % i)]);
  }
}

void check_aligned(std::span<const std::vector<WordPrediction>> per_model, std::size_t n) {
  if (per_model.empty()) throw Error(ErrorCode::EmptyInput, "no base models");
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    if (per_model[m].size() != n) {
      throw Error(ErrorCode::LengthMismatch, "model " + std::to_string(m) + " has " +
                                                 std::to_string(per_model[m].size()) +
                                                 " words, expected " + std::to_string(n));
    }
  }
}

}  // namespace

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::OneHot ? "one_hot" : "logits";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "one_hot" || name == "onehot") return FeatureMode::OneHot;
  if (name == "logits") return FeatureMode::Logits;
  throw Error(ErrorCode::InvalidArgument, "unknown feature mode '" + std::string(name) + "'");
}

std::size_t count_non_o(std::span<const std::vector<WordPrediction>> per_model,
                        std::size_t position) {
  std::size_t n = 0;
  for (const auto& model : per_model) {
    if (model[position].label != kOutside) ++n;
  }
  return n;
}

std::vector<double> encode_features(std::span<const std::vector<WordPrediction>> per_model,
                                     std::size_t position, FeatureMode mode) {
  std::vector<double> features(per_model.size() * kNumLabels, 0.0);
  for (std::size_t m = 0; m < per_model.size(); ++m) {
    const WordPrediction& wp = per_model[m][position];
    const std::size_t block = m * kNumLabels;
    if (mode == FeatureMode::OneHot) {
      if (wp.label >= kNumLabels) {
        throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(wp.label));
      }
      features[block + wp.label] = 1.0;
    } else {
      if (!wp.logits) {
        throw Error(ErrorCode::MissingLogits, "model " + std::to_string(m) +
                                                  " has no word logits at position " +
                                                  std::to_string(position));
      }
      std::copy(wp.logits->begin(), wp.logits->end(), features.begin() + block);
    }
  }
  return features;
}

std::vector<StackedExample> collect_examples(
    std::span<const std::vector<WordPrediction>> per_model, std::span<const LabelId> gold,
    FeatureMode mode, std::size_t min_non_o) {
  check_aligned(per_model, gold.size());
  std::vector<StackedExample> out;
  for (std::size_t pos = 0; pos < gold.size(); ++pos) {
    if (count_non_o(per_model, pos) < min_non_o) continue;
    if (gold[pos] >= kNumLabels) {
      throw Error(ErrorCode::IndexOutOfRange, "gold label index " + std::to_string(gold[pos]));
    }
    out.push_back({encode_features(per_model, pos, mode), gold[pos]});
  }
  return out;
}

StackedDataset split_dataset(std::vector<StackedExample> examples, FeatureMode mode,
                             std::size_t n_models, double train_fraction,
                             std::optional<std::uint64_t> shuffle_seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in [0, 1]");
  }
  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    portable_shuffle(examples, rng);
  }
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(examples.size())));
  StackedDataset ds;
  ds.feature_mode = mode;
  ds.n_models = n_models;
  ds.train.assign(std::make_move_iterator(examples.begin()),
                  std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n_train)));
  ds.test.assign(std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                 std::make_move_iterator(examples.end()));
  return ds;
}

StackedDataset build_stacked_dataset(std::span<const std::vector<WordPrediction>> per_model,
                                     std::span<const LabelId> gold, FeatureMode mode,
                                     std::size_t min_non_o) {
  return split_dataset(collect_examples(per_model, gold, mode, min_non_o), mode, per_model.size());
}

// --- network ----------------------------------------------------------------

MetaNet::MetaNet(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a network needs at least input and output sizes");
  }
  for (std::size_t s : sizes_) {
    if (s == 0) throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes_[l];
    layer.out = sizes_[l + 1];
    layer.weights.assign(layer.in * layer.out, 0.0);
    layer.bias.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

MetaNet MetaNet::initialized(std::vector<std::size_t> sizes, std::uint64_t seed) {
  MetaNet net(std::move(sizes));
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weights) w = limit * (2.0 * unit_draw(rng) - 1.0);
  }
  return net;
}

std::size_t MetaNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

bool MetaNet::all_finite() const noexcept {
  for (const auto& layer : layers_) {
    for (double w : layer.weights) if (!std::isfinite(w)) return false;
    for (double b : layer.bias) if (!std::isfinite(b)) return false;
  }
  return true;
}

std::vector<DenseLayer> MetaNet::zero_gradients() const {
  std::vector<DenseLayer> grads = layers_;
  for (auto& g : grads) {
    std::fill(g.weights.begin(), g.weights.end(), 0.0);
    std::fill(g.bias.begin(), g.bias.end(), 0.0);
  }
  return grads;
}

// activations[l] is the input to layer l (post-rectifier for l > 0).
std::vector<double> MetaNet::logits(std::span<const double> features,
                                    std::vector<std::vector<double>>* activations) const {
  if (sizes_.empty() || features.size() != input_width()) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(sizes_.empty() ? 0 : input_width()) +
                    " features, got " + std::to_string(features.size()));
  }
  std::vector<double> x(features.begin(), features.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    std::vector<double> z(layer.bias);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double* row = layer.weights.data() + r * layer.in;
      double acc = 0.0;
      for (std::size_t c = 0; c < layer.in; ++c) acc += row[c] * x[c];
      z[r] += acc;
    }
    if (activations) activations->push_back(std::move(x));
    if (l + 1 < layers_.size()) {
      for (double& v : z) v = std::max(v, 0.0);
    }
    x = std::move(z);
  }
  return x;
}

std::vector<double> softmax(std::span<const double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - peak);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> MetaNet::forward(std::span<const double> features) const {
  return softmax(logits(features, nullptr));
}

namespace {

double cross_entropy(std::span<const double> z, LabelId label) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - peak);
  return std::log(sum) + peak - z[label];
}

}  // namespace

double MetaNet::loss(std::span<const double> features, LabelId label) const {
  if (label >= output_width()) {
    throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(label));
  }
  return cross_entropy(logits(features, nullptr), label);
}

double MetaNet::accumulate_gradient(std::span<const double> features, LabelId label,
                                    std::vector<DenseLayer>& grads) const {
  if (label >= output_width()) {
    throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(label));
  }
  std::vector<std::vector<double>> acts;
  acts.reserve(layers_.size());
  const std::vector<double> z = logits(features, &acts);
  const double example_loss = cross_entropy(z, label);

  // dL/dz at the output: softmax - onehot.
  std::vector<double> delta = softmax(z);
  delta[label] -= 1.0;

  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    DenseLayer& g = grads[l];
    const std::vector<double>& input = acts[l];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      g.bias[r] += d;
      if (d == 0.0) continue;
      double* grow = g.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) grow[c] += d * input[c];
    }
    if (l == 0) break;
    // Back through the weights, then the rectifier of layer l-1 (whose
    // output is `input`; zero output means the unit was inactive).
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += row[c] * d;
    }
    for (std::size_t c = 0; c < layer.in; ++c) {
      if (input[c] <= 0.0) prev[c] = 0.0;
    }
    delta = std::move(prev);
  }
  return example_loss;
}

// --- training ---------------------------------------------------------------

void TrainConfig::validate() const {
  if (hidden_width == 0 || epochs == 0 || batch_size == 0 || !(learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "hidden width, learning rate, epochs and batch size must be positive");
  }
}

double mean_loss(const MetaNet& net, std::span<const StackedExample> examples) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) total += net.loss(ex.features, ex.label);
  return total / static_cast<double>(examples.size());
}

double accuracy(const MetaNet& net, std::span<const StackedExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    if (predict(net, ex.features) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainResult train_from(MetaNet net, const StackedDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty()) throw Error(ErrorCode::EmptyDataset, "training split is empty");

  TrainResult result;
  result.initial_loss = mean_loss(net, dataset.train);
  if (!std::isfinite(result.initial_loss)) {
    throw Error(ErrorCode::NonFiniteLoss, "initial loss is not finite");
  }

  // The shuffle stream is separate from the init stream so changing the init
  // elsewhere does not perturb batch order.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<DenseLayer> grads = net.zero_gradients();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) portable_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (auto& g : grads) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t i = start; i < stop; ++i) {
        const StackedExample& ex = dataset.train[order[i]];
        net.accumulate_gradient(ex.features, ex.label, grads);
      }
      const double step = config.learning_rate / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < grads.size(); ++l) {
        DenseLayer& layer = net.layers()[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
          layer.weights[k] -= step * grads[l].weights[k];
        }
        for (std::size_t k = 0; k < layer.bias.size(); ++k) layer.bias[k] -= step * grads[l].bias[k];
      }
    }
    const double epoch_loss = mean_loss(net, dataset.train);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::NonFiniteLoss,
                  "training loss became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(epoch_loss);
  }

  result.train_accuracy = accuracy(net, dataset.train);
  result.test_accuracy = accuracy(net, dataset.test);
  result.net = std::move(net);
  return result;
}

TrainResult train(const StackedDataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty()) throw Error(ErrorCode::EmptyDataset, "training split is empty");
  const std::size_t width = dataset.train.front().features.size();
  return train_from(MetaNet::initialized({width, config.hidden_width, kNumLabels}, config.seed),
                    dataset, config);
}

LabelId predict(const MetaNet& net, std::span<const double> features) {
  return argmax(net.forward(features));
}

double gradient_check(const MetaNet& net, const StackedExample& example, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be > 0");

  std::vector<DenseLayer> analytic = net.zero_gradients();
  net.accumulate_gradient(example.features, example.label, analytic);

  MetaNet probe = net;
  double worst = 0.0;
  auto check = [&](double& param, double grad) {
    const double saved = param;
    param = saved + eps;
    const double up = probe.loss(example.features, example.label);
    param = saved - eps;
    const double down = probe.loss(example.features, example.label);
    param = saved;
    const double numeric = (up - down) / (2.0 * eps);
    // Absolute floor keeps near-zero gradients from amplifying rounding noise.
    const double scale = std::max({std::abs(grad), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(grad - numeric) / scale);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    DenseLayer& layer = probe.layers()[l];
    for (std::size_t k = 0; k < layer.weights.size(); ++k) check(layer.weights[k], analytic[l].weights[k]);
    for (std::size_t k = 0; k < layer.bias.size(); ++k) check(layer.bias[k], analytic[l].bias[k]);
  }
  return worst;
}

std::vector<WordPrediction> stacked_predict(const StackedModel& model,
                                            std::span<const std::vector<WordPrediction>> per_model) {
  if (per_model.size() != model.n_models) {
    throw Error(ErrorCode::DimensionMismatch, "meta-model expects " +
                                                  std::to_string(model.n_models) +
                                                  " base models, got " +
                                                  std::to_string(per_model.size()));
  }
  check_aligned(per_model, per_model.front().size());
  std::vector<WordPrediction> out;
  out.reserve(per_model.front().size());
  for (std::size_t pos = 0; pos < per_model.front().size(); ++pos) {
    WordPrediction wp{per_model.front()[pos].word_index, kOutside, std::nullopt};
    if (count_non_o(per_model, pos) >= model.min_non_o) {
      wp.label = predict(model.net, encode_features(per_model, pos, model.feature_mode));
    }
    out.push_back(wp);
  }
  return out;
}

}  // namespace medner
