#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "medner/types.hpp"

namespace medner {

enum class FeatureMode {
  OneHot,  // one 1 per model block at the model's word label
  Logits,  // the model's word-level logits, concatenated
};

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

struct StackedExample {
  std::vector<double> features;  // n_models * kNumLabels
  LabelId label = kOutside;
};

struct StackedDataset {
  std::vector<StackedExample> train;
  std::vector<StackedExample> test;
  FeatureMode feature_mode = FeatureMode::OneHot;
  std::size_t n_models = 0;
};

inline constexpr std::size_t kDefaultMinNonO = 2;

/// Number of models whose label at `position` is not "O".
std::size_t count_non_o(std::span<const std::vector<WordPrediction>> per_model,
                        std::size_t position);

/// Feature vector for one word: block m holds model m's contribution.
std::vector<double> encode_features(std::span<const std::vector<WordPrediction>> per_model,
                                    std::size_t position, FeatureMode mode);

/// One example per word position with at least `min_non_o` non-O base
/// predictions, in position order. Throws LengthMismatch, MissingLogits.
std::vector<StackedExample> collect_examples(
    std::span<const std::vector<WordPrediction>> per_model, std::span<const LabelId> gold,
    FeatureMode mode, std::size_t min_non_o = kDefaultMinNonO);

/// Positional split: the first floor(train_fraction * M) examples train. With
/// a shuffle seed the examples are permuted first.
StackedDataset split_dataset(std::vector<StackedExample> examples, FeatureMode mode,
                             std::size_t n_models, double train_fraction = 0.8,
                             std::optional<std::uint64_t> shuffle_seed = std::nullopt);

StackedDataset build_stacked_dataset(std::span<const std::vector<WordPrediction>> per_model,
                                     std::span<const LabelId> gold, FeatureMode mode,
                                     std::size_t min_non_o = kDefaultMinNonO);

/// Fully connected layer, weights row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }

  bool operator==(const DenseLayer&) const = default;
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

/// Feed-forward classifier: rectifier between layers, softmax output,
/// cross-entropy loss. Sizes [in, out] give a plain softmax regression.
class MetaNet {
 public:
  MetaNet() = default;
  /// All parameters zero.
  explicit MetaNet(std::vector<std::size_t> sizes);
  /// Uniform init in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static MetaNet initialized(std::vector<std::size_t> sizes, std::uint64_t seed);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t input_width() const noexcept { return sizes_.front(); }
  std::size_t output_width() const noexcept { return sizes_.back(); }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;

  /// Output probabilities. Throws DimensionMismatch.
  std::vector<double> forward(std::span<const double> features) const;
  double loss(std::span<const double> features, LabelId label) const;

  /// Parameter gradients laid out like layers(), accumulated into `grads`
  /// (which must have matching shapes). Returns the example's loss.
  double accumulate_gradient(std::span<const double> features, LabelId label,
                             std::vector<DenseLayer>& grads) const;
  std::vector<DenseLayer> zero_gradients() const;

  bool all_finite() const noexcept;

  bool operator==(const MetaNet&) const = default;

 private:
  std::vector<double> logits(std::span<const double> features,
                             std::vector<std::vector<double>>* activations) const;

  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> z);

struct TrainConfig {
  std::size_t hidden_width = 128;
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct TrainResult {
  MetaNet net;
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // mean train loss after each epoch
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;  // 0 when the test split is empty
};

/// Mini-batch gradient descent on mean cross-entropy. Deterministic given
/// config.seed. Throws EmptyDataset, NonFiniteLoss.
TrainResult train(const StackedDataset& dataset, const TrainConfig& config);

/// Same, continuing from an existing network.
TrainResult train_from(MetaNet net, const StackedDataset& dataset, const TrainConfig& config);

double mean_loss(const MetaNet& net, std::span<const StackedExample> examples);
double accuracy(const MetaNet& net, std::span<const StackedExample> examples);

/// Argmax of the output distribution. Throws DimensionMismatch.
LabelId predict(const MetaNet& net, std::span<const double> features);

/// Largest relative error between backprop gradients and central finite
/// differences over every parameter. Throws InvalidArgument for eps <= 0.
double gradient_check(const MetaNet& net, const StackedExample& example, double eps = 1e-5);

/// A trained meta-model plus what is needed to featurize its inputs.
struct StackedModel {
  MetaNet net;
  FeatureMode feature_mode = FeatureMode::OneHot;
  std::size_t n_models = 0;
  std::size_t min_non_o = kDefaultMinNonO;

  bool operator==(const StackedModel&) const = default;
};

/// Labels every word: positions with fewer than min_non_o non-O base
/// predictions get "O" without consulting the network.
std::vector<WordPrediction> stacked_predict(const StackedModel& model,
                                            std::span<const std::vector<WordPrediction>> per_model);

void write_stacked_model(std::ostream& out, const StackedModel& model);
StackedModel read_stacked_model(std::istream& in);

}  // namespace medner
