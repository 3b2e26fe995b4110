#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medner/formats.hpp"
#include "medner/grouping.hpp"
#include "medner/linking.hpp"
#include "medner/metrics.hpp"
#include "medner/stacking.hpp"
#include "medner/voting.hpp"

namespace medner {

struct StackingOptions {
  FeatureMode feature_mode = FeatureMode::OneHot;
  std::size_t min_non_o = kDefaultMinNonO;
  double train_fraction = 0.8;
  std::optional<std::uint64_t> split_seed;  // shuffled split when set
  TrainConfig train;
};

struct PipelineConfig {
  GroupingStrategy grouping = GroupingStrategy::MaxLogit;
  VotePolicy vote;
  StackingOptions stacking;
  EvalMode eval_mode = EvalMode::BIOStrict;
  bool include_o_in_macro = true;
  std::string mapping_path;
  LinkOptions linking;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;

  /// Overrides every seed (vote tie-break, stacking init and shuffling).
  void set_seed(std::uint64_t seed);

  Json to_json() const;
  /// Missing keys keep their defaults. Throws InvalidArgument on bad values.
  static PipelineConfig from_json(const Json& j);
  static PipelineConfig load(const std::string& path);
};

/// {"command", "config_hash", "config", "seeds"} block embedded in outputs.
Json provenance(std::string_view command, const PipelineConfig& config);

/// Groups every document of every logit file. All files must hold the same
/// documents with the same word counts (CoverageGap otherwise); with `gold`
/// the counts must also match the gold words.
std::vector<PredictionFile> cmd_group(std::span<const LogitFile> files,
                                      const PipelineConfig& config,
                                      std::span<const Document> gold = {});

/// Word-level vote across prediction files, documents in the first file's
/// order. Throws CoverageGap, LengthMismatch, InvalidThreshold.
PredictionFile cmd_vote(std::span<const PredictionFile> files, const PipelineConfig& config);

struct StackTrainOutput {
  StackedModel model;
  TrainResult training;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
  Json report;
};

StackTrainOutput cmd_stack_train(std::span<const PredictionFile> files,
                                 std::span<const Document> gold, const PipelineConfig& config);

PredictionFile cmd_stack_predict(std::span<const PredictionFile> files, const StackedModel& model,
                                 const PipelineConfig& config);

struct EvalOutput {
  ClassReport report;
  ConfusionMatrix confusion;
};

/// Evaluates over the concatenation of all gold documents (gold order).
EvalOutput cmd_eval(const PredictionFile& predictions, std::span<const Document> gold,
                    EvalMode mode, bool include_o_in_macro);

Json report_to_json(const ClassReport& report);
Json confusion_to_json(const ConfusionMatrix& matrix);
Json link_result_to_json(const LinkResult& result);

/// Links the entity runs of every predicted document; words come from `docs`.
Json cmd_link(const PredictionFile& predictions, std::span<const Document> docs,
              const MappingTable& table, const LinkOptions& options);

struct PipelineInputs {
  std::vector<std::string> logit_paths;
  std::string gold_path;
  std::string out_dir;
  bool with_stacking = false;
};

/// group -> vote -> eval (-> stack-train/predict -> eval) writing every
/// artifact into out_dir. Returns the list of files written.
std::vector<std::string> run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

}  // namespace medner
