#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medner/labels.hpp"

namespace medner {

enum class EvalMode {
  BIOStrict,  // 19 classes; B-X and I-X are different
  Collapsed,  // 10 classes; B-X and I-X both count as X
};

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view name);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold occurrences
  std::size_t predicted = 0;  // predicted occurrences
  std::size_t true_positive = 0;

  /// Whether the class takes part in the averages (it occurs in gold or pred).
  bool present() const noexcept { return support > 0 || predicted > 0; }
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassReport {
  EvalMode mode = EvalMode::BIOStrict;
  bool include_o_in_macro = true;
  std::vector<std::string> class_names;  // canonical order for the mode
  std::vector<ClassScores> per_class;    // parallel to class_names
  Averages macro;
  Averages weighted;
  double accuracy = 0.0;
  std::size_t total_support = 0;
  std::size_t correct = 0;
};

struct ConfusionMatrix {
  EvalMode mode = EvalMode::BIOStrict;
  std::vector<std::string> class_names;
  std::vector<std::size_t> counts;  // row = gold, column = predicted

  std::size_t size() const noexcept { return class_names.size(); }
  std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold * size() + pred]; }
  std::size_t total() const noexcept;
  std::size_t diagonal() const noexcept;
};

/// Per-class precision/recall/F1 with macro and support-weighted averages.
/// A metric whose denominator is zero is 0. Classes absent from both gold
/// and predictions are left out of the averages; "O" can additionally be
/// left out of the macro average. Throws LengthMismatch, EmptyInput,
/// IndexOutOfRange.
ClassReport report(std::span<const LabelId> gold, std::span<const LabelId> pred,
                   EvalMode mode = EvalMode::BIOStrict, bool include_o_in_macro = true);

ConfusionMatrix confusion(std::span<const LabelId> gold, std::span<const LabelId> pred,
                          EvalMode mode = EvalMode::BIOStrict);

/// Plain-text table: one row per present class, then accuracy, macro avg,
/// weighted avg.
std::string render_report(const ClassReport& report, int digits = 4);
std::string render_confusion(const ConfusionMatrix& matrix);

}  // namespace medner
