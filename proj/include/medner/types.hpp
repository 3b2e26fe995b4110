#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "medner/labels.hpp"

namespace medner {

/// Per-label scores in canonical label order.
using Logits = std::array<double, kNumLabels>;

struct Document {
  std::string doc_id;
  std::vector<std::string> words;
  std::optional<std::vector<LabelId>> gold_labels;

  // Throws LengthMismatch / IndexOutOfRange.
  void validate() const;
};

struct SubwordPrediction {
  std::string text;
  std::size_t word_index = 0;
  Logits logits{};
};

/// One model's subword-level output for one document.
struct ModelRun {
  std::string model_id;
  std::string doc_id;
  std::vector<SubwordPrediction> subwords;

  /// Highest word_index + 1, or 0 when there are no subwords.
  std::size_t inferred_word_count() const noexcept;
};

struct WordPrediction {
  std::size_t word_index = 0;
  LabelId label = kOutside;
  std::optional<Logits> logits;
};

std::vector<LabelId> labels_of(const std::vector<WordPrediction>& words);

}  // namespace medner
