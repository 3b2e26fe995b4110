#include "medner/types.hpp"

#include <algorithm>

#include "medner/error.hpp"

namespace medner {

void Document::validate() const {
  if (!gold_labels) return;
  if (gold_labels->size() != words.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "document '" + doc_id + "': " + std::to_string(words.size()) + " words but " +
                    std::to_string(gold_labels->size()) + " gold labels");
  }
  for (LabelId id : *gold_labels) {
    if (id >= kNumLabels) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "document '" + doc_id + "': gold label index " + std::to_string(id));
    }
  }
}

std::size_t ModelRun::inferred_word_count() const noexcept {
  std::size_t n = 0;
  for (const auto& sw : subwords) n = std::max(n, sw.word_index + 1);
  return n;
}

std::vector<LabelId> labels_of(const std::vector<WordPrediction>& words) {
  std::vector<LabelId> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(w.label);
  return out;
}

}  // namespace medner
