#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "medner/types.hpp"

namespace medner {

/// How one model's subword logits become a single label per word.
enum class GroupingStrategy {
  FirstToken,    // label and logits of the word's first subword
  MaxLogit,      // subword holding the single highest logit of the word
  AverageLogit,  // argmax of the element-wise mean over the word's subwords
};

std::string_view to_string(GroupingStrategy strategy);
GroupingStrategy parse_grouping_strategy(std::string_view name);

/// Groups `run` into exactly `num_words` word predictions (word_index
/// 0..num_words-1). Throws UncoveredWord if a word has no subword and
/// UnorderedSubwords if word indices decrease or exceed num_words.
std::vector<WordPrediction> group(const ModelRun& run, GroupingStrategy strategy,
                                  std::size_t num_words);

/// Same, with the word count taken from the run itself.
std::vector<WordPrediction> group(const ModelRun& run, GroupingStrategy strategy);

}  // namespace medner
