#include "medner/grouping.hpp"

#include <span>
#include <string>

#include "medner/error.hpp"

namespace medner {

namespace {

WordPrediction first_token(std::span<const SubwordPrediction> pieces, std::size_t word) {
  const Logits& l = pieces.front().logits;
  return {word, argmax(l), l};
}

WordPrediction max_logit(std::span<const SubwordPrediction> pieces, std::size_t word) {
  std::size_t best_piece = 0;
  std::size_t best_label = 0;
  double best = pieces[0].logits[0];
  // Strict '>' keeps the earliest subword, then the lowest label, on ties.
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (pieces[p].logits[k] > best) {
        best = pieces[p].logits[k];
        best_piece = p;
        best_label = k;
      }
    }
  }
  return {word, best_label, pieces[best_piece].logits};
}

WordPrediction average_logit(std::span<const SubwordPrediction> pieces, std::size_t word) {
  Logits mean{};
  for (const auto& piece : pieces) {
    for (std::size_t k = 0; k < kNumLabels; ++k) mean[k] += piece.logits[k];
  }
  const double n = static_cast<double>(pieces.size());
  for (double& v : mean) v /= n;
  return {word, argmax(mean), mean};
}

}  // namespace

std::string_view to_string(GroupingStrategy strategy) {
  switch (strategy) {
    case GroupingStrategy::FirstToken: return "first_token";
    case GroupingStrategy::MaxLogit: return "max_logit";
    case GroupingStrategy::AverageLogit: return "average_logit";
  }
  return "unknown";
}

GroupingStrategy parse_grouping_strategy(std::string_view name) {
  if (name == "first_token" || name == "first") return GroupingStrategy::FirstToken;
  if (name == "max_logit" || name == "max") return GroupingStrategy::MaxLogit;
  if (name == "average_logit" || name == "average") return GroupingStrategy::AverageLogit;
  throw Error(ErrorCode::InvalidArgument, "unknown grouping strategy '" + std::string(name) + "'");
}

std::vector<WordPrediction> group(const ModelRun& run, GroupingStrategy strategy,
                                  std::size_t num_words) {
  const std::span<const SubwordPrediction> subwords(run.subwords);
  std::vector<WordPrediction> out;
  out.reserve(num_words);

  for (std::size_t k = 1; k < subwords.size(); ++k) {
    if (subwords[k].word_index < subwords[k - 1].word_index) {
      throw Error(ErrorCode::UnorderedSubwords, run.model_id + "/" + run.doc_id +
                                                    ": subwords are not ordered by word_index");
    }
  }

  std::size_t i = 0;
  while (i < subwords.size()) {
    const std::size_t word = subwords[i].word_index;
    if (word >= num_words) {
      throw Error(ErrorCode::UnorderedSubwords,
                  run.model_id + "/" + run.doc_id + ": subword word_index " +
                      std::to_string(word) + " exceeds word count " + std::to_string(num_words));
    }
    if (word < out.size()) {
      throw Error(ErrorCode::UnorderedSubwords,
                  run.model_id + "/" + run.doc_id + ": subwords of word " + std::to_string(word) +
                      " are not contiguous");
    }
    if (word > out.size()) {
      throw Error(ErrorCode::UncoveredWord, run.model_id + "/" + run.doc_id + ": word " +
                                                std::to_string(out.size()) + " has no subwords");
    }
    std::size_t j = i + 1;
    while (j < subwords.size() && subwords[j].word_index == word) ++j;
    const auto pieces = subwords.subspan(i, j - i);
    switch (strategy) {
      case GroupingStrategy::FirstToken: out.push_back(first_token(pieces, word)); break;
      case GroupingStrategy::MaxLogit: out.push_back(max_logit(pieces, word)); break;
      case GroupingStrategy::AverageLogit: out.push_back(average_logit(pieces, word)); break;
    }
    i = j;
  }
  if (out.size() < num_words) {
    throw Error(ErrorCode::UncoveredWord, run.model_id + "/" + run.doc_id + ": word " +
                                              std::to_string(out.size()) + " has no subwords");
  }
  return out;
}

std::vector<WordPrediction> group(const ModelRun& run, GroupingStrategy strategy) {
  return group(run, strategy, run.inferred_word_count());
}

}  // namespace medner
