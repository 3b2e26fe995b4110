#include "medner/voting.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

#include "medner/error.hpp"

namespace medner {

namespace {

std::array<std::size_t, kNumLabels> make_alphabetical_ranks() {
  const auto& names = LabelScheme::canonical().labels();
  std::array<LabelId, kNumLabels> order{};
  std::iota(order.begin(), order.end(), LabelId{0});
  std::sort(order.begin(), order.end(), [&](LabelId a, LabelId b) {
    if (a == kOutside || b == kOutside) return b == kOutside && a != kOutside;
    return names[a] < names[b];
  });
  std::array<std::size_t, kNumLabels> rank{};
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

LabelId alphabetical_min(std::span<const LabelId> tied) {
  return *std::min_element(tied.begin(), tied.end(), [](LabelId a, LabelId b) {
    return alphabetical_rank(a) < alphabetical_rank(b);
  });
}

}  // namespace

std::size_t alphabetical_rank(LabelId id) {
  static const auto ranks = make_alphabetical_ranks();
  if (id >= kNumLabels) {
    throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(id) + " out of range");
  }
  return ranks[id];
}

std::size_t VotePolicy::threshold_for(std::size_t n_voters) const {
  const std::size_t t = threshold.value_or((n_voters + 1) / 2);
  if (t == 0 || t > n_voters) {
    throw Error(ErrorCode::InvalidThreshold, "vote threshold " + std::to_string(t) +
                                                 " is not in 1.." + std::to_string(n_voters));
  }
  return t;
}

std::string_view to_string(VoteKind kind) {
  return kind == VoteKind::MajorityOrO ? "majority_or_o" : "max_vote";
}

std::string_view to_string(TieBreak tie) {
  return tie == TieBreak::Alphabetical ? "alphabetical" : "random";
}

VoteKind parse_vote_kind(std::string_view name) {
  if (name == "majority_or_o" || name == "majority") return VoteKind::MajorityOrO;
  if (name == "max_vote" || name == "max") return VoteKind::MaxVote;
  throw Error(ErrorCode::InvalidArgument, "unknown vote policy '" + std::string(name) + "'");
}

TieBreak parse_tie_break(std::string_view name) {
  if (name == "alphabetical") return TieBreak::Alphabetical;
  if (name == "random") return TieBreak::Random;
  throw Error(ErrorCode::InvalidArgument, "unknown tie break '" + std::string(name) + "'");
}

Voter::Voter(VotePolicy policy) : policy_(policy), rng_(policy.seed) {}

LabelId Voter::break_tie(std::span<const LabelId> tied) {
  if (tied.size() == 1) return tied.front();
  if (policy_.tie_break == TieBreak::Alphabetical) return alphabetical_min(tied);
  // Plain modulo keeps draws identical across standard libraries.
  return tied[static_cast<std::size_t>(rng_() % tied.size())];
}

LabelId Voter::vote(std::span<const LabelId> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptyVote, "vote over zero models");

  std::array<std::size_t, kNumLabels> counts{};
  for (LabelId id : labels) {
    if (id >= kNumLabels) {
      throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(id) + " out of range");
    }
    ++counts[id];
  }

  std::size_t floor = 1;
  if (policy_.kind == VoteKind::MajorityOrO) floor = policy_.threshold_for(labels.size());

  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  if (top < floor) return kOutside;

  // Candidates in canonical order so Random draws are reproducible.
  std::vector<LabelId> tied;
  for (LabelId id = 0; id < kNumLabels; ++id) {
    if (counts[id] == top) tied.push_back(id);
  }
  if (policy_.kind == VoteKind::MajorityOrO) return alphabetical_min(tied);
  return break_tie(tied);
}

LabelId vote_word(std::span<const LabelId> labels, const VotePolicy& policy) {
  Voter voter(policy);
  return voter.vote(labels);
}

std::vector<WordPrediction> vote_document(std::span<const std::vector<WordPrediction>> per_model,
                                          Voter& voter) {
  if (per_model.empty()) throw Error(ErrorCode::EmptyVote, "vote over zero models");
  if (voter.policy().kind == VoteKind::MajorityOrO) voter.policy().threshold_for(per_model.size());

  const std::size_t n_words = per_model.front().size();
  for (std::size_t m = 1; m < per_model.size(); ++m) {
    if (per_model[m].size() != n_words) {
      throw Error(ErrorCode::LengthMismatch, "model " + std::to_string(m) + " has " +
                                                 std::to_string(per_model[m].size()) +
                                                 " words, model 0 has " + std::to_string(n_words));
    }
  }

  std::vector<WordPrediction> out;
  out.reserve(n_words);
  std::vector<LabelId> column(per_model.size());
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::size_t word_index = per_model.front()[w].word_index;
    for (std::size_t m = 0; m < per_model.size(); ++m) {
      if (per_model[m][w].word_index != word_index) {
        throw Error(ErrorCode::LengthMismatch,
                    "model " + std::to_string(m) + " is misaligned at position " + std::to_string(w));
      }
      column[m] = per_model[m][w].label;
    }
    out.push_back({word_index, voter.vote(column), std::nullopt});
  }
  return out;
}

std::vector<WordPrediction> vote_document(std::span<const std::vector<WordPrediction>> per_model,
                                          const VotePolicy& policy) {
  Voter voter(policy);
  return vote_document(per_model, voter);
}

}  // namespace medner
