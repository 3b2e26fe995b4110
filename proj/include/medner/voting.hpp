#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "medner/types.hpp"

namespace medner {

enum class VoteKind {
  MajorityOrO,  // a label needs `threshold` votes, otherwise "O"
  MaxVote,      // plurality label, ties broken per TieBreak
};

enum class TieBreak { Alphabetical, Random };

struct VotePolicy {
  VoteKind kind = VoteKind::MaxVote;
  // Unset means ceil(N / 2) for N voters.
  std::optional<std::size_t> threshold;
  TieBreak tie_break = TieBreak::Alphabetical;
  std::uint64_t seed = 0;

  std::size_t threshold_for(std::size_t n_voters) const;
};

std::string_view to_string(VoteKind kind);
std::string_view to_string(TieBreak tie);
VoteKind parse_vote_kind(std::string_view name);
TieBreak parse_tie_break(std::string_view name);

/// Position of `id` in alphabetical label-string order with "O" moved last.
/// Lower rank wins alphabetical tie-breaks.
std::size_t alphabetical_rank(LabelId id);

/// Stateful voter: a Random tie-break draws from a generator seeded once from
/// the policy, so one Voter should serve one document stream.
class Voter {
 public:
  explicit Voter(VotePolicy policy);

  LabelId vote(std::span<const LabelId> labels);

  const VotePolicy& policy() const noexcept { return policy_; }

 private:
  LabelId break_tie(std::span<const LabelId> tied);

  VotePolicy policy_;
  std::mt19937_64 rng_;
};

/// Single-word vote with a fresh Voter for `policy`.
LabelId vote_word(std::span<const LabelId> labels, const VotePolicy& policy);

/// Position-wise vote over N aligned per-model word sequences. The output
/// carries no logits. Throws LengthMismatch when models disagree on length or
/// word indices, InvalidThreshold when the threshold exceeds N.
std::vector<WordPrediction> vote_document(std::span<const std::vector<WordPrediction>> per_model,
                                          Voter& voter);
std::vector<WordPrediction> vote_document(std::span<const std::vector<WordPrediction>> per_model,
                                          const VotePolicy& policy);

}  // namespace medner
