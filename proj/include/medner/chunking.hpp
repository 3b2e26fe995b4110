#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace medner {

struct ChunkSpec {
  std::size_t max_len = 128;
  std::size_t soft_start = 100;
  std::string boundary_token = ".";

  void validate() const;
};

/// Half-open word range [begin, end) into the chunked sequence.
struct ChunkRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const ChunkRange&) const = default;
};

/// Splits a word sequence into chunks of at most spec.max_len words.
///
/// A chunk that cannot hold all remaining words ends right after the first
/// boundary token found at a 1-indexed in-chunk position in
/// (soft_start, max_len]; without one it is cut at max_len. Positions are
/// counted from the start of each chunk. Remaining input that fits in one
/// chunk is emitted whole.
std::vector<ChunkRange> chunk_ranges(std::span<const std::string> words,
                                     const ChunkSpec& spec = {});

std::vector<std::span<const std::string>> chunk(std::span<const std::string> words,
                                                const ChunkSpec& spec = {});

}  // namespace medner
