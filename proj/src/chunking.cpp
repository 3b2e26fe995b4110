#include "medner/chunking.hpp"

#include "medner/error.hpp"

namespace medner {

void ChunkSpec::validate() const {
  if (max_len == 0 || soft_start == 0 || soft_start >= max_len) {
    throw Error(ErrorCode::InvalidArgument,
                "chunk spec requires 0 < soft_start < max_len (got soft_start=" +
                    std::to_string(soft_start) + ", max_len=" + std::to_string(max_len) + ")");
  }
}

std::vector<ChunkRange> chunk_ranges(std::span<const std::string> words, const ChunkSpec& spec) {
  spec.validate();
  std::vector<ChunkRange> out;
  std::size_t start = 0;
  while (start < words.size()) {
    const std::size_t remaining = words.size() - start;
    if (remaining <= spec.max_len) {
      out.push_back({start, words.size()});
      break;
    }
    std::size_t len = spec.max_len;
    // 0-based offset soft_start is 1-indexed position soft_start + 1.
    for (std::size_t off = spec.soft_start; off < spec.max_len; ++off) {
      if (words[start + off] == spec.boundary_token) {
        len = off + 1;
        break;
      }
    }
    out.push_back({start, start + len});
    start += len;
  }
  return out;
}

std::vector<std::span<const std::string>> chunk(std::span<const std::string> words,
                                                const ChunkSpec& spec) {
  std::vector<std::span<const std::string>> out;
  for (const auto& r : chunk_ranges(words, spec)) {
    out.push_back(words.subspan(r.begin, r.size()));
  }
  return out;
}

}  // namespace medner
