#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medner/labels.hpp"

namespace medner {

/// One row of the mapping sheet as read from disk; fields may be empty.
struct RawMappingRow {
  std::string snomed_code;
  std::string bnf_code;
  std::string dmd_code;
  std::string description;
};

struct MappingEntry {
  std::string snomed_code;
  std::string bnf_code;
  std::optional<std::string> dmd_code;
  std::string description;
  std::string normalized;           // lowercase, single-spaced description
  std::vector<std::string> tokens;  // normalized split on spaces
};

struct CleaningStats {
  std::size_t input = 0;
  std::size_t malformed = 0;
  std::size_t duplicates = 0;
  std::size_t stop_word_filtered = 0;
  std::size_t kept = 0;
};

const std::set<std::string>& default_stop_words();

/// Lowercase (ASCII) and collapse runs of whitespace to one space, trimmed.
std::string normalize_text(std::string_view text);

/// Edit distance over Unicode code points (invalid UTF-8 bytes count as
/// single units).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(a, b) / max(|a|, |b|) in code points; 1 for two empty
/// strings.
double similarity(std::string_view a, std::string_view b);

class MappingTable {
 public:
  MappingTable() = default;

  /// Drops malformed rows (no SNOMED code or description), then duplicates on
  /// (normalized description, SNOMED code) keeping the first, then rows whose
  /// normalized description contains a stop word as a whole word.
  static MappingTable load_and_clean(std::span<const RawMappingRow> rows,
                                     std::set<std::string> stop_words = default_stop_words());

  const std::vector<MappingEntry>& entries() const noexcept { return entries_; }
  const std::set<std::string>& stop_words() const noexcept { return stop_words_; }
  const CleaningStats& stats() const noexcept { return stats_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  /// The cleaned entries as raw rows, e.g. to write the table back out.
  std::vector<RawMappingRow> to_rows() const;

 private:
  std::vector<MappingEntry> entries_;
  std::set<std::string> stop_words_;
  CleaningStats stats_;
};

/// Reads a comma-separated mapping sheet with a header row. Columns are found
/// by header name (case-insensitive, spaces as underscores): snomed_code,
/// bnf_code and description are required, dmd_code is optional.
std::vector<RawMappingRow> read_mapping_csv(std::istream& in);
MappingTable load_mapping_file(const std::string& path,
                               std::set<std::string> stop_words = default_stop_words());
void write_mapping_csv(std::ostream& out, std::span<const RawMappingRow> rows);

/// Generic RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
std::vector<std::vector<std::string>> read_csv(std::istream& in);

struct UrlTemplates {
  // "{code}" and "{query}" are substituted.
  std::string snomed = "https://termbrowser.nhs.uk/?perspective=full&conceptId1={code}";
  std::string bnf = "https://bnf.nice.org.uk/search/?q={query}";
};

std::string percent_encode(std::string_view text);
std::string snomed_url(const UrlTemplates& urls, std::string_view code);
std::string bnf_url(const UrlTemplates& urls, std::string_view query);

struct LinkMatch {
  MappingEntry entry;
  double score = 0.0;
};

struct LinkResult {
  std::string query;
  std::optional<LinkMatch> matched;
  std::optional<std::string> snomed_url;
  std::string bnf_url;
};

inline constexpr double kDefaultLinkThreshold = 0.8;

/// Best of similarity(query, token) over the entry's tokens and
/// similarity(query, description).
double entry_similarity(std::string_view normalized_query, const MappingEntry& entry);

/// Best-scoring entry at or above `threshold`, first in table order on ties.
/// The BNF URL is a keyword search and is always filled. Throws EmptyQuery.
LinkResult fuzzy_link(std::string_view query, const MappingTable& table,
                      double threshold = kDefaultLinkThreshold, const UrlTemplates& urls = {});

struct EntityRun {
  std::size_t begin = 0;  // first word
  std::size_t end = 0;    // one past the last word
  LabelId entity_class = 0;  // index into the collapsed vocabulary
};

/// Maximal runs of consecutive words whose labels share an entity class X,
/// whether B-X or I-X.
std::vector<EntityRun> entity_runs(std::span<const LabelId> labels);

struct LinkOptions {
  double threshold = kDefaultLinkThreshold;
  UrlTemplates urls;
  // Collapsed class indices to link; empty means Drug only.
  std::vector<LabelId> classes;
};

struct DocumentLink {
  EntityRun run;
  LinkResult result;
};

/// One LinkResult per entity run, query = the run's words joined by single
/// spaces. Throws LengthMismatch.
std::vector<DocumentLink> link_document(std::span<const std::string> words,
                                        std::span<const LabelId> labels,
                                        const MappingTable& table, const LinkOptions& options = {});

}  // namespace medner
