#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medner/types.hpp"

namespace medner {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// All files are UTF-8, one JSON object per line.
//
// Logit file:
//   {"format_version":1,"kind":"logits","model_id":"m","labels":[19 labels]}
//   {"doc_id":"d","num_words":3,"subwords":[{"text":"Para","word_index":0,"logits":[19]},...]}
//   (num_words is optional; without it the word count is max word_index + 1)
//
// Gold file (no header):
//   {"doc_id":"d","words":["..."],"labels":["B-Drug",...]}
//
// Prediction file:
//   {"format_version":1,"kind":"predictions","model_id":"m","labels":[...],"provenance":{...}}
//   {"doc_id":"d","labels":["O",...],"logits":[[19],...]}   (logits optional)

struct LogitDocument {
  std::string doc_id;
  std::optional<std::size_t> num_words;
  std::vector<SubwordPrediction> subwords;

  std::size_t word_count() const noexcept;
};

struct LogitFile {
  std::string model_id;
  std::vector<LogitDocument> documents;

  ModelRun run(std::size_t doc) const;
};

struct PredictionDocument {
  std::string doc_id;
  std::vector<WordPrediction> words;
};

struct PredictionFile {
  std::string model_id;
  Json provenance = Json::object();
  std::vector<PredictionDocument> documents;

  const PredictionDocument* find(const std::string& doc_id) const;
};

/// Throws ParseError, HeaderMismatch (labels differ from the canonical list).
LogitFile read_logit_file(std::istream& in);
void write_logit_file(std::ostream& out, const LogitFile& file);

/// Documents with gold labels; with require_labels = false the labels field
/// may be omitted (a plain word file).
std::vector<Document> read_gold_file(std::istream& in, bool require_labels = true);
void write_gold_file(std::ostream& out, std::span<const Document> docs);

PredictionFile read_prediction_file(std::istream& in);
void write_prediction_file(std::ostream& out, const PredictionFile& file);

// Path wrappers; throw IoError when the file cannot be opened.
LogitFile load_logit_file(const std::string& path);
std::vector<Document> load_gold_file(const std::string& path, bool require_labels = true);
PredictionFile load_prediction_file(const std::string& path);
void save_logit_file(const std::string& path, const LogitFile& file);
void save_gold_file(const std::string& path, std::span<const Document> docs);
void save_prediction_file(const std::string& path, const PredictionFile& file);

/// 64-bit FNV-1a of `text`, as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace medner
