#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medner/chunking.hpp"
#include "medner/error.hpp"
#include "medner/pipeline.hpp"

namespace httplib {
class Server;
}

namespace medner {

/// Produces subword logits for raw words. Real model inference plugs in
/// here; the project ships a lexicon-driven labeler for demos and tests.
class WordLabeler {
 public:
  virtual ~WordLabeler() = default;
  virtual const std::string& model_id() const = 0;
  virtual ModelRun label(const std::string& doc_id, std::span<const std::string> words) const = 0;
};

/// Labels words from a lexicon (drug names from the mapping table plus a
/// small built-in vocabulary for forms, routes, frequencies, etc.) and a
/// strength pattern like "500mg". Each word is cut into pieces of
/// `piece_size` characters to mimic a subword tokenizer.
class DictionaryLabeler final : public WordLabeler {
 public:
  DictionaryLabeler(std::string model_id, const MappingTable* table, std::size_t piece_size = 4);

  const std::string& model_id() const override { return model_id_; }
  ModelRun label(const std::string& doc_id, std::span<const std::string> words) const override;

  /// Collapsed class for one word, ignoring context (0 = O).
  LabelId word_class(std::string_view word) const;

 private:
  std::string model_id_;
  std::size_t piece_size_;
  std::vector<std::pair<std::string, LabelId>> lexicon_;  // sorted by word
};

std::vector<std::unique_ptr<WordLabeler>> default_labelers(const MappingTable* table,
                                                           std::size_t count = 3);

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

/// Whitespace split, with leading/trailing punctuation split off as its own
/// token so sentence-final "." becomes a word.
std::vector<Token> tokenize(std::string_view text);

class AnnotationService {
 public:
  AnnotationService(PipelineConfig config, std::vector<std::unique_ptr<WordLabeler>> labelers,
                    std::optional<MappingTable> table, std::optional<StackedModel> stacked);

  // Handlers take and return JSON bodies; they throw Error on bad input.
  Json annotate(const Json& request) const;
  Json link(const Json& request) const;
  Json labels() const;
  Json health() const;

  /// Registers the HTTP routes (and the static UI directory, when set).
  void mount(httplib::Server& server) const;

  const ChunkSpec& chunk_spec() const noexcept { return chunk_spec_; }

 private:
  std::vector<LabelId> label_words(std::span<const std::string> words, GroupingStrategy strategy,
                                   const std::string& ensemble, const VotePolicy& policy) const;

  PipelineConfig config_;
  std::vector<std::unique_ptr<WordLabeler>> labelers_;
  std::optional<MappingTable> table_;
  std::optional<StackedModel> stacked_;
  ChunkSpec chunk_spec_;
};

/// HTTP status for a handler error: 503 for Unavailable, 400 otherwise
/// (500 for non-input failures).
int http_status(ErrorCode code);

}  // namespace medner
