#pragma once

#include <cstdint>
#include <vector>

#include "medner/formats.hpp"

namespace medner {

/// Knobs for a random corpus with gold labels and N noisy base models.
struct SyntheticCorpusSpec {
  std::size_t n_docs = 20;
  std::size_t words_per_doc = 60;
  std::size_t n_models = 8;
  double entity_rate = 0.25;  // chance a word starts an entity
  double error_rate = 0.1;    // chance a model mislabels a word
  std::size_t max_pieces = 3; // subwords per word, drawn per model
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Document> gold;
  std::vector<LogitFile> models;
};

/// Deterministic given spec.seed. Every model covers every word of every
/// document; "." words appear so chunking has boundaries to find.
SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace medner
