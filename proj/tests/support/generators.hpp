#pragma once

// Small random generators for property tests. Everything is driven by an
// explicit seed so failures reproduce.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "medner/formats.hpp"

namespace gen {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  bool chance(double p) { return unit() < p; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

inline std::string word(Rng& rng) {
  std::string w;
  const std::size_t len = rng.between(1, 8);
  for (std::size_t i = 0; i < len; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
  return w;
}

// Words with "." sprinkled in at `stop_rate`.
inline std::vector<std::string> words(Rng& rng, std::size_t n, double stop_rate) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.chance(stop_rate) ? "." : word(rng));
  return out;
}

inline medner::LabelId label(Rng& rng) { return rng.below(medner::kNumLabels); }

// Labels skewed towards "O" the way real corpora are.
inline std::vector<medner::LabelId> labels(Rng& rng, std::size_t n, double o_rate = 0.5) {
  std::vector<medner::LabelId> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.chance(o_rate) ? 0 : label(rng));
  return out;
}

// Logits on a coarse grid so exact ties actually occur.
inline medner::Logits logits(Rng& rng, bool coarse = false) {
  medner::Logits v{};
  for (double& x : v) {
    x = coarse ? static_cast<double>(rng.below(5)) - 2.0 : rng.uniform(-6.0, 6.0);
  }
  return v;
}

inline medner::ModelRun run(Rng& rng, std::size_t n_words, std::size_t max_pieces, bool coarse) {
  medner::ModelRun r;
  r.model_id = "m";
  r.doc_id = "d";
  for (std::size_t w = 0; w < n_words; ++w) {
    const std::size_t pieces = rng.between(1, max_pieces);
    for (std::size_t p = 0; p < pieces; ++p) {
      r.subwords.push_back({p == 0 ? "w" : "##w", w, logits(rng, coarse)});
    }
  }
  return r;
}

inline std::vector<medner::Document> documents(Rng& rng, std::size_t n, std::size_t max_words) {
  std::vector<medner::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    medner::Document d;
    d.doc_id = "doc-" + std::to_string(i);
    const std::size_t len = rng.between(1, max_words);
    d.words = words(rng, len, 0.05);
    // Non-ASCII and JSON-special text must survive a round trip.
    if (rng.chance(0.3)) d.words[0] = rng.chance(0.5) ? "naïve\"q\\" : "μg/5ml";
    d.gold_labels = labels(rng, len);
    docs.push_back(std::move(d));
  }
  return docs;
}

inline medner::LogitFile logit_file(Rng& rng, const std::vector<medner::Document>& docs,
                                    const std::string& model_id) {
  medner::LogitFile f;
  f.model_id = model_id;
  for (const auto& d : docs) {
    medner::LogitDocument ld;
    ld.doc_id = d.doc_id;
    if (rng.chance(0.5)) ld.num_words = d.words.size();
    ld.subwords = run(rng, d.words.size(), 3, false).subwords;
    f.documents.push_back(std::move(ld));
  }
  return f;
}

inline medner::PredictionFile prediction_file(Rng& rng, const std::vector<medner::Document>& docs,
                                              bool with_logits) {
  medner::PredictionFile f;
  f.model_id = "pred";
  f.provenance = medner::Json{{"command", "test"}, {"seed", 7}};
  for (const auto& d : docs) {
    medner::PredictionDocument pd;
    pd.doc_id = d.doc_id;
    for (std::size_t w = 0; w < d.words.size(); ++w) {
      medner::WordPrediction wp;
      wp.word_index = w;
      wp.label = label(rng);
      if (with_logits) wp.logits = logits(rng);
      pd.words.push_back(wp);
    }
    f.documents.push_back(std::move(pd));
  }
  return f;
}

}  // namespace gen
