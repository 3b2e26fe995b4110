#include "medner/synthetic.hpp"

#include <random>
#include <string>

namespace medner {

namespace {

// Portable draws: the standard distributions are implementation-defined.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string random_word(std::mt19937_64& rng) {
  static const char* letters = "abcdefghijklmnopqrstuvwxyz";
  const std::size_t len = 2 + below(rng, 9);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(letters[below(rng, 26)]);
  return w;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  SyntheticCorpus corpus;

  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    Document doc;
    doc.doc_id = "doc" + std::to_string(d);
    std::vector<LabelId> gold;
    while (doc.words.size() < spec.words_per_doc) {
      if (unit(rng) < spec.entity_rate) {
        const LabelId cls = 1 + below(rng, kNumClasses);
        const std::size_t len = 1 + below(rng, 3);
        for (std::size_t k = 0; k < len && doc.words.size() < spec.words_per_doc; ++k) {
          doc.words.push_back(random_word(rng));
          gold.push_back(k == 0 ? 2 * cls - 1 : 2 * cls);
        }
      } else {
        doc.words.push_back(unit(rng) < 0.08 ? std::string(".") : random_word(rng));
        gold.push_back(kOutside);
      }
    }
    doc.gold_labels = std::move(gold);
    corpus.gold.push_back(std::move(doc));
  }

  for (std::size_t m = 0; m < spec.n_models; ++m) {
    LogitFile file;
    file.model_id = "model" + std::to_string(m);
    for (const auto& doc : corpus.gold) {
      LogitDocument ld;
      ld.doc_id = doc.doc_id;
      ld.num_words = doc.words.size();
      for (std::size_t w = 0; w < doc.words.size(); ++w) {
        LabelId label = (*doc.gold_labels)[w];
        if (unit(rng) < spec.error_rate) label = below(rng, kNumLabels);
        const std::size_t pieces = 1 + below(rng, std::max<std::size_t>(spec.max_pieces, 1));
        const std::string& word = doc.words[w];
        const std::size_t step = std::max<std::size_t>(1, (word.size() + pieces - 1) / pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
          SubwordPrediction sw;
          const std::size_t at = std::min(word.size(), p * step);
          sw.text = (p == 0 ? "" : "##") + word.substr(at, step);
          sw.word_index = w;
          for (double& v : sw.logits) v = 2.0 * unit(rng) - 1.0;
          sw.logits[label] += p == 0 ? 4.0 : 2.0 + 2.0 * unit(rng);
          ld.subwords.push_back(std::move(sw));
        }
      }
      file.documents.push_back(std::move(ld));
    }
    corpus.models.push_back(std::move(file));
  }
  return corpus;
}

}  // namespace medner
