// Writes a random gold file plus one logit file per model, for demos and
// smoke-testing the pipeline without real model outputs.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "medner/error.hpp"
#include "medner/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic NER corpus with noisy per-model subword logits"};
  medner::SyntheticCorpusSpec spec;
  std::string out_dir;
  app.add_option("--out-dir", out_dir, "Output directory")->required();
  app.add_option("--docs", spec.n_docs, "Number of documents");
  app.add_option("--words", spec.words_per_doc, "Words per document");
  app.add_option("--models", spec.n_models, "Number of base models")->check(CLI::PositiveNumber);
  app.add_option("--error-rate", spec.error_rate, "Per-word model error rate")->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", spec.seed, "Random seed");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto corpus = medner::make_synthetic_corpus(spec);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    medner::save_gold_file((dir / "gold.jsonl").string(), corpus.gold);
    std::cout << (dir / "gold.jsonl").string() << '\n';
    for (const auto& m : corpus.models) {
      const auto path = (dir / ("logits." + m.model_id + ".jsonl")).string();
      medner::save_logit_file(path, m);
      std::cout << path << '\n';
    }
  } catch (const medner::Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
