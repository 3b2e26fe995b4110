#include "medner/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "medner/error.hpp"

namespace medner {

namespace {

template <typename T>
void read_opt(const Json& obj, const char* key, T& dst) {
  if (!obj.is_object()) return;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    dst = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  auto it = j.find(key);
  return it == j.end() ? empty : *it;
}

// doc_id -> position, for aligning files by id.
std::map<std::string, std::size_t> index_docs(const PredictionFile& f) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < f.documents.size(); ++i) idx[f.documents[i].doc_id] = i;
  return idx;
}

// Per-model word sequences for `doc_id`, checked for presence and length.
std::vector<std::vector<WordPrediction>> gather(std::span<const PredictionFile> files,
                                                const std::string& doc_id) {
  std::vector<std::vector<WordPrediction>> per_model;
  per_model.reserve(files.size());
  for (const auto& f : files) {
    const PredictionDocument* d = f.find(doc_id);
    if (!d) {
      throw Error(ErrorCode::CoverageGap,
                  "model '" + f.model_id + "' has no predictions for document '" + doc_id + "'");
    }
    if (!per_model.empty() && d->words.size() != per_model.front().size()) {
      throw Error(ErrorCode::LengthMismatch, "document '" + doc_id + "': model '" + f.model_id +
                                                 "' has " + std::to_string(d->words.size()) +
                                                 " words, expected " +
                                                 std::to_string(per_model.front().size()));
    }
    per_model.push_back(d->words);
  }
  return per_model;
}

void check_same_docs(std::span<const PredictionFile> files) {
  if (files.empty()) throw Error(ErrorCode::EmptyInput, "no prediction files");
  const auto first = index_docs(files.front());
  for (const auto& f : files.subspan(1)) {
    if (f.documents.size() != first.size()) {
      throw Error(ErrorCode::CoverageGap, "model '" + f.model_id + "' covers " +
                                              std::to_string(f.documents.size()) +
                                              " documents, model '" + files.front().model_id +
                                              "' covers " + std::to_string(first.size()));
    }
  }
}

Json model_list(std::span<const PredictionFile> files) {
  Json ids = Json::array();
  for (const auto& f : files) ids.push_back(f.model_id);
  return ids;
}

}  // namespace

void PipelineConfig::set_seed(std::uint64_t seed) {
  vote.seed = seed;
  stacking.train.seed = seed;
  if (stacking.split_seed) stacking.split_seed = seed;
}

Json PipelineConfig::to_json() const {
  Json j;
  j["grouping"] = std::string(to_string(grouping));
  Json v;
  v["policy"] = std::string(to_string(vote.kind));
  v["threshold"] = vote.threshold ? Json(*vote.threshold) : Json(nullptr);
  v["tie_break"] = std::string(to_string(vote.tie_break));
  v["seed"] = vote.seed;
  j["vote"] = v;
  Json s;
  s["mode"] = std::string(to_string(stacking.feature_mode));
  s["min_non_o"] = stacking.min_non_o;
  s["train_fraction"] = stacking.train_fraction;
  s["split_seed"] = stacking.split_seed ? Json(*stacking.split_seed) : Json(nullptr);
  s["hidden"] = stacking.train.hidden_width;
  s["learning_rate"] = stacking.train.learning_rate;
  s["epochs"] = stacking.train.epochs;
  s["batch_size"] = stacking.train.batch_size;
  s["seed"] = stacking.train.seed;
  s["shuffle"] = stacking.train.shuffle;
  j["stacking"] = s;
  Json m;
  m["mode"] = std::string(to_string(eval_mode));
  m["include_o"] = include_o_in_macro;
  j["metrics"] = m;
  Json l;
  l["mapping"] = mapping_path;
  l["threshold"] = linking.threshold;
  l["snomed_url"] = linking.urls.snomed;
  l["bnf_url"] = linking.urls.bnf;
  Json classes = Json::array();
  for (LabelId c : linking.classes) classes.push_back(LabelScheme::canonical().collapsed_labels().at(c));
  l["classes"] = classes;
  j["linking"] = l;
  Json svc;
  svc["host"] = host;
  svc["port"] = port;
  svc["static_dir"] = static_dir;
  j["service"] = svc;
  return j;
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "config must be a JSON object");
  PipelineConfig c;
  std::string text;

  if (j.contains("grouping")) {
    read_opt(j, "grouping", text);
    c.grouping = parse_grouping_strategy(text);
  }

  const Json& v = section(j, "vote");
  if (v.contains("policy")) {
    read_opt(v, "policy", text);
    c.vote.kind = parse_vote_kind(text);
  }
  if (v.contains("threshold") && !v["threshold"].is_null()) {
    std::size_t t = 0;
    read_opt(v, "threshold", t);
    c.vote.threshold = t;
  }
  if (v.contains("tie_break")) {
    read_opt(v, "tie_break", text);
    c.vote.tie_break = parse_tie_break(text);
  }
  read_opt(v, "seed", c.vote.seed);

  const Json& s = section(j, "stacking");
  if (s.contains("mode")) {
    read_opt(s, "mode", text);
    c.stacking.feature_mode = parse_feature_mode(text);
  }
  read_opt(s, "min_non_o", c.stacking.min_non_o);
  read_opt(s, "train_fraction", c.stacking.train_fraction);
  if (s.contains("split_seed") && !s["split_seed"].is_null()) {
    std::uint64_t seed = 0;
    read_opt(s, "split_seed", seed);
    c.stacking.split_seed = seed;
  }
  read_opt(s, "hidden", c.stacking.train.hidden_width);
  read_opt(s, "learning_rate", c.stacking.train.learning_rate);
  read_opt(s, "epochs", c.stacking.train.epochs);
  read_opt(s, "batch_size", c.stacking.train.batch_size);
  read_opt(s, "seed", c.stacking.train.seed);
  read_opt(s, "shuffle", c.stacking.train.shuffle);

  const Json& m = section(j, "metrics");
  if (m.contains("mode")) {
    read_opt(m, "mode", text);
    c.eval_mode = parse_eval_mode(text);
  }
  read_opt(m, "include_o", c.include_o_in_macro);

  const Json& l = section(j, "linking");
  read_opt(l, "mapping", c.mapping_path);
  read_opt(l, "threshold", c.linking.threshold);
  read_opt(l, "snomed_url", c.linking.urls.snomed);
  read_opt(l, "bnf_url", c.linking.urls.bnf);
  std::vector<std::string> classes;
  read_opt(l, "classes", classes);
  for (const auto& name : classes) {
    c.linking.classes.push_back(LabelScheme::canonical().collapsed_index(name));
  }

  const Json& svc = section(j, "service");
  read_opt(svc, "host", c.host);
  read_opt(svc, "port", c.port);
  read_opt(svc, "static_dir", c.static_dir);

  c.stacking.train.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
  try {
    return from_json(Json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

Json provenance(std::string_view command, const PipelineConfig& config) {
  const Json cfg = config.to_json();
  Json p;
  p["command"] = std::string(command);
  p["config_hash"] = fnv1a_hex(cfg.dump());
  p["config"] = cfg;
  Json seeds;
  seeds["vote"] = config.vote.seed;
  seeds["stacking"] = config.stacking.train.seed;
  p["seeds"] = seeds;
  return p;
}

std::vector<PredictionFile> cmd_group(std::span<const LogitFile> files,
                                      const PipelineConfig& config,
                                      std::span<const Document> gold) {
  if (files.empty()) throw Error(ErrorCode::EmptyInput, "no logit files");

  // Word counts per document, taken from the first file (or gold).
  std::map<std::string, std::size_t> counts;
  std::string reference = files.front().model_id;
  if (!gold.empty()) {
    reference = "gold";
    for (const auto& d : gold) counts[d.doc_id] = d.words.size();
  } else {
    for (const auto& d : files.front().documents) counts[d.doc_id] = d.word_count();
  }

  std::vector<PredictionFile> out;
  for (const auto& file : files) {
    if (file.documents.size() != counts.size()) {
      throw Error(ErrorCode::CoverageGap, "model '" + file.model_id + "' covers " +
                                              std::to_string(file.documents.size()) +
                                              " documents, " + reference + " covers " +
                                              std::to_string(counts.size()));
    }
    PredictionFile pf;
    pf.model_id = file.model_id;
    pf.provenance = provenance("group", config);
    for (std::size_t i = 0; i < file.documents.size(); ++i) {
      const LogitDocument& doc = file.documents[i];
      auto it = counts.find(doc.doc_id);
      if (it == counts.end()) {
        throw Error(ErrorCode::CoverageGap, "document '" + doc.doc_id + "' of model '" +
                                                file.model_id + "' is unknown to " + reference);
      }
      if (doc.word_count() != it->second) {
        throw Error(ErrorCode::CoverageGap, "document '" + doc.doc_id + "': model '" +
                                                file.model_id + "' covers " +
                                                std::to_string(doc.word_count()) + " words, " +
                                                reference + " has " + std::to_string(it->second));
      }
      pf.documents.push_back({doc.doc_id, group(file.run(i), config.grouping, it->second)});
    }
    out.push_back(std::move(pf));
  }
  return out;
}

PredictionFile cmd_vote(std::span<const PredictionFile> files, const PipelineConfig& config) {
  check_same_docs(files);
  if (config.vote.kind == VoteKind::MajorityOrO) config.vote.threshold_for(files.size());
  PredictionFile out;
  out.model_id = "vote:" + std::string(to_string(config.vote.kind));
  out.provenance = provenance("vote", config);
  out.provenance["models"] = model_list(files);
  Voter voter(config.vote);
  for (const auto& doc : files.front().documents) {
    const auto per_model = gather(files, doc.doc_id);
    out.documents.push_back({doc.doc_id, vote_document(per_model, voter)});
  }
  return out;
}

StackTrainOutput cmd_stack_train(std::span<const PredictionFile> files,
                                 std::span<const Document> gold, const PipelineConfig& config) {
  check_same_docs(files);
  std::map<std::string, const Document*> gold_by_id;
  for (const auto& d : gold) gold_by_id[d.doc_id] = &d;

  const StackingOptions& opt = config.stacking;
  std::vector<StackedExample> examples;
  for (const auto& doc : files.front().documents) {
    auto it = gold_by_id.find(doc.doc_id);
    if (it == gold_by_id.end() || !it->second->gold_labels) {
      throw Error(ErrorCode::CoverageGap, "no gold labels for document '" + doc.doc_id + "'");
    }
    const auto per_model = gather(files, doc.doc_id);
    auto part = collect_examples(per_model, *it->second->gold_labels, opt.feature_mode,
                                 opt.min_non_o);
    examples.insert(examples.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
  }
  const StackedDataset ds = split_dataset(std::move(examples), opt.feature_mode, files.size(),
                                          opt.train_fraction, opt.split_seed);

  StackTrainOutput out;
  out.training = train(ds, opt.train);
  out.model = {out.training.net, opt.feature_mode, files.size(), opt.min_non_o};
  out.train_examples = ds.train.size();
  out.test_examples = ds.test.size();

  Json r;
  r["provenance"] = provenance("stack-train", config);
  r["models"] = model_list(files);
  r["train_examples"] = ds.train.size();
  r["test_examples"] = ds.test.size();
  r["initial_loss"] = out.training.initial_loss;
  r["final_loss"] = out.training.epoch_loss.back();
  r["train_accuracy"] = out.training.train_accuracy;
  r["test_accuracy"] = out.training.test_accuracy;
  if (!ds.test.empty()) {
    std::vector<LabelId> g, p;
    for (const auto& ex : ds.test) {
      g.push_back(ex.label);
      p.push_back(predict(out.model.net, ex.features));
    }
    r["test_report"] = report_to_json(report(g, p, config.eval_mode, config.include_o_in_macro));
  }
  out.report = std::move(r);
  return out;
}

PredictionFile cmd_stack_predict(std::span<const PredictionFile> files, const StackedModel& model,
                                 const PipelineConfig& config) {
  check_same_docs(files);
  if (files.size() != model.n_models) {
    throw Error(ErrorCode::DimensionMismatch, "meta-model was trained on " +
                                                  std::to_string(model.n_models) +
                                                  " models, got " + std::to_string(files.size()) +
                                                  " prediction files");
  }
  PredictionFile out;
  out.model_id = "stacked:" + std::string(to_string(model.feature_mode));
  out.provenance = provenance("stack-predict", config);
  out.provenance["models"] = model_list(files);
  for (const auto& doc : files.front().documents) {
    const auto per_model = gather(files, doc.doc_id);
    out.documents.push_back({doc.doc_id, stacked_predict(model, per_model)});
  }
  return out;
}

EvalOutput cmd_eval(const PredictionFile& predictions, std::span<const Document> gold,
                    EvalMode mode, bool include_o_in_macro) {
  std::vector<LabelId> g, p;
  for (const auto& doc : gold) {
    if (!doc.gold_labels) {
      throw Error(ErrorCode::CoverageGap, "document '" + doc.doc_id + "' has no gold labels");
    }
    const PredictionDocument* pd = predictions.find(doc.doc_id);
    if (!pd) {
      throw Error(ErrorCode::CoverageGap, "no predictions for document '" + doc.doc_id + "'");
    }
    if (pd->words.size() != doc.gold_labels->size()) {
      throw Error(ErrorCode::LengthMismatch, "document '" + doc.doc_id + "': " +
                                                 std::to_string(pd->words.size()) +
                                                 " predicted words vs " +
                                                 std::to_string(doc.gold_labels->size()) + " gold");
    }
    g.insert(g.end(), doc.gold_labels->begin(), doc.gold_labels->end());
    for (const auto& w : pd->words) p.push_back(w.label);
  }
  return {report(g, p, mode, include_o_in_macro), confusion(g, p, mode)};
}

Json report_to_json(const ClassReport& r) {
  Json j;
  j["mode"] = std::string(to_string(r.mode));
  j["include_o_in_macro"] = r.include_o_in_macro;
  Json classes = Json::array();
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    const ClassScores& s = r.per_class[c];
    if (!s.present()) continue;
    Json row;
    row["class"] = r.class_names[c];
    row["precision"] = s.precision;
    row["recall"] = s.recall;
    row["f1"] = s.f1;
    row["support"] = s.support;
    row["predicted"] = s.predicted;
    classes.push_back(std::move(row));
  }
  j["per_class"] = std::move(classes);
  j["macro"] = {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}};
  j["weighted"] = {
      {"precision", r.weighted.precision}, {"recall", r.weighted.recall}, {"f1", r.weighted.f1}};
  j["accuracy"] = r.accuracy;
  j["total_support"] = r.total_support;
  return j;
}

Json confusion_to_json(const ConfusionMatrix& m) {
  Json j;
  j["mode"] = std::string(to_string(m.mode));
  j["classes"] = m.class_names;
  Json rows = Json::array();
  for (std::size_t g = 0; g < m.size(); ++g) {
    Json row = Json::array();
    for (std::size_t p = 0; p < m.size(); ++p) row.push_back(m.at(g, p));
    rows.push_back(std::move(row));
  }
  j["counts"] = std::move(rows);
  return j;
}

Json link_result_to_json(const LinkResult& r) {
  Json j;
  j["query"] = r.query;
  if (r.matched) {
    Json m;
    m["snomed_code"] = r.matched->entry.snomed_code;
    m["bnf_code"] = r.matched->entry.bnf_code;
    m["dmd_code"] = r.matched->entry.dmd_code ? Json(*r.matched->entry.dmd_code) : Json(nullptr);
    m["description"] = r.matched->entry.description;
    m["score"] = r.matched->score;
    j["matched"] = std::move(m);
  } else {
    j["matched"] = nullptr;
  }
  j["snomed_url"] = r.snomed_url ? Json(*r.snomed_url) : Json(nullptr);
  j["bnf_url"] = r.bnf_url;
  return j;
}

Json cmd_link(const PredictionFile& predictions, std::span<const Document> docs,
              const MappingTable& table, const LinkOptions& options) {
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;
  Json out = Json::array();
  for (const auto& pd : predictions.documents) {
    auto it = by_id.find(pd.doc_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::CoverageGap, "no words for document '" + pd.doc_id + "'");
    }
    const auto labels = labels_of(pd.words);
    for (const auto& link : link_document(it->second->words, labels, table, options)) {
      Json j;
      j["doc_id"] = pd.doc_id;
      j["word_start"] = link.run.begin;
      j["word_end"] = link.run.end;
      j["class"] = LabelScheme::canonical().collapsed_labels()[link.run.entity_class];
      j["result"] = link_result_to_json(link.result);
      out.push_back(std::move(j));
    }
  }
  return out;
}

std::vector<std::string> run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  namespace fs = std::filesystem;
  if (inputs.logit_paths.empty()) throw Error(ErrorCode::EmptyInput, "no logit files");
  fs::create_directories(inputs.out_dir);
  std::vector<std::string> written;
  auto path = [&](const std::string& name) {
    const std::string p = (fs::path(inputs.out_dir) / name).string();
    written.push_back(p);
    return p;
  };
  auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write into '" + inputs.out_dir + "'");
    out << text;
  };

  std::vector<LogitFile> logits;
  for (const auto& p : inputs.logit_paths) logits.push_back(load_logit_file(p));
  const auto gold = load_gold_file(inputs.gold_path);

  const auto grouped = cmd_group(logits, config, gold);
  for (const auto& g : grouped) save_prediction_file(path("group." + g.model_id + ".jsonl"), g);

  auto evaluate = [&](const PredictionFile& pred, const std::string& stem) {
    const auto ev = cmd_eval(pred, gold, config.eval_mode, config.include_o_in_macro);
    write_text(stem + ".report.txt", render_report(ev.report) + "\n" + render_confusion(ev.confusion));
    Json j;
    j["provenance"] = pred.provenance;
    j["report"] = report_to_json(ev.report);
    j["confusion"] = confusion_to_json(ev.confusion);
    write_text(stem + ".report.json", j.dump(2) + "\n");
  };

  for (const auto& g : grouped) evaluate(g, "eval." + g.model_id);

  const auto voted = cmd_vote(grouped, config);
  save_prediction_file(path("vote.jsonl"), voted);
  evaluate(voted, "eval.vote");

  if (inputs.with_stacking) {
    const auto trained = cmd_stack_train(grouped, gold, config);
    {
      std::ofstream out(path("metanet.bin"), std::ios::binary | std::ios::trunc);
      write_stacked_model(out, trained.model);
    }
    write_text("stack-train.json", trained.report.dump(2) + "\n");
    const auto stacked = cmd_stack_predict(grouped, trained.model, config);
    save_prediction_file(path("stacked.jsonl"), stacked);
    evaluate(stacked, "eval.stacked");
  }
  return written;
}

}  // namespace medner
