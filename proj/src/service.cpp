#include "medner/service.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <regex>

#include <httplib.h>

#include "medner/error.hpp"

namespace medner {

namespace {

struct LexiconSeed {
  const char* cls;
  std::vector<const char*> words;
};

const std::vector<LexiconSeed>& builtin_lexicon() {
  static const std::vector<LexiconSeed> seeds{
      {"Form", {"tablet", "tablets", "tab", "tabs", "capsule", "capsules", "cream", "ointment",
                "inhaler", "injection", "solution", "suspension", "patch", "drops", "syrup"}},
      {"Route", {"oral", "orally", "po", "iv", "intravenous", "intravenously", "topical",
                 "topically", "inhaled", "sc", "subcutaneous", "im", "intramuscular",
                 "sublingual"}},
      {"Frequency", {"daily", "bd", "tds", "qds", "od", "nocte", "mane", "prn", "weekly",
                     "twice", "hourly"}},
      {"Duration", {"days", "weeks", "months"}},
      {"Dosage", {"one", "two", "three", "1", "2", "3"}},
      {"ADE", {"rash", "nausea", "vomiting", "diarrhoea", "diarrhea", "dizziness", "headache",
               "bleeding"}},
      {"Reason", {"pain", "infection", "hypertension", "fever", "diabetes", "asthma"}},
      {"Drug", {"paracetamol", "amoxicillin", "ibuprofen", "warfarin", "metformin", "aspirin"}},
  };
  return seeds;
}

bool is_alpha_word(std::string_view w) {
  return !w.empty() &&
         std::all_of(w.begin(), w.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

// Deterministic jitter in [-0.5, 0.5) from a string key.
double jitter(std::string_view key) {
  const std::string hex = fnv1a_hex(key);
  const auto bits = std::stoull(hex.substr(0, 8), nullptr, 16);
  return static_cast<double>(bits) / 4294967296.0 - 0.5;
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

DictionaryLabeler::DictionaryLabeler(std::string model_id, const MappingTable* table,
                                     std::size_t piece_size)
    : model_id_(std::move(model_id)), piece_size_(std::max<std::size_t>(piece_size, 1)) {
  const auto& scheme = LabelScheme::canonical();
  for (const auto& seed : builtin_lexicon()) {
    const LabelId cls = scheme.collapsed_index(seed.cls);
    for (const char* w : seed.words) lexicon_.emplace_back(w, cls);
  }
  if (table) {
    const LabelId drug = scheme.collapsed_index("Drug");
    for (const auto& e : table->entries()) {
      if (!e.tokens.empty() && e.tokens.front().size() >= 4 && is_alpha_word(e.tokens.front())) {
        lexicon_.emplace_back(e.tokens.front(), drug);
      }
    }
  }
  // First occurrence wins for duplicate words.
  std::stable_sort(lexicon_.begin(), lexicon_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  lexicon_.erase(std::unique(lexicon_.begin(), lexicon_.end(),
                             [](const auto& a, const auto& b) { return a.first == b.first; }),
                 lexicon_.end());
}

LabelId DictionaryLabeler::word_class(std::string_view word) const {
  static const std::regex strength(R"(^\d+(\.\d+)?(mg|mcg|micrograms?|g|ml|units?|iu|%)$)",
                                   std::regex::icase);
  const std::string w = normalize_text(word);
  if (w.empty()) return kOutside;
  if (std::regex_match(w, strength)) return LabelScheme::canonical().collapsed_index("Strength");
  auto it = std::lower_bound(lexicon_.begin(), lexicon_.end(), w,
                             [](const auto& entry, const std::string& key) { return entry.first < key; });
  return it != lexicon_.end() && it->first == w ? it->second : kOutside;
}

ModelRun DictionaryLabeler::label(const std::string& doc_id,
                                  std::span<const std::string> words) const {
  ModelRun run{model_id_, doc_id, {}};
  LabelId prev_class = kOutside;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const LabelId cls = word_class(words[i]);
    // Collapsed class X maps to B-X = 2X-1, I-X = 2X.
    const LabelId word_label =
        cls == kOutside ? kOutside : (cls == prev_class ? 2 * cls : 2 * cls - 1);
    const LabelId inside = cls == kOutside ? kOutside : 2 * cls;
    prev_class = cls;

    const std::string& w = words[i];
    const std::size_t n_pieces = std::max<std::size_t>(1, (w.size() + piece_size_ - 1) / piece_size_);
    for (std::size_t p = 0; p < n_pieces; ++p) {
      SubwordPrediction sw;
      sw.text = (p == 0 ? "" : "##") + w.substr(p * piece_size_, piece_size_);
      sw.word_index = i;
      const std::string key = model_id_ + '\x1f' + w + '\x1f' + std::to_string(p);
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        sw.logits[k] = jitter(key + '\x1f' + std::to_string(k));
      }
      if (p == 0) {
        sw.logits[word_label] += 5.0;
      } else {
        sw.logits[inside] += 3.0;
        sw.logits[word_label] += 2.5;
      }
      run.subwords.push_back(std::move(sw));
    }
  }
  return run;
}

std::vector<std::unique_ptr<WordLabeler>> default_labelers(const MappingTable* table,
                                                           std::size_t count) {
  std::vector<std::unique_ptr<WordLabeler>> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(std::make_unique<DictionaryLabeler>("lexicon-" + std::to_string(i + 1), table,
                                                      3 + i));
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    std::vector<Token> trailing;
    while (b < e && is_punct(text[b])) {
      out.push_back({std::string(1, text[b]), b, b + 1});
      ++b;
    }
    while (e > b && is_punct(text[e - 1])) {
      trailing.push_back({std::string(1, text[e - 1]), e - 1, e});
      --e;
    }
    if (e > b) out.push_back({std::string(text.substr(b, e - b)), b, e});
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
    i = j;
  }
  return out;
}

AnnotationService::AnnotationService(PipelineConfig config,
                                     std::vector<std::unique_ptr<WordLabeler>> labelers,
                                     std::optional<MappingTable> table,
                                     std::optional<StackedModel> stacked)
    : config_(std::move(config)),
      labelers_(std::move(labelers)),
      table_(std::move(table)),
      stacked_(std::move(stacked)) {
  if (labelers_.empty()) throw Error(ErrorCode::InvalidArgument, "service needs a word labeler");
}

std::vector<LabelId> AnnotationService::label_words(std::span<const std::string> words,
                                                    GroupingStrategy strategy,
                                                    const std::string& ensemble,
                                                    const VotePolicy& policy) const {
  std::vector<LabelId> labels;
  labels.reserve(words.size());
  Voter voter(policy);
  std::size_t chunk_no = 0;
  for (const auto& range : chunk_ranges(words, chunk_spec_)) {
    const auto slice = words.subspan(range.begin, range.size());
    const std::string doc_id = "request#" + std::to_string(chunk_no++);
    std::vector<std::vector<WordPrediction>> per_model;
    for (const auto& labeler : labelers_) {
      per_model.push_back(group(labeler->label(doc_id, slice), strategy, slice.size()));
    }
    std::vector<WordPrediction> chunk_out;
    if (ensemble == "none") {
      chunk_out = per_model.front();
    } else if (ensemble == "stacked") {
      chunk_out = stacked_predict(*stacked_, per_model);
    } else {
      chunk_out = vote_document(per_model, voter);
    }
    for (const auto& w : chunk_out) labels.push_back(w.label);
  }
  return labels;
}

Json AnnotationService::annotate(const Json& request) const {
  if (!request.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be an object");

  std::string text;
  std::vector<Token> tokens;
  if (request.contains("words")) {
    const auto& words = request["words"];
    if (!words.is_array()) throw Error(ErrorCode::InvalidArgument, "'words' must be an array");
    const Json* offsets = request.contains("offsets") ? &request["offsets"] : nullptr;
    if (offsets && (!offsets->is_array() || offsets->size() != words.size())) {
      throw Error(ErrorCode::InvalidArgument, "'offsets' must hold one [start, end] per word");
    }
    if (request.contains("text") && request["text"].is_string()) {
      text = request["text"].get<std::string>();
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (!words[i].is_string()) throw Error(ErrorCode::InvalidArgument, "words must be strings");
      Token t{words[i].get<std::string>(), 0, 0};
      if (offsets) {
        const auto& o = (*offsets)[i];
        const auto non_negative = [](const Json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
        if (!o.is_array() || o.size() != 2 || !non_negative(o[0]) || !non_negative(o[1])) {
          throw Error(ErrorCode::InvalidArgument, "offsets must be [start, end] pairs");
        }
        t.begin = o[0].get<std::size_t>();
        t.end = o[1].get<std::size_t>();
      } else {
        // Re-join with single spaces.
        if (i > 0) text.push_back(' ');
        t.begin = text.size();
        text += t.text;
        t.end = text.size();
      }
      tokens.push_back(std::move(t));
    }
  } else {
    if (!request.contains("text") || !request["text"].is_string()) {
      throw Error(ErrorCode::InvalidArgument, "'text' must be a string");
    }
    text = request["text"].get<std::string>();
    tokens = tokenize(text);
  }
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "nothing to annotate");

  GroupingStrategy strategy = config_.grouping;
  if (request.contains("strategy")) {
    if (!request["strategy"].is_string()) throw Error(ErrorCode::InvalidArgument, "'strategy' must be a string");
    strategy = parse_grouping_strategy(request["strategy"].get<std::string>());
  }
  VotePolicy policy = config_.vote;
  std::string ensemble = labelers_.size() > 1 ? std::string(to_string(policy.kind)) : "none";
  if (request.contains("ensemble")) {
    if (!request["ensemble"].is_string()) throw Error(ErrorCode::InvalidArgument, "'ensemble' must be a string");
    ensemble = request["ensemble"].get<std::string>();
  }
  if (ensemble == "stacked") {
    if (!stacked_) throw Error(ErrorCode::Unavailable, "no stacked meta-model loaded");
    if (stacked_->n_models != labelers_.size()) {
      throw Error(ErrorCode::Unavailable, "stacked meta-model expects " +
                                              std::to_string(stacked_->n_models) + " labelers");
    }
  } else if (ensemble != "none") {
    policy.kind = parse_vote_kind(ensemble);
    ensemble = std::string(to_string(policy.kind));
    policy.threshold_for(labelers_.size());
  }

  std::vector<std::string> words;
  for (const auto& t : tokens) words.push_back(t.text);
  const auto labels = label_words(words, strategy, ensemble, policy);

  const auto& scheme = LabelScheme::canonical();
  Json out;
  out["words"] = words;
  Json label_names = Json::array();
  for (LabelId id : labels) label_names.push_back(scheme.name(id));
  out["labels"] = std::move(label_names);
  Json entities = Json::array();
  for (const auto& run : entity_runs(labels)) {
    Json e;
    e["char_start"] = tokens[run.begin].begin;
    e["char_end"] = tokens[run.end - 1].end;
    const std::size_t b = tokens[run.begin].begin, end = tokens[run.end - 1].end;
    e["text"] = b <= end && end <= text.size() ? text.substr(b, end - b) : std::string();
    e["class"] = scheme.collapsed_labels()[run.entity_class];
    e["label"] = scheme.name(labels[run.begin]);
    e["word_start"] = run.begin;
    e["word_end"] = run.end;
    entities.push_back(std::move(e));
  }
  out["entities"] = std::move(entities);
  out["strategy"] = std::string(to_string(strategy));
  out["ensemble"] = ensemble;
  Json models = Json::array();
  for (const auto& l : labelers_) models.push_back(l->model_id());
  out["models"] = std::move(models);
  return out;
}

Json AnnotationService::link(const Json& request) const {
  if (!request.is_object() || !request.contains("term") || !request["term"].is_string()) {
    throw Error(ErrorCode::InvalidArgument, "'term' must be a string");
  }
  std::string kb = "snomed";
  if (request.contains("kb")) {
    if (!request["kb"].is_string()) throw Error(ErrorCode::InvalidArgument, "'kb' must be a string");
    kb = request["kb"].get<std::string>();
  }
  if (kb != "snomed" && kb != "bnf") {
    throw Error(ErrorCode::InvalidArgument, "'kb' must be \"snomed\" or \"bnf\"");
  }
  if (!table_) throw Error(ErrorCode::Unavailable, "no mapping table loaded");
  const auto result = fuzzy_link(request["term"].get<std::string>(), *table_,
                                 config_.linking.threshold, config_.linking.urls);
  Json out = link_result_to_json(result);
  out["kb"] = kb;
  out["url"] = kb == "bnf" ? Json(result.bnf_url)
                           : (result.snomed_url ? Json(*result.snomed_url) : Json(nullptr));
  return out;
}

Json AnnotationService::labels() const {
  Json out;
  out["labels"] = LabelScheme::canonical().labels();
  out["classes"] = LabelScheme::canonical().collapsed_labels();
  return out;
}

Json AnnotationService::health() const {
  Json out;
  out["status"] = "ok";
  out["labelers"] = labelers_.size();
  out["mapping_entries"] = table_ ? table_->size() : 0;
  out["stacked"] = stacked_.has_value();
  return out;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unavailable: return 503;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

void AnnotationService::mount(httplib::Server& server) const {
  auto respond = [](httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto wrap = [respond](auto handler) {
    return [respond, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        Json body = req.body.empty() ? Json::object() : Json::parse(req.body);
        respond(res, 200, handler(body));
      } catch (const nlohmann::json::parse_error& e) {
        respond(res, 400, Json{{"error", "ParseError"}, {"message", e.what()}});
      } catch (const Error& e) {
        respond(res, http_status(e.code()),
                Json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}});
      }
    };
  };
  server.Post("/annotate", wrap([this](const Json& b) { return annotate(b); }));
  server.Post("/link", wrap([this](const Json& b) { return link(b); }));
  server.Get("/labels", wrap([this](const Json&) { return labels(); }));
  server.Get("/health", wrap([this](const Json&) { return health(); }));
  if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir);
}

}  // namespace medner
