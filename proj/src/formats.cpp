#include "medner/formats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "medner/error.hpp"

namespace medner {

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-blank line parsed as JSON, or nullopt at end of input.
  std::optional<Json> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      try {
        Json j = Json::parse(line);
        if (!j.is_object()) fail("record is not a JSON object");
        return j;
      } catch (const nlohmann::json::parse_error& e) {
        fail(e.what());
      }
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& what, ErrorCode code = ErrorCode::ParseError) const {
    throw Error(code, "line " + std::to_string(line_no_) + ": " + what);
  }

  template <typename T>
  T field(const Json& j, const char* key) const {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing field '") + key + "'");
    try {
      return it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("field '") + key + "': " + e.what());
    }
  }

  Logits logits(const Json& j) const {
    if (!j.is_array() || j.size() != kNumLabels) {
      fail("logits must be an array of " + std::to_string(kNumLabels) + " numbers");
    }
    Logits out{};
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (!j[k].is_number()) fail("logit is not a number");
      out[k] = j[k].get<double>();
      if (!std::isfinite(out[k])) fail("logit is not finite");
    }
    return out;
  }

  std::size_t line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

void check_header(const LineReader& reader, const Json& header, const char* kind) {
  const int version = reader.field<int>(header, "format_version");
  if (version != kFormatVersion) {
    throw Error(ErrorCode::HeaderMismatch, "unsupported format_version " + std::to_string(version));
  }
  if (reader.field<std::string>(header, "kind") != kind) {
    throw Error(ErrorCode::HeaderMismatch, std::string("expected a '") + kind + "' file");
  }
  const auto labels = reader.field<std::vector<std::string>>(header, "labels");
  if (labels != LabelScheme::canonical().labels()) {
    throw Error(ErrorCode::HeaderMismatch, "header labels differ from the canonical label scheme");
  }
}

Json labels_json() { return Json(LabelScheme::canonical().labels()); }

Json logits_json(const Logits& l) {
  Json arr = Json::array();
  for (double v : l) arr.push_back(v);
  return arr;
}

void write_line(std::ostream& out, const Json& j) {
  out << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) << '\n';
}

template <typename T>
void unique_doc(std::set<std::string>& seen, const std::string& id, const T& reader) {
  if (!seen.insert(id).second) reader.fail("duplicate doc_id '" + id + "'");
}

}  // namespace

std::size_t LogitDocument::word_count() const noexcept {
  if (num_words) return *num_words;
  std::size_t n = 0;
  for (const auto& sw : subwords) n = std::max(n, sw.word_index + 1);
  return n;
}

ModelRun LogitFile::run(std::size_t doc) const {
  return {model_id, documents.at(doc).doc_id, documents.at(doc).subwords};
}

const PredictionDocument* PredictionFile::find(const std::string& doc_id) const {
  for (const auto& d : documents) {
    if (d.doc_id == doc_id) return &d;
  }
  return nullptr;
}

LogitFile read_logit_file(std::istream& in) {
  LineReader reader(in);
  auto header = reader.next();
  if (!header) throw Error(ErrorCode::ParseError, "empty logit file");
  check_header(reader, *header, "logits");

  LogitFile file;
  file.model_id = reader.field<std::string>(*header, "model_id");
  std::set<std::string> seen;
  while (auto rec = reader.next()) {
    LogitDocument doc;
    doc.doc_id = reader.field<std::string>(*rec, "doc_id");
    unique_doc(seen, doc.doc_id, reader);
    if (rec->contains("num_words")) doc.num_words = reader.field<std::size_t>(*rec, "num_words");
    const auto& subwords = (*rec)["subwords"];
    if (!subwords.is_array()) reader.fail("'subwords' must be an array");
    for (const auto& sw : subwords) {
      SubwordPrediction p;
      p.text = reader.field<std::string>(sw, "text");
      p.word_index = reader.field<std::size_t>(sw, "word_index");
      p.logits = reader.logits(sw.at("logits"));
      doc.subwords.push_back(std::move(p));
    }
    file.documents.push_back(std::move(doc));
  }
  return file;
}

void write_logit_file(std::ostream& out, const LogitFile& file) {
  Json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = "logits";
  header["model_id"] = file.model_id;
  header["labels"] = labels_json();
  write_line(out, header);
  for (const auto& doc : file.documents) {
    Json rec;
    rec["doc_id"] = doc.doc_id;
    if (doc.num_words) rec["num_words"] = *doc.num_words;
    Json subwords = Json::array();
    for (const auto& sw : doc.subwords) {
      Json j;
      j["text"] = sw.text;
      j["word_index"] = sw.word_index;
      j["logits"] = logits_json(sw.logits);
      subwords.push_back(std::move(j));
    }
    rec["subwords"] = std::move(subwords);
    write_line(out, rec);
  }
}

std::vector<Document> read_gold_file(std::istream& in, bool require_labels) {
  LineReader reader(in);
  std::vector<Document> docs;
  std::set<std::string> seen;
  while (auto rec = reader.next()) {
    Document doc;
    doc.doc_id = reader.field<std::string>(*rec, "doc_id");
    unique_doc(seen, doc.doc_id, reader);
    doc.words = reader.field<std::vector<std::string>>(*rec, "words");
    if (require_labels || rec->contains("labels")) {
      std::vector<LabelId> ids;
      for (const auto& name : reader.field<std::vector<std::string>>(*rec, "labels")) {
        ids.push_back(label_index(name));
      }
      doc.gold_labels = std::move(ids);
    }
    try {
      doc.validate();
    } catch (const Error& e) {
      reader.fail(e.what(), e.code());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_gold_file(std::ostream& out, std::span<const Document> docs) {
  for (const auto& doc : docs) {
    Json rec;
    rec["doc_id"] = doc.doc_id;
    rec["words"] = doc.words;
    if (doc.gold_labels) {
      Json labels = Json::array();
      for (LabelId id : *doc.gold_labels) labels.push_back(label_string(id));
      rec["labels"] = std::move(labels);
    }
    write_line(out, rec);
  }
}

PredictionFile read_prediction_file(std::istream& in) {
  LineReader reader(in);
  auto header = reader.next();
  if (!header) throw Error(ErrorCode::ParseError, "empty prediction file");
  check_header(reader, *header, "predictions");

  PredictionFile file;
  file.model_id = reader.field<std::string>(*header, "model_id");
  if (header->contains("provenance")) file.provenance = (*header)["provenance"];
  std::set<std::string> seen;
  while (auto rec = reader.next()) {
    PredictionDocument doc;
    doc.doc_id = reader.field<std::string>(*rec, "doc_id");
    unique_doc(seen, doc.doc_id, reader);
    const auto labels = reader.field<std::vector<std::string>>(*rec, "labels");
    const Json* logits = rec->contains("logits") ? &(*rec)["logits"] : nullptr;
    if (logits && (!logits->is_array() || logits->size() != labels.size())) {
      reader.fail("'logits' must hold one vector per word");
    }
    for (std::size_t w = 0; w < labels.size(); ++w) {
      WordPrediction wp;
      wp.word_index = w;
      try {
        wp.label = label_index(labels[w]);
      } catch (const Error& e) {
        reader.fail(e.what(), e.code());
      }
      if (logits) wp.logits = reader.logits((*logits)[w]);
      doc.words.push_back(std::move(wp));
    }
    file.documents.push_back(std::move(doc));
  }
  return file;
}

void write_prediction_file(std::ostream& out, const PredictionFile& file) {
  Json header;
  header["format_version"] = kFormatVersion;
  header["kind"] = "predictions";
  header["model_id"] = file.model_id;
  header["labels"] = labels_json();
  header["provenance"] = file.provenance;
  write_line(out, header);
  for (const auto& doc : file.documents) {
    Json rec;
    rec["doc_id"] = doc.doc_id;
    Json labels = Json::array();
    bool all_logits = !doc.words.empty();
    for (const auto& w : doc.words) {
      labels.push_back(label_string(w.label));
      all_logits = all_logits && w.logits.has_value();
    }
    rec["labels"] = std::move(labels);
    if (all_logits) {
      Json logits = Json::array();
      for (const auto& w : doc.words) logits.push_back(logits_json(*w.logits));
      rec["logits"] = std::move(logits);
    }
    write_line(out, rec);
  }
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  return out;
}

template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace

LogitFile load_logit_file(const std::string& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_logit_file(in); });
}

std::vector<Document> load_gold_file(const std::string& path, bool require_labels) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_gold_file(in, require_labels); });
}

PredictionFile load_prediction_file(const std::string& path) {
  auto in = open_in(path);
  return with_path(path, [&] { return read_prediction_file(in); });
}

void save_logit_file(const std::string& path, const LogitFile& file) {
  auto out = open_out(path);
  write_logit_file(out, file);
}

void save_gold_file(const std::string& path, std::span<const Document> docs) {
  auto out = open_out(path);
  write_gold_file(out, docs);
}

void save_prediction_file(const std::string& path, const PredictionFile& file) {
  auto out = open_out(path);
  write_prediction_file(out, file);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace medner
