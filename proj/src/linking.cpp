#include "medner/linking.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

#include "medner/error.hpp"

namespace medner {

namespace {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool ok = len > 0 && i + len <= s.size();
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      // Keep invalid bytes as distinct units outside the code point range.
      out.push_back(0x110000 + c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::vector<std::string> split_spaces(const std::string& normalized) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < normalized.size()) {
    std::size_t end = normalized.find(' ', start);
    if (end == std::string::npos) end = normalized.size();
    if (end > start) out.push_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

bool contains_stop_word(const std::string& normalized, const std::set<std::string>& stop_words) {
  std::string word;
  auto flush = [&] {
    const bool hit = !word.empty() && stop_words.count(word) > 0;
    word.clear();
    return hit;
  };
  for (char ch : normalized) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || static_cast<unsigned char>(ch) >= 0x80) {
      word.push_back(ch);
    } else if (flush()) {
      return true;
    }
  }
  return flush();
}

std::string header_key(std::string_view name) {
  std::string key = normalize_text(name);
  std::replace(key.begin(), key.end(), ' ', '_');
  // Strip a UTF-8 byte order mark on the first column.
  if (key.rfind("\xEF\xBB\xBF", 0) == 0) key.erase(0, 3);
  return key;
}

std::string substitute(std::string tmpl, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

}  // namespace

const std::set<std::string>& default_stop_words() {
  static const std::set<std::string> words{"system", "ostomy", "bag", "filter", "piece", "closure"};
  return words;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::u32string s = decode_utf8(a);
  const std::u32string t = decode_utf8(b);
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

double similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(decode_utf8(a).size(), decode_utf8(b).size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

MappingTable MappingTable::load_and_clean(std::span<const RawMappingRow> rows,
                                          std::set<std::string> stop_words) {
  MappingTable table;
  table.stop_words_ = std::move(stop_words);
  table.stats_.input = rows.size();

  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : rows) {
    MappingEntry e;
    e.snomed_code = normalize_text(row.snomed_code);
    e.normalized = normalize_text(row.description);
    if (e.snomed_code.empty() || e.normalized.empty()) {
      ++table.stats_.malformed;
      continue;
    }
    // Codes are kept as written (trimmed), only descriptions are lowercased.
    e.snomed_code = std::string(row.snomed_code);
    e.snomed_code.erase(0, e.snomed_code.find_first_not_of(" \t\r\n"));
    e.snomed_code.erase(e.snomed_code.find_last_not_of(" \t\r\n") + 1);
    if (!seen.emplace(e.normalized, e.snomed_code).second) {
      ++table.stats_.duplicates;
      continue;
    }
    if (contains_stop_word(e.normalized, table.stop_words_)) {
      ++table.stats_.stop_word_filtered;
      continue;
    }
    e.bnf_code = row.bnf_code;
    if (!row.dmd_code.empty()) e.dmd_code = row.dmd_code;
    e.description = row.description;
    e.tokens = split_spaces(e.normalized);
    table.entries_.push_back(std::move(e));
  }
  table.stats_.kept = table.entries_.size();
  return table;
}

std::vector<RawMappingRow> MappingTable::to_rows() const {
  std::vector<RawMappingRow> rows;
  rows.reserve(entries_.size());
  for (const auto& e : entries_) {
    rows.push_back({e.snomed_code, e.bnf_code, e.dmd_code.value_or(""), e.description});
  }
  return rows;
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record.front().empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };
  while (in.get(ch)) {
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(ch);
        }
        break;
      case ',': end_field(); break;
      case '\r':
        if (in.peek() == '\n') in.get(ch);
        end_record();
        break;
      case '\n': end_record(); break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::ParseError, "unterminated quoted CSV field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::vector<RawMappingRow> read_mapping_csv(std::istream& in) {
  auto records = read_csv(in);
  if (records.empty()) throw Error(ErrorCode::ParseError, "mapping file has no header row");

  static const std::map<std::string, std::vector<std::string>> aliases{
      {"snomed_code", {"snomed_code", "snomed", "snomed_ct_code", "snomedct_code"}},
      {"bnf_code", {"bnf_code", "bnf"}},
      {"dmd_code", {"dmd_code", "dm+d_code", "dmd"}},
      {"description", {"description", "name", "drug_name", "product_name", "vmp_name"}},
  };
  std::map<std::string, std::size_t> column;
  const auto& header = records.front();
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string key = header_key(header[i]);
    for (const auto& [canonical, names] : aliases) {
      if (!column.count(canonical) && std::find(names.begin(), names.end(), key) != names.end()) {
        column[canonical] = i;
      }
    }
  }
  for (const char* required : {"snomed_code", "bnf_code", "description"}) {
    if (!column.count(required)) {
      throw Error(ErrorCode::HeaderMismatch,
                  std::string("mapping file header lacks a '") + required + "' column");
    }
  }

  auto cell = [&](const std::vector<std::string>& rec, const char* name) -> std::string {
    auto it = column.find(name);
    if (it == column.end() || it->second >= rec.size()) return {};
    return rec[it->second];
  };
  std::vector<RawMappingRow> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    rows.push_back({cell(rec, "snomed_code"), cell(rec, "bnf_code"), cell(rec, "dmd_code"),
                    cell(rec, "description")});
  }
  return rows;
}

MappingTable load_mapping_file(const std::string& path, std::set<std::string> stop_words) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mapping file '" + path + "'");
  const auto rows = read_mapping_csv(in);
  return MappingTable::load_and_clean(rows, std::move(stop_words));
}

void write_mapping_csv(std::ostream& out, std::span<const RawMappingRow> rows) {
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q.push_back('"');
      q.push_back(ch);
    }
    return q + "\"";
  };
  out << "snomed_code,bnf_code,dmd_code,description\n";
  for (const auto& r : rows) {
    out << quote(r.snomed_code) << ',' << quote(r.bnf_code) << ',' << quote(r.dmd_code) << ','
        << quote(r.description) << '\n';
  }
}

std::string percent_encode(std::string_view text) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(ch);
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string snomed_url(const UrlTemplates& urls, std::string_view code) {
  return substitute(urls.snomed, "{code}", percent_encode(code));
}

std::string bnf_url(const UrlTemplates& urls, std::string_view query) {
  return substitute(urls.bnf, "{query}", percent_encode(query));
}

double entry_similarity(std::string_view normalized_query, const MappingEntry& entry) {
  double best = similarity(normalized_query, entry.normalized);
  for (const auto& token : entry.tokens) {
    if (best >= 1.0) break;
    best = std::max(best, similarity(normalized_query, token));
  }
  return best;
}

LinkResult fuzzy_link(std::string_view query, const MappingTable& table, double threshold,
                      const UrlTemplates& urls) {
  const std::string q = normalize_text(query);
  if (q.empty()) throw Error(ErrorCode::EmptyQuery, "empty link query");

  LinkResult result;
  result.query = std::string(query);
  result.bnf_url = bnf_url(urls, q);

  const MappingEntry* best = nullptr;
  double best_score = -1.0;
  for (const auto& entry : table.entries()) {
    const double s = entry_similarity(q, entry);
    if (s > best_score) {
      best_score = s;
      best = &entry;
      if (s >= 1.0) break;
    }
  }
  if (best != nullptr && best_score >= threshold) {
    result.matched = LinkMatch{*best, best_score};
    result.snomed_url = snomed_url(urls, best->snomed_code);
  }
  return result;
}

std::vector<EntityRun> entity_runs(std::span<const LabelId> labels) {
  std::vector<EntityRun> runs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const LabelId cls = collapse_label(labels[i]);
    if (cls == kOutside) continue;
    if (!runs.empty() && runs.back().end == i && runs.back().entity_class == cls) {
      runs.back().end = i + 1;
    } else {
      runs.push_back({i, i + 1, cls});
    }
  }
  return runs;
}

std::vector<DocumentLink> link_document(std::span<const std::string> words,
                                        std::span<const LabelId> labels,
                                        const MappingTable& table, const LinkOptions& options) {
  if (words.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(words.size()) + " words but " +
                                               std::to_string(labels.size()) + " labels");
  }
  std::vector<LabelId> classes = options.classes;
  if (classes.empty()) classes.push_back(LabelScheme::canonical().collapsed_index("Drug"));

  std::vector<DocumentLink> out;
  for (const auto& run : entity_runs(labels)) {
    if (std::find(classes.begin(), classes.end(), run.entity_class) == classes.end()) continue;
    std::string query;
    for (std::size_t i = run.begin; i < run.end; ++i) {
      if (!query.empty()) query.push_back(' ');
      query += words[i];
    }
    out.push_back({run, fuzzy_link(query, table, options.threshold, options.urls)});
  }
  return out;
}

}  // namespace medner
