#include "medner/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "medner/error.hpp"

namespace medner {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

const std::vector<std::string>& names_for(EvalMode mode) {
  const auto& scheme = LabelScheme::canonical();
  return mode == EvalMode::BIOStrict ? scheme.labels() : scheme.collapsed_labels();
}

// Validates both sequences and maps them into the mode's class space.
std::pair<std::vector<LabelId>, std::vector<LabelId>> prepare(std::span<const LabelId> gold,
                                                              std::span<const LabelId> pred,
                                                              EvalMode mode) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::LengthMismatch, "gold has " + std::to_string(gold.size()) +
                                               " labels, prediction has " +
                                               std::to_string(pred.size()));
  }
  if (gold.empty()) throw Error(ErrorCode::EmptyInput, "nothing to evaluate");
  std::vector<LabelId> g(gold.begin(), gold.end());
  std::vector<LabelId> p(pred.begin(), pred.end());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mode == EvalMode::Collapsed) {
      g[i] = collapse_label(g[i]);
      p[i] = collapse_label(p[i]);
    } else if (g[i] >= kNumLabels || p[i] >= kNumLabels) {
      throw Error(ErrorCode::IndexOutOfRange, "label index out of range at position " +
                                                  std::to_string(i));
    }
  }
  return {std::move(g), std::move(p)};
}

}  // namespace

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::BIOStrict ? "bio" : "collapsed";
}

EvalMode parse_eval_mode(std::string_view name) {
  if (name == "bio" || name == "bio_strict" || name == "strict") return EvalMode::BIOStrict;
  if (name == "collapsed" || name == "non_bio") return EvalMode::Collapsed;
  throw Error(ErrorCode::InvalidArgument, "unknown evaluation mode '" + std::string(name) + "'");
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

std::size_t ConfusionMatrix::diagonal() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const LabelId> gold, std::span<const LabelId> pred,
                          EvalMode mode) {
  const auto [g, p] = prepare(gold, pred, mode);
  ConfusionMatrix m;
  m.mode = mode;
  m.class_names = names_for(mode);
  const std::size_t n = m.class_names.size();
  m.counts.assign(n * n, 0);
  for (std::size_t i = 0; i < g.size(); ++i) ++m.counts[g[i] * n + p[i]];
  return m;
}

ClassReport report(std::span<const LabelId> gold, std::span<const LabelId> pred, EvalMode mode,
                   bool include_o_in_macro) {
  const ConfusionMatrix cm = confusion(gold, pred, mode);
  const std::size_t n = cm.size();

  ClassReport r;
  r.mode = mode;
  r.include_o_in_macro = include_o_in_macro;
  r.class_names = cm.class_names;
  r.per_class.resize(n);
  r.total_support = gold.size();

  for (std::size_t c = 0; c < n; ++c) {
    ClassScores& s = r.per_class[c];
    s.true_positive = cm.at(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      s.support += cm.at(c, k);
      s.predicted += cm.at(k, c);
    }
    s.precision = ratio(s.true_positive, s.predicted);
    s.recall = ratio(s.true_positive, s.support);
    s.f1 = s.precision + s.recall == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    r.correct += s.true_positive;
  }
  r.accuracy = ratio(r.correct, r.total_support);

  std::size_t macro_n = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const ClassScores& s = r.per_class[c];
    if (!s.present()) continue;
    const double w = static_cast<double>(s.support);
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
    if (c == kOutside && !include_o_in_macro) continue;
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
    ++macro_n;
  }
  const double total = static_cast<double>(r.total_support);
  r.weighted.precision /= total;
  r.weighted.recall /= total;
  r.weighted.f1 /= total;
  if (macro_n > 0) {
    r.macro.precision /= static_cast<double>(macro_n);
    r.macro.recall /= static_cast<double>(macro_n);
    r.macro.f1 /= static_cast<double>(macro_n);
  }
  return r;
}

std::string render_report(const ClassReport& report, int digits) {
  std::size_t name_w = std::string("weighted avg").size();
  for (const auto& name : report.class_names) name_w = std::max(name_w, name.size());
  const int col = std::max(digits + 6, 9);
  const int nw = static_cast<int>(name_w);

  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%*s %*s %*s %*s %*s\n\n", nw, "", col, "precision", col,
                "recall", col, "f1-score", col, "support");
  out << buf;
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    const ClassScores& s = report.per_class[c];
    if (!s.present()) continue;
    std::snprintf(buf, sizeof(buf), "%*s %*.*f %*.*f %*.*f %*zu\n", nw,
                  report.class_names[c].c_str(), col, digits, s.precision, col, digits, s.recall,
                  col, digits, s.f1, col, s.support);
    out << buf;
  }
  out << '\n';
  std::snprintf(buf, sizeof(buf), "%*s %*s %*s %*.*f %*zu\n", nw, "accuracy", col, "", col, "",
                col, digits, report.accuracy, col, report.total_support);
  out << buf;
  auto avg_row = [&](const char* name, const Averages& a) {
    std::snprintf(buf, sizeof(buf), "%*s %*.*f %*.*f %*.*f %*zu\n", nw, name, col, digits,
                  a.precision, col, digits, a.recall, col, digits, a.f1, col,
                  report.total_support);
    out << buf;
  };
  avg_row("macro avg", report.macro);
  avg_row("weighted avg", report.weighted);
  return out.str();
}

std::string render_confusion(const ConfusionMatrix& matrix) {
  std::size_t name_w = std::string("gold\\pred").size();
  for (const auto& name : matrix.class_names) name_w = std::max(name_w, name.size());
  std::size_t cell_w = name_w;
  for (std::size_t c : matrix.counts) cell_w = std::max(cell_w, std::to_string(c).size());
  const int nw = static_cast<int>(name_w);
  const int cw = static_cast<int>(cell_w);

  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%*s", nw, "gold\\pred");
  out << buf;
  for (const auto& name : matrix.class_names) {
    std::snprintf(buf, sizeof(buf), " %*s", cw, name.c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t g = 0; g < matrix.size(); ++g) {
    std::snprintf(buf, sizeof(buf), "%*s", nw, matrix.class_names[g].c_str());
    out << buf;
    for (std::size_t p = 0; p < matrix.size(); ++p) {
      std::snprintf(buf, sizeof(buf), " %*zu", cw, matrix.at(g, p));
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace medner
