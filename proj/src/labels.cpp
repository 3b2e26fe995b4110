#include "medner/labels.hpp"

#include <algorithm>

#include "medner/error.hpp"

namespace medner {

LabelScheme::LabelScheme()
    : classes_{"ADE",  "Dosage", "Drug",   "Duration", "Form",
               "Frequency", "Reason", "Route", "Strength"} {
  labels_.reserve(kNumLabels);
  collapsed_.reserve(kNumCollapsed);
  labels_.emplace_back("O");
  collapsed_.emplace_back("O");
  for (const auto& cls : classes_) {
    labels_.push_back("B-" + cls);
    labels_.push_back("I-" + cls);
    collapsed_.push_back(cls);
  }
}

const LabelScheme& LabelScheme::canonical() {
  static const LabelScheme scheme;
  return scheme;
}

LabelId LabelScheme::index(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw Error(ErrorCode::UnknownLabel, "unknown label '" + std::string(label) + "'");
  }
  return static_cast<LabelId>(it - labels_.begin());
}

const std::string& LabelScheme::name(LabelId id) const {
  if (id >= labels_.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(id) + " out of range");
  }
  return labels_[id];
}

LabelId LabelScheme::collapse(LabelId id) const {
  if (id >= labels_.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "label index " + std::to_string(id) + " out of range");
  }
  // 1,2 -> 1; 3,4 -> 2; ...
  return id == kOutside ? kOutside : (id + 1) / 2;
}

LabelId LabelScheme::collapsed_index(std::string_view collapsed_label) const {
  auto it = std::find(collapsed_.begin(), collapsed_.end(), collapsed_label);
  if (it == collapsed_.end()) {
    throw Error(ErrorCode::UnknownLabel,
                "unknown entity class '" + std::string(collapsed_label) + "'");
  }
  return static_cast<LabelId>(it - collapsed_.begin());
}

bool LabelScheme::is_begin(LabelId id) const {
  return id != kOutside && id < labels_.size() && id % 2 == 1;
}

bool LabelScheme::is_inside(LabelId id) const {
  return id != kOutside && id < labels_.size() && id % 2 == 0;
}

LabelId label_index(std::string_view label, const LabelScheme& scheme) {
  return scheme.index(label);
}

const std::string& label_string(LabelId id, const LabelScheme& scheme) {
  return scheme.name(id);
}

LabelId collapse_label(LabelId id) { return LabelScheme::canonical().collapse(id); }

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::EmptyInput, "argmax of an empty vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::UncoveredWord: return "UncoveredWord";
    case ErrorCode::UnorderedSubwords: return "UnorderedSubwords";
    case ErrorCode::EmptyVote: return "EmptyVote";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingLogits: return "MissingLogits";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unavailable: return "Unavailable";
  }
  return "Unknown";
}

}  // namespace medner
