#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medner {

inline constexpr std::size_t kNumLabels = 19;
inline constexpr std::size_t kNumClasses = 9;
inline constexpr std::size_t kNumCollapsed = kNumClasses + 1;

using LabelId = std::size_t;

// "O" is index 0 in both the BIO and the collapsed vocabularies.
inline constexpr LabelId kOutside = 0;

/// The fixed 19-label BIO vocabulary: "O" first, then B-X/I-X pairs for the
/// nine entity classes in alphabetical class order. One-hot feature layout,
/// file headers and serialized models all depend on this order.
class LabelScheme {
 public:
  static const LabelScheme& canonical();

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& entity_classes() const noexcept { return classes_; }
  /// ["O", "ADE", "Dosage", ...]: the vocabulary after dropping B/I prefixes.
  const std::vector<std::string>& collapsed_labels() const noexcept { return collapsed_; }

  std::size_t size() const noexcept { return labels_.size(); }

  LabelId index(std::string_view label) const;
  const std::string& name(LabelId id) const;

  LabelId collapse(LabelId id) const;
  LabelId collapsed_index(std::string_view collapsed_label) const;

  bool is_begin(LabelId id) const;
  bool is_inside(LabelId id) const;

 private:
  LabelScheme();

  std::vector<std::string> labels_;
  std::vector<std::string> classes_;
  std::vector<std::string> collapsed_;
};

LabelId label_index(std::string_view label,
                    const LabelScheme& scheme = LabelScheme::canonical());
const std::string& label_string(LabelId id,
                                const LabelScheme& scheme = LabelScheme::canonical());
LabelId collapse_label(LabelId id);

/// Index of the largest value; the lowest index wins ties. Every argmax in
/// the project goes through here.
std::size_t argmax(std::span<const double> values);

}  // namespace medner
