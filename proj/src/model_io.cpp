// Binary record for a trained StackedModel.
//
//   magic      8 bytes  "MEDNERMN"
//   version    u32      1
//   mode       u8       0 = one_hot, 1 = logits
//   n_models   u32
//   min_non_o  u32
//   n_labels   u32, then per label: u32 length + UTF-8 bytes
//   n_sizes    u32, then n_sizes x u64 layer sizes
//   per layer: out*in weights (row-major), out biases, as IEEE-754 f64
//
// All integers and doubles are little-endian; doubles are written as their
// raw bit patterns so a round trip is bit-exact.

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "medner/error.hpp"
#include "medner/stacking.hpp"

namespace medner {

namespace {

constexpr char kMagic[8] = {'M', 'E', 'D', 'N', 'E', 'R', 'M', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(ErrorCode::ParseError, "truncated meta-model file");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

void put_double(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
double get_double(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

}  // namespace

void write_stacked_model(std::ostream& out, const StackedModel& model) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, model.feature_mode == FeatureMode::OneHot ? 0 : 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.n_models));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.min_non_o));

  const auto& labels = LabelScheme::canonical().labels();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(labels.size()));
  for (const auto& l : labels) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.size()));
    out.write(l.data(), static_cast<std::streamsize>(l.size()));
  }

  const auto& sizes = model.net.sizes();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
  for (std::size_t s : sizes) put<std::uint64_t>(out, s);
  for (const auto& layer : model.net.layers()) {
    for (double w : layer.weights) put_double(out, w);
    for (double b : layer.bias) put_double(out, b);
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing meta-model");
}

StackedModel read_stacked_model(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::ParseError, "not a meta-model file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw Error(ErrorCode::ParseError, "unsupported meta-model version " + std::to_string(version));
  }
  StackedModel model;
  const auto mode = get<std::uint8_t>(in);
  if (mode > 1) throw Error(ErrorCode::ParseError, "bad feature mode byte");
  model.feature_mode = mode == 0 ? FeatureMode::OneHot : FeatureMode::Logits;
  model.n_models = get<std::uint32_t>(in);
  model.min_non_o = get<std::uint32_t>(in);

  const auto n_labels = get<std::uint32_t>(in);
  const auto& canonical = LabelScheme::canonical().labels();
  if (n_labels != canonical.size()) {
    throw Error(ErrorCode::HeaderMismatch, "meta-model label list has " +
                                               std::to_string(n_labels) + " entries");
  }
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    const auto len = get<std::uint32_t>(in);
    if (len > 64) throw Error(ErrorCode::ParseError, "implausible label length");
    std::string label(len, '\0');
    if (!in.read(label.data(), len)) throw Error(ErrorCode::ParseError, "truncated label list");
    if (label != canonical[i]) {
      throw Error(ErrorCode::HeaderMismatch, "meta-model label " + std::to_string(i) + " is '" +
                                                 label + "', expected '" + canonical[i] + "'");
    }
  }

  const auto n_sizes = get<std::uint32_t>(in);
  if (n_sizes < 2 || n_sizes > 16) throw Error(ErrorCode::ParseError, "bad layer count");
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const auto s = get<std::uint64_t>(in);
    if (s == 0 || s > (1u << 20)) throw Error(ErrorCode::ParseError, "bad layer size");
    sizes.push_back(static_cast<std::size_t>(s));
  }
  if (sizes.front() != model.n_models * kNumLabels || sizes.back() != kNumLabels) {
    throw Error(ErrorCode::DimensionMismatch, "layer sizes do not match n_models and labels");
  }
  model.net = MetaNet(std::move(sizes));
  for (auto& layer : model.net.layers()) {
    for (double& w : layer.weights) w = get_double(in);
    for (double& b : layer.bias) b = get_double(in);
  }
  return model;
}

}  // namespace medner
