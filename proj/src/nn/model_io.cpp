#include "posefuse/nn/model_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include <fmt/format.h>

#include "posefuse/error.hpp"
#include "posefuse/util/checksum.hpp"

namespace posefuse::nn {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'M', '1'};
constexpr std::uint8_t kDtypeFloat64 = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    const auto b = take(n);
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw CorruptModelFile("model file truncated");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

std::size_t parse_size(const std::string& text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) throw CorruptModelFile("bad integer '" + text + "'");
  return value;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_size(text.substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw CorruptModelFile("bad number '" + text + "'");
  return v;
}

struct NamedTensor {
  std::string name;
  Tensor value;
};

std::vector<NamedTensor> collect_tensors(const PoseNetModel& model) {
  PoseNetModel copy = model;
  std::vector<NamedTensor> out;
  for (const Parameter& p : copy.parameters()) out.push_back({p.name, *p.value});
  const DataNormalization& norm = model.normalization();
  auto vec3 = [](const std::array<double, 3>& a) { return Tensor({3}, std::vector<double>(a.begin(), a.end())); };
  out.push_back({"norm.image_mean", vec3(norm.image_mean)});
  out.push_back({"norm.image_std", vec3(norm.image_std)});
  out.push_back({"norm.translation_mean", vec3(norm.translation_mean)});
  out.push_back({"norm.translation_std", vec3(norm.translation_std)});
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const PoseNetModel& model) {
  const BackboneSpec& bb = model.backbone();
  const std::map<std::string, std::string> metadata = {
      {"backbone.id", bb.id},
      {"backbone.conv_channels", join(bb.conv_channels)},
      {"backbone.kernel", std::to_string(bb.kernel)},
      {"backbone.stride", std::to_string(bb.stride)},
      {"backbone.input_channels", std::to_string(bb.input_channels)},
      {"backbone.input_size", std::to_string(bb.input_size)},
      {"backbone.stem_pool", std::to_string(bb.stem_pool)},
      {"backbone.adapter_size", std::to_string(bb.adapter_size)},
      {"backbone.feature_dim", std::to_string(bb.feature_dim)},
      {"head.dropout_rate", fmt::format("{}", model.head().dropout_rate)},
      {"head.pool_window", std::to_string(model.head().pool_window)},
      {"lineage", to_string(model.lineage())},
  };

  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [key, value] : metadata) {
    w.str(key);
    w.str(value);
  }
  const std::vector<NamedTensor> tensors = collect_tensors(model);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    w.str(t.name);
    w.u8(kDtypeFloat64);
    w.u32(static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) w.u64(d);
  }
  for (const NamedTensor& t : tensors) {
    for (double v : t.value.values()) w.f64(v);
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

PoseNetModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 8) throw CorruptModelFile("model file truncated");
  const std::span<const std::uint8_t> body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (tail.u32() != crc32(body)) throw CorruptModelFile("model file checksum mismatch");

  Reader r(body);
  if (std::memcmp(r.take(4).data(), kMagic, 4) != 0) throw CorruptModelFile("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw CorruptModelFile("unsupported model format version " + std::to_string(version));
  }

  std::map<std::string, std::string> meta;
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    std::string key = r.str();
    meta[key] = r.str();
  }
  auto get = [&meta](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw CorruptModelFile("model file lacks metadata '" + key + "'");
    return it->second;
  };

  BackboneSpec bb;
  bb.id = get("backbone.id");
  bb.conv_channels = parse_sizes(get("backbone.conv_channels"));
  bb.kernel = parse_size(get("backbone.kernel"));
  bb.stride = parse_size(get("backbone.stride"));
  bb.input_channels = parse_size(get("backbone.input_channels"));
  bb.input_size = parse_size(get("backbone.input_size"));
  bb.stem_pool = parse_size(get("backbone.stem_pool"));
  bb.adapter_size = parse_size(get("backbone.adapter_size"));
  bb.feature_dim = parse_size(get("backbone.feature_dim"));
  HeadSpec head;
  head.dropout_rate = parse_double(get("head.dropout_rate"));
  head.pool_window = parse_size(get("head.pool_window"));

  PoseNetModel model = [&] {
    try {
      return PoseNetModel::build(bb, head, 0);
    } catch (const Error& e) {
      throw CorruptModelFile(std::string("model file describes an invalid architecture: ") + e.what());
    }
  }();
  model.set_lineage(lineage_from_string(get("lineage")));

  std::vector<NamedTensor> manifest;
  for (std::uint32_t i = 0, n = r.u32(); i < n; ++i) {
    NamedTensor entry;
    entry.name = r.str();
    if (r.u8() != kDtypeFloat64) throw CorruptModelFile("unsupported dtype for " + entry.name);
    Shape shape(r.u32());
    for (std::size_t& d : shape) d = r.u64();
    entry.value = Tensor(shape);
    manifest.push_back(std::move(entry));
  }
  for (NamedTensor& entry : manifest) {
    for (double& v : entry.value.values()) v = r.f64();
  }
  if (!r.at_end()) throw CorruptModelFile("trailing bytes after parameter blobs");

  std::map<std::string, Tensor*> slots;
  for (const Parameter& p : model.parameters()) slots[p.name] = p.value;
  Tensor norm_tensors[4] = {Tensor({3}), Tensor({3}), Tensor({3}), Tensor({3})};
  slots["norm.image_mean"] = &norm_tensors[0];
  slots["norm.image_std"] = &norm_tensors[1];
  slots["norm.translation_mean"] = &norm_tensors[2];
  slots["norm.translation_std"] = &norm_tensors[3];
  if (slots.size() != manifest.size()) throw CorruptModelFile("layer manifest does not match architecture");
  for (NamedTensor& entry : manifest) {
    const auto it = slots.find(entry.name);
    if (it == slots.end()) throw CorruptModelFile("unexpected tensor '" + entry.name + "'");
    if (it->second->shape() != entry.value.shape()) {
      throw CorruptModelFile("tensor '" + entry.name + "' has shape " + shape_string(entry.value.shape()));
    }
    *it->second = std::move(entry.value);
  }
  auto to3 = [](const Tensor& t) { return std::array<double, 3>{t[0], t[1], t[2]}; };
  DataNormalization& norm = model.normalization();
  norm.image_mean = to3(norm_tensors[0]);
  norm.image_std = to3(norm_tensors[1]);
  norm.translation_mean = to3(norm_tensors[2]);
  norm.translation_std = to3(norm_tensors[3]);
  model.zero_grad();
  return model;
}

void save_model(const PoseNetModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model file " + path.string());
}

PoseNetModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace posefuse::nn
