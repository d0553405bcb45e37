#include "waveformer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "waveformer/error.hpp"

namespace waveformer {

namespace {

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

std::uint64_t fnv1a(const std::string& bytes, std::size_t begin) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = begin; i < bytes.size(); ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Parsed {
  CheckpointInfo info;
  std::size_t payload_offset = 0;
  std::string bytes;
};

std::size_t value_bytes(const std::string& precision) { return precision == "float32" ? 4 : 8; }

Parsed parse(const std::filesystem::path& path) {
  Parsed p;
  p.bytes = read_all(path);
  const auto& b = p.bytes;
  const std::string where = "checkpoint " + path.string() + ": ";
  if (b.size() < 16 || std::memcmp(b.data(), kCheckpointMagic, 8) != 0) {
    fail(ErrorKind::integrity, where + "bad magic; not a checkpoint file");
  }
  const auto manifest_len = get_le<std::uint64_t>(reinterpret_cast<const unsigned char*>(b.data() + 8));
  if (manifest_len > b.size() - 16) fail(ErrorKind::integrity, where + "truncated manifest");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(b.begin() + 16, b.begin() + 16 + static_cast<std::ptrdiff_t>(manifest_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::integrity, where + "manifest is not valid JSON: " + e.what());
  }
  auto& info = p.info;
  try {
    if (m.at("format_version").get<int>() != kCheckpointFormatVersion) {
      fail(ErrorKind::compatibility, where + "unsupported format_version " + m.at("format_version").dump());
    }
    info.model = model_config_from_json(m.at("model"));
    info.precision = m.at("precision").get<std::string>();
    if (info.precision != "float32" && info.precision != "float64") {
      fail(ErrorKind::integrity, where + "unknown precision '" + info.precision + "'");
    }
    info.run_config = m.value("config", nlohmann::json());
    info.seed = m.value("seed", std::uint64_t{0});
    if (m.contains("normalization") && !m["normalization"].is_null()) {
      ChannelStats s;
      s.mean = m["normalization"].at("mean").get<std::vector<double>>();
      s.std = m["normalization"].at("std").get<std::vector<double>>();
      info.stats = s;
    }
    info.class_names = m.value("class_names", std::vector<std::string>{});
    for (const auto& e : m.at("params")) {
      info.params.push_back({e.at("name").get<std::string>(), e.at("shape").get<Shape>()});
    }
    p.payload_offset = 16 + manifest_len;
    std::size_t expected = 0;
    for (const auto& q : info.params) expected += shape_numel(q.shape) * value_bytes(info.precision);
    if (b.size() - p.payload_offset != expected) {
      fail(ErrorKind::integrity, where + "payload has " + std::to_string(b.size() - p.payload_offset) +
                                     " bytes, manifest describes " + std::to_string(expected));
    }
    if (m.at("payload_fnv1a").get<std::uint64_t>() != fnv1a(b, p.payload_offset)) {
      fail(ErrorKind::integrity, where + "payload checksum mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::integrity, where + "malformed manifest: " + e.what());
  }
  return p;
}

}  // namespace

template <>
const char* precision_name<float>() noexcept {
  return "float32";
}
template <>
const char* precision_name<double>() noexcept {
  return "float64";
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const WaveFormer<T>& model,
                     const CheckpointInfo& info) {
  std::string payload;
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (const auto& p : model.params().entries()) {
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"precision", precision_name<T>()}});
    for (T v : p.tensor.data()) put_le(payload, std::bit_cast<Bits<T>>(v));
  }
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["precision"] = precision_name<T>();
  manifest["seed"] = info.seed;
  manifest["config"] = info.run_config;
  manifest["model"] = model_config_to_json(model.config());
  if (info.stats) {
    manifest["normalization"] = {{"mean", info.stats->mean}, {"std", info.stats->std}};
  } else {
    manifest["normalization"] = nullptr;
  }
  manifest["class_names"] = info.class_names;
  manifest["params"] = params;
  manifest["payload_fnv1a"] = fnv1a(payload, 0);
  const std::string text = manifest.dump();

  std::string out(kCheckpointMagic, 8);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  out += payload;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorKind::io, "failed writing checkpoint " + path.string());
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) { return parse(path).info; }

template <typename T>
std::unique_ptr<WaveFormer<T>> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info_out) {
  auto parsed = parse(path);
  const auto& info = parsed.info;
  if (info.precision != precision_name<T>()) {
    fail(ErrorKind::compatibility, "checkpoint stores " + info.precision + " values, loader expects " +
                                       precision_name<T>());
  }
  auto model = std::make_unique<WaveFormer<T>>(info.model, info.seed);
  auto& entries = model->params().entries();
  if (entries.size() != info.params.size()) {
    fail(ErrorKind::integrity, "checkpoint lists " + std::to_string(info.params.size()) +
                                   " parameters, model has " + std::to_string(entries.size()));
  }
  const auto* cursor = reinterpret_cast<const unsigned char*>(parsed.bytes.data() + parsed.payload_offset);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != info.params[i].name || entries[i].tensor.shape() != info.params[i].shape) {
      fail(ErrorKind::integrity, "checkpoint parameter " + std::to_string(i) + " is '" + info.params[i].name +
                                     "' " + shape_str(info.params[i].shape) + ", model expects '" +
                                     entries[i].name + "' " + shape_str(entries[i].tensor.shape()));
    }
    for (T& v : entries[i].tensor.mutable_data()) {
      v = std::bit_cast<T>(get_le<Bits<T>>(cursor));
      cursor += sizeof(T);
    }
  }
  if (info_out) *info_out = info;
  return model;
}

template void save_checkpoint(const std::filesystem::path&, const WaveFormer<float>&, const CheckpointInfo&);
template void save_checkpoint(const std::filesystem::path&, const WaveFormer<double>&, const CheckpointInfo&);
template std::unique_ptr<WaveFormer<float>> load_checkpoint(const std::filesystem::path&, CheckpointInfo*);
template std::unique_ptr<WaveFormer<double>> load_checkpoint(const std::filesystem::path&, CheckpointInfo*);

}  // namespace waveformer
