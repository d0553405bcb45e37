#include "waveformer/model.hpp"

#include "waveformer/error.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

namespace {

const char* resolution_name(DywpeResolution r) {
  return r == DywpeResolution::token ? "token" : "signal";
}

DywpeResolution parse_resolution(const std::string& s) {
  if (s == "token") return DywpeResolution::token;
  if (s == "signal") return DywpeResolution::signal;
  fail(ErrorKind::config, "dywpe resolution must be token or signal, got '" + s + "'");
}

const char* fallback_name(PositionFallback f) {
  return f == PositionFallback::learned ? "learned" : "none";
}

PositionFallback parse_fallback(const std::string& s) {
  if (s == "learned") return PositionFallback::learned;
  if (s == "none") return PositionFallback::none;
  fail(ErrorKind::config, "position fallback must be learned or none, got '" + s + "'");
}

template <typename T>
std::optional<Dywpe<T>> make_dywpe(const ModelConfig& c, ParamStore<T>& params, Rng& rng) {
  if (!c.use_dywpe) return std::nullopt;
  return std::optional<Dywpe<T>>(std::in_place, c.dywpe(), params, rng);
}

template <typename T>
Tensor<T> make_position_table(const ModelConfig& c, ParamStore<T>& params, Rng& rng) {
  if (c.use_dywpe || c.position_fallback != PositionFallback::learned) return {};
  return params.normal("pos.table", {c.num_patches(), c.embed_dim}, T(0.02), rng);
}

}  // namespace

void ModelConfig::validate() const {
  if (channels == 0) fail(ErrorKind::config, "model needs at least one input channel");
  if (length == 0) fail(ErrorKind::config, "model needs a positive series length");
  if (classes < 2) fail(ErrorKind::config, "model needs K >= 2 classes");
  embedding().validate();
  encoder().validate();
  if (patch_size > padded_length()) fail(ErrorKind::config, "patch size exceeds series length");
}

PatchEmbedConfig ModelConfig::embedding() const {
  PatchEmbedConfig e;
  e.channels = channels;
  e.patch_size = patch_size;
  e.embed_dim = embed_dim;
  e.alpha_init = alpha_init;
  e.family = family;
  e.wavelet_path = use_wavelet_embed;
  return e;
}

DywpeConfig ModelConfig::dywpe() const {
  DywpeConfig c;
  c.channels = channels;
  c.embed_dim = embed_dim;
  c.patch_size = patch_size;
  c.padded_length = padded_length();
  c.levels = dywpe_levels;
  c.family = family;
  c.resolution = dywpe_resolution;
  return c;
}

EncoderConfig ModelConfig::encoder() const {
  EncoderConfig e;
  e.embed_dim = embed_dim;
  e.heads = heads;
  e.layers = layers;
  e.ffn_multiplier = ffn_multiplier;
  e.dropout = dropout;
  e.use_rpe = use_rpe;
  e.rpe_buckets = rpe_buckets;
  e.rpe_max_distance = rpe_max_distance;
  e.rpe_tie_heads = rpe_tie_heads;
  e.ln_eps = ln_eps;
  return e;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {
      {"channels", c.channels},
      {"length", c.length},
      {"classes", c.classes},
      {"patch_size", c.patch_size},
      {"embed_dim", c.embed_dim},
      {"heads", c.heads},
      {"layers", c.layers},
      {"ffn_multiplier", c.ffn_multiplier},
      {"dropout", c.dropout},
      {"wavelet", wavelet_family_name(c.family)},
      {"alpha_init", c.alpha_init},
      {"dywpe_levels", c.dywpe_levels},
      {"dywpe_resolution", resolution_name(c.dywpe_resolution)},
      {"use_wavelet_embed", c.use_wavelet_embed},
      {"use_dywpe", c.use_dywpe},
      {"use_rpe", c.use_rpe},
      {"position_fallback", fallback_name(c.position_fallback)},
      {"rpe_buckets", c.rpe_buckets},
      {"rpe_max_distance", c.rpe_max_distance},
      {"rpe_tie_heads", c.rpe_tie_heads},
      {"ln_eps", c.ln_eps},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.channels = j.at("channels").get<std::size_t>();
    c.length = j.at("length").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.patch_size = j.at("patch_size").get<std::size_t>();
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.ffn_multiplier = j.at("ffn_multiplier").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.family = parse_wavelet_family(j.at("wavelet").get<std::string>());
    c.alpha_init = j.at("alpha_init").get<double>();
    c.dywpe_levels = j.at("dywpe_levels").get<std::size_t>();
    c.dywpe_resolution = parse_resolution(j.at("dywpe_resolution").get<std::string>());
    c.use_wavelet_embed = j.at("use_wavelet_embed").get<bool>();
    c.use_dywpe = j.at("use_dywpe").get<bool>();
    c.use_rpe = j.at("use_rpe").get<bool>();
    c.position_fallback = parse_fallback(j.at("position_fallback").get<std::string>());
    c.rpe_buckets = j.at("rpe_buckets").get<int>();
    c.rpe_max_distance = j.at("rpe_max_distance").get<int>();
    c.rpe_tie_heads = j.at("rpe_tie_heads").get<bool>();
    c.ln_eps = j.at("ln_eps").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("model config: ") + e.what());
  }
}

template <typename T>
WaveFormer<T>::WaveFormer(const ModelConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)),
      init_rng_(seed),
      embedding_(config_.embedding(), params_, init_rng_),
      dywpe_(make_dywpe(config_, params_, init_rng_)),
      position_table_(make_position_table(config_, params_, init_rng_)),
      encoder_(config_.encoder(), params_, init_rng_),
      head_(config_.embed_dim, config_.classes, config_.dropout, params_, init_rng_) {}

template <typename T>
void WaveFormer<T>::check_input(const Tensor<T>& x) const {
  if (x.rank() != 2 || x.dim(0) != config_.channels || x.dim(1) != config_.length) {
    fail(ErrorKind::compatibility, "model expects input (C=" + std::to_string(config_.channels) +
                                       ", L=" + std::to_string(config_.length) + "), got " +
                                       shape_str(x.shape()));
  }
}

template <typename T>
Tensor<T> WaveFormer<T>::positional_field(const Tensor<T>& x) const {
  check_input(x);
  if (dywpe_) return dywpe_->forward(pad_to_multiple(x, config_.patch_size));
  return position_table_;
}

template <typename T>
Tensor<T> WaveFormer<T>::embed(const Tensor<T>& x) const {
  check_input(x);
  auto padded = pad_to_multiple(x, config_.patch_size);
  auto tokens = embedding_.fuse_and_prepend_cls(embedding_.raw_patch_path(padded),
                                                embedding_.wavelet_patch_path(padded));
  Tensor<T> field;
  if (dywpe_) {
    field = dywpe_->forward(padded);
  } else {
    field = position_table_;
  }
  if (!field.defined()) return tokens;
  // The class token has no temporal position and receives a zero row.
  auto full = ops::concat_rows<T>({Tensor<T>::zeros({1, config_.embed_dim}), field});
  return ops::add(tokens, full);
}

template <typename T>
Tensor<T> WaveFormer<T>::classify_tokens(const Tensor<T>& tokens, bool training, Rng& rng) const {
  auto encoded = encoder_.forward(tokens, training, rng);
  return head_.forward(ops::slice_rows(encoded, 0, 1), training, rng);
}

template <typename T>
Tensor<T> WaveFormer<T>::forward(const Tensor<T>& x, bool training, Rng& rng) const {
  return classify_tokens(embed(x), training, rng);
}

template <typename T>
Tensor<T> WaveFormer<T>::forward_batch(const std::vector<Tensor<T>>& xs, bool training,
                                       Rng& rng) const {
  std::vector<Tensor<T>> rows;
  rows.reserve(xs.size());
  for (const auto& x : xs) rows.push_back(ops::reshape(forward(x, training, rng), {1, config_.classes}));
  return ops::concat_rows(rows);
}

template class WaveFormer<float>;
template class WaveFormer<double>;

}  // namespace waveformer
