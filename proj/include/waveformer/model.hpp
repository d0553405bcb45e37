#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "waveformer/dywpe.hpp"
#include "waveformer/embedding.hpp"
#include "waveformer/encoder.hpp"
#include "waveformer/params.hpp"
#include "waveformer/wavelet.hpp"

namespace waveformer {

// Positional signal used when DyWPE is switched off: a learned per-token
// table (the ablation baseline) or nothing at all.
enum class PositionFallback { learned, none };

struct ModelConfig {
  std::size_t channels = 1;  // C
  std::size_t length = 0;    // L before padding
  std::size_t classes = 2;   // K
  std::size_t patch_size = 8;
  std::size_t embed_dim = 128;
  std::size_t heads = 4;
  std::size_t layers = 4;
  std::size_t ffn_multiplier = 4;
  double dropout = 0.2;
  WaveletFamily family = WaveletFamily::haar;
  double alpha_init = 1.0;
  std::size_t dywpe_levels = 0;
  DywpeResolution dywpe_resolution = DywpeResolution::token;
  bool use_wavelet_embed = true;
  bool use_dywpe = true;
  bool use_rpe = true;
  PositionFallback position_fallback = PositionFallback::learned;
  int rpe_buckets = 32;
  int rpe_max_distance = 16;
  bool rpe_tie_heads = false;
  double ln_eps = 1e-5;

  std::size_t padded_length() const noexcept {
    return (length + patch_size - 1) / patch_size * patch_size;
  }
  std::size_t num_patches() const noexcept { return padded_length() / patch_size; }

  void validate() const;

  PatchEmbedConfig embedding() const;
  DywpeConfig dywpe() const;
  EncoderConfig encoder() const;
};

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Full classifier: dual-path patch embedding, signal-aware positional field,
// relative-bias encoder, and the class-token head.
template <typename T>
class WaveFormer {
 public:
  WaveFormer(const ModelConfig& config, std::uint64_t seed);

  WaveFormer(const WaveFormer&) = delete;
  WaveFormer& operator=(const WaveFormer&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  ParamStore<T>& params() noexcept { return params_; }
  const ParamStore<T>& params() const noexcept { return params_; }

  const PatchEmbedding<T>& embedding() const noexcept { return embedding_; }
  const std::optional<Dywpe<T>>& dywpe() const noexcept { return dywpe_; }
  const Encoder<T>& encoder() const noexcept { return encoder_; }

  // (N, d) positional field added to patch tokens; undefined when none applies.
  Tensor<T> positional_field(const Tensor<T>& x) const;

  // (C, L) -> (N + 1, d) tokens entering the encoder.
  Tensor<T> embed(const Tensor<T>& x) const;

  // Encoder + head over prepared tokens.
  Tensor<T> classify_tokens(const Tensor<T>& tokens, bool training, Rng& rng) const;

  // (C, L) -> (K) logits.
  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) const;

  // Stacks per-sample logits into (B, K).
  Tensor<T> forward_batch(const std::vector<Tensor<T>>& xs, bool training, Rng& rng) const;

 private:
  void check_input(const Tensor<T>& x) const;

  ModelConfig config_;
  ParamStore<T> params_;
  Rng init_rng_;
  PatchEmbedding<T> embedding_;
  std::optional<Dywpe<T>> dywpe_;
  Tensor<T> position_table_;
  Encoder<T> encoder_;
  ClassifierHead<T> head_;
};

extern template class WaveFormer<float>;
extern template class WaveFormer<double>;

}  // namespace waveformer
