#pragma once

#include <cstddef>

#include "waveformer/params.hpp"
#include "waveformer/tensor.hpp"
#include "waveformer/wavelet.hpp"

namespace waveformer {

struct PatchEmbedConfig {
  std::size_t channels = 1;
  std::size_t patch_size = 8;   // p, even and >= 2
  std::size_t embed_dim = 128;  // d, even: d/2 features per path
  double alpha_init = 1.0;
  WaveletFamily family = WaveletFamily::haar;
  BoundaryMode mode = BoundaryMode::periodized;
  // false replaces the wavelet path with a second raw-signal path of the same
  // output shape (the "raw patches only" ablation).
  bool wavelet_path = true;

  void validate() const;
};

// Right zero-padding of (C, L) to the next multiple of p. Returns x itself
// when L is already divisible.
template <typename T>
Tensor<T> pad_to_multiple(const Tensor<T>& x, std::size_t p);

// Dual-path patch embedding: a stride-p convolution over the raw signal and a
// stride-p/2 convolution over cA + alpha * cD, concatenated feature-wise, with
// a learned class token prepended.
template <typename T>
class PatchEmbedding {
 public:
  PatchEmbedding(const PatchEmbedConfig& config, ParamStore<T>& params, Rng& rng);

  const PatchEmbedConfig& config() const noexcept { return config_; }

  // x_padded is (C, L') with L' divisible by p; result is (d/2, N).
  Tensor<T> raw_patch_path(const Tensor<T>& x_padded) const;
  Tensor<T> wavelet_patch_path(const Tensor<T>& x_padded) const;

  // (C, L'/2) combination cA + alpha * cD of a one-level per-channel DWT.
  Tensor<T> wavelet_input(const Tensor<T>& x_padded) const;

  // (d/2, N) + (d/2, N) -> (N + 1, d); row 0 is the class token.
  Tensor<T> fuse_and_prepend_cls(const Tensor<T>& raw, const Tensor<T>& wav) const;

  // Full path from an unpadded (C, L) signal to (N + 1, d) tokens.
  Tensor<T> forward(const Tensor<T>& x) const;

  const Tensor<T>& alpha() const noexcept { return alpha_; }
  const Tensor<T>& cls_token() const noexcept { return cls_; }

 private:
  PatchEmbedConfig config_;
  WaveletFilterPair filters_;
  Tensor<T> raw_weight_;
  Tensor<T> raw_bias_;
  Tensor<T> second_weight_;
  Tensor<T> second_bias_;
  Tensor<T> alpha_;
  Tensor<T> cls_;
};

extern template class PatchEmbedding<float>;
extern template class PatchEmbedding<double>;

}  // namespace waveformer
