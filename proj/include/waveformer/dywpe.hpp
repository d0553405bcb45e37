#pragma once

#include <cstddef>
#include <vector>

#include "waveformer/params.hpp"
#include "waveformer/tensor.hpp"
#include "waveformer/wavelet.hpp"

namespace waveformer {

// Length axis the positional decomposition runs over: patch tokens (signal
// mean-pooled per patch) or the padded raw signal, pooled back to tokens after
// reconstruction.
enum class DywpeResolution { token, signal };

struct DywpeConfig {
  std::size_t channels = 1;
  std::size_t embed_dim = 128;
  std::size_t patch_size = 8;
  std::size_t padded_length = 0;  // L', a multiple of patch_size
  std::size_t levels = 0;         // 0 selects the default for the working length
  WaveletFamily family = WaveletFamily::haar;
  BoundaryMode mode = BoundaryMode::periodized;
  DywpeResolution resolution = DywpeResolution::token;

  void validate() const;
};

// min(3, floor(log2(n)) - 1), at least 1.
std::size_t default_dywpe_levels(std::size_t n) noexcept;

// Dynamic wavelet positional encoding. The signal is projected to one
// channel, decomposed into J levels, every band is scaled by a gated
// per-scale vector, and the inverse transform over the length axis yields one
// d-dimensional position vector per step. The map signal -> P is linear.
template <typename T>
class Dywpe {
 public:
  Dywpe(const DywpeConfig& config, ParamStore<T>& params, Rng& rng);

  const DywpeConfig& config() const noexcept { return config_; }
  std::size_t levels() const noexcept { return levels_; }
  // Working length after padding to a multiple of 2^J.
  std::size_t working_length() const noexcept { return working_length_; }

  // (C, n) -> (1, n): sum over channels weighted by w_channel.
  Tensor<T> channel_project(const Tensor<T>& x) const;

  // (sigmoid(W_g e) * tanh(W_v e)) outer c: e is (d), c has n entries -> (n, d).
  Tensor<T> gate(const Tensor<T>& e, const Tensor<T>& c) const;

  // (C, n) -> (n, d). n must be divisible by 2^J.
  Tensor<T> encode(const Tensor<T>& x) const;

  // (C, L') padded signal -> (N, d) positional field for the patch tokens.
  Tensor<T> forward(const Tensor<T>& x_padded) const;

  const Tensor<T>& w_channel() const noexcept { return w_channel_; }
  const Tensor<T>& w_gate() const noexcept { return w_gate_; }
  const Tensor<T>& w_value() const noexcept { return w_value_; }
  // {e_A_J, e_D_J, ..., e_D_1}
  const std::vector<Tensor<T>>& scale_embeddings() const noexcept { return scale_; }

 private:
  DywpeConfig config_;
  WaveletFilterPair filters_;
  std::size_t levels_ = 1;
  std::size_t working_length_ = 0;
  Tensor<T> w_channel_;
  Tensor<T> w_gate_;
  Tensor<T> w_value_;
  std::vector<Tensor<T>> scale_;
};

extern template class Dywpe<float>;
extern template class Dywpe<double>;

}  // namespace waveformer
