#include "waveformer/dywpe.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "waveformer/error.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

namespace {

std::size_t round_up(std::size_t n, std::size_t multiple) {
  return (n + multiple - 1) / multiple * multiple;
}

}  // namespace

void DywpeConfig::validate() const {
  if (channels == 0 || embed_dim == 0) {
    fail(ErrorKind::config, "dywpe: channels and embedding dim must be positive");
  }
  if (patch_size == 0 || padded_length == 0 || padded_length % patch_size != 0) {
    fail(ErrorKind::config, "dywpe: padded length must be a positive multiple of the patch size");
  }
}

std::size_t default_dywpe_levels(std::size_t n) noexcept {
  if (n < 2) return 1;
  const auto log2n = static_cast<std::size_t>(std::bit_width(n) - 1);
  if (log2n < 2) return 1;
  return std::clamp<std::size_t>(std::min<std::size_t>(3, log2n - 1), 1, 3);
}

template <typename T>
Dywpe<T>::Dywpe(const DywpeConfig& config, ParamStore<T>& params, Rng& rng)
    : config_(config), filters_(wavelet_filters(config.family)) {
  config_.validate();
  const std::size_t n = config_.resolution == DywpeResolution::token
                            ? config_.padded_length / config_.patch_size
                            : config_.padded_length;
  const std::size_t taps = filters_.taps();

  if (config_.levels > 0) {
    levels_ = config_.levels;
    working_length_ = round_up(n, std::size_t{1} << levels_);
    const std::size_t feasible = max_dwt_levels(working_length_, taps);
    if (levels_ > feasible) {
      fail(ErrorKind::level, "dywpe: " + std::to_string(levels_) +
                                 " levels are infeasible for working length " +
                                 std::to_string(working_length_) + " with a " +
                                 std::to_string(taps) + "-tap filter (max " +
                                 std::to_string(feasible) + ")");
    }
  } else {
    levels_ = default_dywpe_levels(n);
    working_length_ = round_up(n, std::size_t{1} << levels_);
    // Every level must see at least `taps` samples.
    while (levels_ > 1 && (working_length_ >> (levels_ - 1)) < taps) {
      --levels_;
      working_length_ = round_up(n, std::size_t{1} << levels_);
    }
    working_length_ = std::max(working_length_, round_up(taps, std::size_t{1} << levels_));
  }

  const std::size_t d = config_.embed_dim;
  w_channel_ = params.constant("dywpe.w_channel", {config_.channels},
                               T(1) / static_cast<T>(config_.channels));
  const T bound = T(1) / std::sqrt(static_cast<T>(d));
  w_gate_ = params.uniform("dywpe.W_g", {d, d}, bound, rng);
  w_value_ = params.uniform("dywpe.W_v", {d, d}, bound, rng);
  scale_.push_back(params.normal("dywpe.e_A" + std::to_string(levels_), {d}, T(0.02), rng));
  for (std::size_t j = levels_; j >= 1; --j) {
    scale_.push_back(params.normal("dywpe.e_D" + std::to_string(j), {d}, T(0.02), rng));
  }
}

template <typename T>
Tensor<T> Dywpe<T>::channel_project(const Tensor<T>& x) const {
  if (x.rank() != 2 || x.dim(0) != config_.channels) {
    fail(ErrorKind::dimension, "dywpe: channel projection expects " +
                                   std::to_string(config_.channels) + " channels, got " +
                                   shape_str(x.shape()));
  }
  return ops::matmul(ops::reshape(w_channel_, {1, config_.channels}), x);
}

template <typename T>
Tensor<T> Dywpe<T>::gate(const Tensor<T>& e, const Tensor<T>& c) const {
  const std::size_t d = config_.embed_dim;
  if (e.numel() != d) {
    fail(ErrorKind::dimension, "dywpe: scale embedding has " + std::to_string(e.numel()) +
                                   " entries, expected " + std::to_string(d));
  }
  if (c.numel() == 0) fail(ErrorKind::dimension, "dywpe: empty coefficient band");
  auto col = ops::reshape(e, {d, 1});
  auto g = ops::sigmoid(ops::matmul(w_gate_, col));
  auto v = ops::tanh(ops::matmul(w_value_, col));
  return ops::outer(c, ops::mul(g, v));
}

template <typename T>
Tensor<T> Dywpe<T>::encode(const Tensor<T>& x) const {
  const std::size_t block = std::size_t{1} << levels_;
  if (x.rank() != 2 || x.dim(1) % block != 0) {
    const std::size_t n = x.rank() == 2 ? x.dim(1) : 0;
    fail(ErrorKind::level, "dywpe: length " + std::to_string(n) + " is not divisible by 2^J=" +
                               std::to_string(block) + "; right-pad to " +
                               std::to_string(round_up(n, block)));
  }
  auto mono = channel_project(x);
  auto pyramid = dwt_multi(mono, levels_, filters_, config_.mode);

  // Bands become (d, len) rows so the inverse transform runs along the length
  // axis independently for every embedding dimension.
  DwtPyramid<T> modulated;
  modulated.mode = config_.mode;
  modulated.approx = ops::transpose(gate(scale_[0], pyramid.approx));
  for (std::size_t j = 0; j < levels_; ++j) {
    modulated.details.push_back(ops::transpose(gate(scale_[j + 1], pyramid.details[j])));
  }
  return ops::transpose(idwt_multi(modulated, filters_));
}

template <typename T>
Tensor<T> Dywpe<T>::forward(const Tensor<T>& x_padded) const {
  const std::size_t p = config_.patch_size;
  if (x_padded.rank() != 2 || x_padded.dim(1) != config_.padded_length) {
    fail(ErrorKind::dimension, "dywpe: expected padded length " +
                                   std::to_string(config_.padded_length) + ", got " +
                                   shape_str(x_padded.shape()));
  }
  const std::size_t tokens = config_.padded_length / p;
  if (config_.resolution == DywpeResolution::token) {
    auto pooled = ops::window_mean(x_padded, p);
    auto field = encode(ops::pad_cols(pooled, working_length_));
    return ops::slice_rows(field, 0, tokens);
  }
  auto field = encode(ops::pad_cols(x_padded, working_length_));
  auto per_step = ops::transpose(ops::slice_rows(field, 0, config_.padded_length));
  return ops::transpose(ops::window_mean(per_step, p));
}

template class Dywpe<float>;
template class Dywpe<double>;

}  // namespace waveformer
