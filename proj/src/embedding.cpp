#include "waveformer/embedding.hpp"

#include <cmath>

#include "waveformer/error.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

void PatchEmbedConfig::validate() const {
  if (channels == 0) fail(ErrorKind::config, "patch embedding needs at least one channel");
  if (patch_size < 2 || patch_size % 2 != 0) {
    fail(ErrorKind::config, "patch size must be even and >= 2, got " + std::to_string(patch_size));
  }
  if (embed_dim == 0 || embed_dim % 2 != 0) {
    fail(ErrorKind::config, "embedding dim must be positive and even, got " +
                                std::to_string(embed_dim));
  }
}

template <typename T>
Tensor<T> pad_to_multiple(const Tensor<T>& x, std::size_t p) {
  if (x.rank() != 2) {
    fail(ErrorKind::dimension, "pad_to_multiple: expected (C, L), got " + shape_str(x.shape()));
  }
  if (p == 0) fail(ErrorKind::config, "pad_to_multiple: p must be >= 1");
  const std::size_t len = x.dim(1);
  const std::size_t target = (len + p - 1) / p * p;
  return ops::pad_cols(x, target);
}

template <typename T>
PatchEmbedding<T>::PatchEmbedding(const PatchEmbedConfig& config, ParamStore<T>& params, Rng& rng)
    : config_(config), filters_(wavelet_filters(config.family)) {
  config_.validate();
  const std::size_t half = config_.embed_dim / 2;
  const std::size_t c = config_.channels;
  const std::size_t p = config_.patch_size;

  const T raw_bound = T(1) / std::sqrt(static_cast<T>(c * p));
  raw_weight_ = params.uniform("embed.raw.weight", {half, c, p}, raw_bound, rng);
  raw_bias_ = params.uniform("embed.raw.bias", {half}, raw_bound, rng);
  if (config_.wavelet_path) {
    const T bound = T(1) / std::sqrt(static_cast<T>(c * p / 2));
    second_weight_ = params.uniform("embed.wave.weight", {half, c, p / 2}, bound, rng);
    second_bias_ = params.uniform("embed.wave.bias", {half}, bound, rng);
    alpha_ = params.constant("embed.alpha", {1}, static_cast<T>(config_.alpha_init));
  } else {
    second_weight_ = params.uniform("embed.raw2.weight", {half, c, p}, raw_bound, rng);
    second_bias_ = params.uniform("embed.raw2.bias", {half}, raw_bound, rng);
  }
  cls_ = params.normal("embed.cls", {config_.embed_dim}, T(0.02), rng);
}

template <typename T>
Tensor<T> PatchEmbedding<T>::raw_patch_path(const Tensor<T>& x_padded) const {
  const std::size_t p = config_.patch_size;
  return ops::grouped_conv1d(x_padded, raw_weight_, raw_bias_, p, 1);
}

template <typename T>
Tensor<T> PatchEmbedding<T>::wavelet_input(const Tensor<T>& x_padded) const {
  if (!config_.wavelet_path) {
    fail(ErrorKind::config, "wavelet path is disabled in this embedding");
  }
  auto level = dwt_level(x_padded, filters_, config_.mode);
  return ops::add(level.approx, ops::mul_scalar(level.detail, alpha_));
}

template <typename T>
Tensor<T> PatchEmbedding<T>::wavelet_patch_path(const Tensor<T>& x_padded) const {
  const std::size_t p = config_.patch_size;
  if (!config_.wavelet_path) {
    return ops::grouped_conv1d(x_padded, second_weight_, second_bias_, p, 1);
  }
  if (x_padded.dim(1) % p != 0) {
    fail(ErrorKind::length, "wavelet path: length " + std::to_string(x_padded.dim(1)) +
                                " is not a multiple of the patch size");
  }
  return ops::grouped_conv1d(wavelet_input(x_padded), second_weight_, second_bias_, p / 2, 1);
}

template <typename T>
Tensor<T> PatchEmbedding<T>::fuse_and_prepend_cls(const Tensor<T>& raw,
                                                  const Tensor<T>& wav) const {
  const std::size_t half = config_.embed_dim / 2;
  if (raw.rank() != 2 || wav.rank() != 2 || raw.dim(0) != half || wav.dim(0) != half) {
    fail(ErrorKind::fusion, "fusion: both paths must be (d/2, N); got " + shape_str(raw.shape()) +
                                " and " + shape_str(wav.shape()));
  }
  if (raw.dim(1) != wav.dim(1)) {
    fail(ErrorKind::fusion, "fusion: raw path has " + std::to_string(raw.dim(1)) +
                                " patches, wavelet path has " + std::to_string(wav.dim(1)));
  }
  auto patches = ops::transpose(ops::concat_rows<T>({raw, wav}));
  auto cls = ops::reshape(cls_, {1, config_.embed_dim});
  return ops::concat_rows<T>({cls, patches});
}

template <typename T>
Tensor<T> PatchEmbedding<T>::forward(const Tensor<T>& x) const {
  if (x.rank() != 2 || x.dim(0) != config_.channels) {
    fail(ErrorKind::dimension, "embedding: expected (" + std::to_string(config_.channels) +
                                   ", L) input, got " + shape_str(x.shape()));
  }
  auto padded = pad_to_multiple(x, config_.patch_size);
  return fuse_and_prepend_cls(raw_patch_path(padded), wavelet_patch_path(padded));
}

template Tensor<float> pad_to_multiple(const Tensor<float>&, std::size_t);
template Tensor<double> pad_to_multiple(const Tensor<double>&, std::size_t);
template class PatchEmbedding<float>;
template class PatchEmbedding<double>;

}  // namespace waveformer
