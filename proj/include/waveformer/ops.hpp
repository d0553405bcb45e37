#pragma once

// Differentiable tensor operations. Matrices are 2-D row-major tensors;
// "rows" is axis 0 and "cols" is axis 1.

#include <cstdint>
#include <random>
#include <vector>

#include "waveformer/tensor.hpp"

namespace waveformer {

using Rng = std::mt19937_64;

namespace ops {

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);

// x * s where s is a one-element tensor; differentiable in both.
template <typename T> Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s);

// Adds vector b (length = last dim of x) to every row of x.
template <typename T> Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& b);

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end);
template <typename T> Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts);
template <typename T> Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);

// Right zero-padding of a matrix to `cols` columns (no-op when already that wide).
template <typename T> Tensor<T> pad_cols(const Tensor<T>& a, std::size_t cols);

// Grouped strided 1-D correlation over x (C_in, L). kernels is
// (C_out, C_in / groups, k), or (C_out, k) when C_in / groups == 1. bias may be
// undefined; otherwise it has C_out entries.
template <typename T>
Tensor<T> grouped_conv1d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias,
                         std::size_t stride, std::size_t groups);

// Mean over consecutive non-overlapping windows of `width` along the columns.
template <typename T> Tensor<T> window_mean(const Tensor<T>& x, std::size_t width);

template <typename T> Tensor<T> softmax_lastdim(const Tensor<T>& x);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps);

template <typename T> Tensor<T> gelu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);

// Inverted dropout: kept entries are scaled by 1 / (1 - rate). Identity when
// not training or rate == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng);

// (n) x (d) -> (n, d) with out[i, j] = c[i] * m[j].
template <typename T> Tensor<T> outer(const Tensor<T>& c, const Tensor<T>& m);

// (T, T) matrix out[i, j] = table[head, index[i * T + j]].
template <typename T>
Tensor<T> bias_lookup(const Tensor<T>& table, std::size_t head, const std::vector<std::int32_t>& index,
                      std::size_t tokens);

}  // namespace ops
}  // namespace waveformer
