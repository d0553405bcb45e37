#pragma once

// Per-row bodies shared by the serial and OpenMP drivers. Keeping the inner
// loops in one place fixes the floating-point summation order, so both
// backends produce the same bits for the same inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "waveformer/kernels.hpp"

namespace waveformer::kernels::rows {

template <typename T>
inline void gemm_row(const GemmShape& s, std::size_t i, std::span<const T> a,
                     std::span<const T> b, std::span<T> c, bool accumulate) {
  T* crow = c.data() + i * s.n;
  if (!accumulate) std::fill(crow, crow + s.n, T(0));
  for (std::size_t p = 0; p < s.k; ++p) {
    const T av = s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
    if (av == T(0)) continue;
    if (s.trans_b) {
      for (std::size_t j = 0; j < s.n; ++j) crow[j] += av * b[j * s.k + p];
    } else {
      const T* brow = b.data() + p * s.n;
      for (std::size_t j = 0; j < s.n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
inline void conv_forward_channel(const ConvShape& s, std::size_t o, std::span<const T> x,
                                 std::span<const T> weight, std::span<const T> bias,
                                 std::span<T> out) {
  const std::size_t ipg = s.in_per_group();
  const std::size_t group = o / s.out_per_group();
  const std::size_t out_len = s.out_length();
  T* orow = out.data() + o * out_len;
  const T b = bias.empty() ? T(0) : bias[o];
  std::fill(orow, orow + out_len, b);
  for (std::size_t ci = 0; ci < ipg; ++ci) {
    const T* xrow = x.data() + (group * ipg + ci) * s.length;
    const T* wrow = weight.data() + (o * ipg + ci) * s.kernel;
    for (std::size_t t = 0; t < out_len; ++t) {
      const T* xs = xrow + t * s.stride;
      T acc = T(0);
      for (std::size_t kk = 0; kk < s.kernel; ++kk) acc += wrow[kk] * xs[kk];
      orow[t] += acc;
    }
  }
}

template <typename T>
inline void conv_backward_weight(const ConvShape& s, std::size_t o, std::span<const T> x,
                                 std::span<const T> grad_out, std::span<T> grad_weight,
                                 std::span<T> grad_bias) {
  const std::size_t ipg = s.in_per_group();
  const std::size_t group = o / s.out_per_group();
  const std::size_t out_len = s.out_length();
  const T* grow = grad_out.data() + o * out_len;
  if (!grad_bias.empty()) {
    T acc = T(0);
    for (std::size_t t = 0; t < out_len; ++t) acc += grow[t];
    grad_bias[o] += acc;
  }
  if (grad_weight.empty()) return;
  for (std::size_t ci = 0; ci < ipg; ++ci) {
    const T* xrow = x.data() + (group * ipg + ci) * s.length;
    T* gw = grad_weight.data() + (o * ipg + ci) * s.kernel;
    for (std::size_t kk = 0; kk < s.kernel; ++kk) {
      T acc = T(0);
      for (std::size_t t = 0; t < out_len; ++t) acc += grow[t] * xrow[t * s.stride + kk];
      gw[kk] += acc;
    }
  }
}

template <typename T>
inline void conv_backward_input(const ConvShape& s, std::size_t ic, std::span<const T> weight,
                                std::span<const T> grad_out, std::span<T> grad_x) {
  const std::size_t ipg = s.in_per_group();
  const std::size_t opg = s.out_per_group();
  const std::size_t group = ic / ipg;
  const std::size_t ci = ic % ipg;
  const std::size_t out_len = s.out_length();
  T* gx = grad_x.data() + ic * s.length;
  for (std::size_t o = group * opg; o < (group + 1) * opg; ++o) {
    const T* grow = grad_out.data() + o * out_len;
    const T* wrow = weight.data() + (o * ipg + ci) * s.kernel;
    for (std::size_t t = 0; t < out_len; ++t) {
      const T go = grow[t];
      T* xs = gx + t * s.stride;
      for (std::size_t kk = 0; kk < s.kernel; ++kk) xs[kk] += go * wrow[kk];
    }
  }
}

template <typename T>
inline void dwt_analysis_row(const DwtShape& s, std::size_t c, std::span<const T> lo,
                             std::span<const T> hi, std::span<const T> x, std::span<T> approx,
                             std::span<T> detail) {
  const std::size_t half = s.length / 2;
  const std::size_t taps = lo.size();
  const T* xrow = x.data() + c * s.length;
  T* arow = approx.data() + c * half;
  T* drow = detail.data() + c * half;
  for (std::size_t n = 0; n < half; ++n) {
    T a = T(0);
    T d = T(0);
    for (std::size_t k = 0; k < taps; ++k) {
      const T v = xrow[(2 * n + k) % s.length];
      a += lo[k] * v;
      d += hi[k] * v;
    }
    arow[n] = a;
    drow[n] = d;
  }
}

template <typename T>
inline void dwt_synthesis_row(const DwtShape& s, std::size_t c, std::span<const T> lo,
                              std::span<const T> hi, std::span<const T> approx,
                              std::span<const T> detail, std::span<T> x) {
  const std::size_t half = s.length / 2;
  const std::size_t taps = lo.size();
  T* xrow = x.data() + c * s.length;
  const T* arow = approx.data() + c * half;
  const T* drow = detail.data() + c * half;
  for (std::size_t n = 0; n < half; ++n) {
    for (std::size_t k = 0; k < taps; ++k) {
      xrow[(2 * n + k) % s.length] += lo[k] * arow[n] + hi[k] * drow[n];
    }
  }
}

template <typename T>
inline void softmax_row(std::size_t cols, const T* x, T* out) {
  T mx = x[0];
  for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
  T sum = T(0);
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = std::exp(x[j] - mx);
    sum += out[j];
  }
  const T inv = T(1) / sum;
  for (std::size_t j = 0; j < cols; ++j) out[j] *= inv;
}

}  // namespace waveformer::kernels::rows
