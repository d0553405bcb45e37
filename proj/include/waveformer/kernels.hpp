#pragma once

// Dense compute kernels. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::parallel with the same
// per-element summation order; the unqualified entry points dispatch between
// them based on the selected backend and the amount of work.

#include <cstddef>
#include <span>

namespace waveformer::kernels {

enum class Backend { serial, parallel };

// True when the library was compiled with OpenMP.
bool parallel_available() noexcept;

void set_backend(Backend backend) noexcept;
Backend backend() noexcept;

// Work (in multiply-adds) below which dispatch stays serial.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

// C (m x n) = op(A) * op(B), or C += ... when accumulate is set.
// op(A) is m x k; A is stored k x m when trans_a. op(B) is k x n; B is
// stored n x k when trans_b. All matrices are row-major and contiguous.
struct GemmShape {
  std::size_t m;
  std::size_t n;
  std::size_t k;
  bool trans_a = false;
  bool trans_b = false;
};

// Grouped strided 1-D correlation. x is (in_channels, length), weight is
// (out_channels, in_channels / groups, kernel), out is (out_channels, out_length).
struct ConvShape {
  std::size_t in_channels;
  std::size_t length;
  std::size_t out_channels;
  std::size_t kernel;
  std::size_t stride;
  std::size_t groups;

  std::size_t out_length() const noexcept { return (length - kernel) / stride + 1; }
  std::size_t in_per_group() const noexcept { return in_channels / groups; }
  std::size_t out_per_group() const noexcept { return out_channels / groups; }
};

// One periodized filter-bank level over (channels, length) rows.
struct DwtShape {
  std::size_t channels;
  std::size_t length;  // signal length; coefficient rows have length / 2
};

namespace serial {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate);

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out);

// Accumulates into grad_x / grad_weight / grad_bias; an empty span skips that gradient.
template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail);

// Adjoint of dwt_analysis; accumulates into x.
template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x);

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x, std::span<T> out);

}  // namespace serial

namespace parallel {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate);

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out);

template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail);

template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x);

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x, std::span<T> out);

}  // namespace parallel

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate);

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out);

template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias);

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail);

template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x);

template <typename T>
void softmax_rows(std::size_t rows, std::size_t cols, std::span<const T> x, std::span<T> out);

}  // namespace waveformer::kernels
