#include <atomic>

#include "kernels_rows.hpp"

namespace waveformer::kernels {

namespace parallel {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < s.m; ++i) rows::gemm_row(s, i, a, b, c, accumulate);
}

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < s.out_channels; ++o) {
    rows::conv_forward_channel(s, o, x, weight, bias, out);
  }
}

template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  if (!grad_weight.empty() || !grad_bias.empty()) {
#pragma omp parallel for schedule(static)
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      rows::conv_backward_weight(s, o, x, grad_out, grad_weight, grad_bias);
    }
  }
  if (!grad_x.empty()) {
    // Each input channel is written only by the output channels of its own group.
#pragma omp parallel for schedule(static)
    for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
      rows::conv_backward_input(s, ic, weight, grad_out, grad_x);
    }
  }
}

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail) {
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < s.channels; ++c) {
    rows::dwt_analysis_row(s, c, lo, hi, x, approx, detail);
  }
}

template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x) {
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < s.channels; ++c) {
    rows::dwt_synthesis_row(s, c, lo, hi, approx, detail, x);
  }
}

template <typename T>
void softmax_rows(std::size_t nrows, std::size_t cols, std::span<const T> x, std::span<T> out) {
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < nrows; ++r) {
    rows::softmax_row(cols, x.data() + r * cols, out.data() + r * cols);
  }
}

}  // namespace parallel

namespace {

std::atomic<Backend> g_backend{
#ifdef WAVEFORMER_HAS_OPENMP
    Backend::parallel
#else
    Backend::serial
#endif
};

bool use_parallel(std::size_t work) noexcept {
  return g_backend.load(std::memory_order_relaxed) == Backend::parallel &&
         work >= kParallelThreshold;
}

}  // namespace

bool parallel_available() noexcept {
#ifdef WAVEFORMER_HAS_OPENMP
  return true;
#else
  return false;
#endif
}

void set_backend(Backend b) noexcept { g_backend.store(b, std::memory_order_relaxed); }

Backend backend() noexcept { return g_backend.load(std::memory_order_relaxed); }

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
  if (use_parallel(s.m * s.n * s.k)) {
    parallel::gemm(s, a, b, c, accumulate);
  } else {
    serial::gemm(s, a, b, c, accumulate);
  }
}

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
  if (use_parallel(s.out_channels * s.out_length() * s.in_per_group() * s.kernel)) {
    parallel::conv1d_forward(s, x, weight, bias, out);
  } else {
    serial::conv1d_forward(s, x, weight, bias, out);
  }
}

template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  if (use_parallel(s.out_channels * s.out_length() * s.in_per_group() * s.kernel)) {
    parallel::conv1d_backward(s, x, weight, grad_out, grad_x, grad_weight, grad_bias);
  } else {
    serial::conv1d_backward(s, x, weight, grad_out, grad_x, grad_weight, grad_bias);
  }
}

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail) {
  if (use_parallel(s.channels * s.length * lo.size())) {
    parallel::dwt_analysis(s, lo, hi, x, approx, detail);
  } else {
    serial::dwt_analysis(s, lo, hi, x, approx, detail);
  }
}

template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x) {
  if (use_parallel(s.channels * s.length * lo.size())) {
    parallel::dwt_synthesis(s, lo, hi, approx, detail, x);
  } else {
    serial::dwt_synthesis(s, lo, hi, approx, detail, x);
  }
}

template <typename T>
void softmax_rows(std::size_t nrows, std::size_t cols, std::span<const T> x, std::span<T> out) {
  if (use_parallel(nrows * cols * 8)) {
    parallel::softmax_rows(nrows, cols, x, out);
  } else {
    serial::softmax_rows(nrows, cols, x, out);
  }
}

#define WAVEFORMER_KERNELS(NS, T)                                                              \
  template void NS gemm<T>(const GemmShape&, std::span<const T>, std::span<const T>,          \
                           std::span<T>, bool);                                                \
  template void NS conv1d_forward<T>(const ConvShape&, std::span<const T>,                    \
                                     std::span<const T>, std::span<const T>, std::span<T>);   \
  template void NS conv1d_backward<T>(const ConvShape&, std::span<const T>,                   \
                                      std::span<const T>, std::span<const T>, std::span<T>,   \
                                      std::span<T>, std::span<T>);                            \
  template void NS dwt_analysis<T>(const DwtShape&, std::span<const T>, std::span<const T>,   \
                                   std::span<const T>, std::span<T>, std::span<T>);           \
  template void NS dwt_synthesis<T>(const DwtShape&, std::span<const T>, std::span<const T>,  \
                                    std::span<const T>, std::span<const T>, std::span<T>);    \
  template void NS softmax_rows<T>(std::size_t, std::size_t, std::span<const T>, std::span<T>);

WAVEFORMER_KERNELS(parallel::, float)
WAVEFORMER_KERNELS(parallel::, double)
WAVEFORMER_KERNELS(, float)
WAVEFORMER_KERNELS(, double)

#undef WAVEFORMER_KERNELS

}  // namespace waveformer::kernels
