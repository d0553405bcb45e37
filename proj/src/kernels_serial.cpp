#include "kernels_rows.hpp"

namespace waveformer::kernels::serial {

template <typename T>
void gemm(const GemmShape& s, std::span<const T> a, std::span<const T> b, std::span<T> c,
          bool accumulate) {
  for (std::size_t i = 0; i < s.m; ++i) rows::gemm_row(s, i, a, b, c, accumulate);
}

template <typename T>
void conv1d_forward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> out) {
  for (std::size_t o = 0; o < s.out_channels; ++o) {
    rows::conv_forward_channel(s, o, x, weight, bias, out);
  }
}

template <typename T>
void conv1d_backward(const ConvShape& s, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_out, std::span<T> grad_x, std::span<T> grad_weight,
                     std::span<T> grad_bias) {
  if (!grad_weight.empty() || !grad_bias.empty()) {
    for (std::size_t o = 0; o < s.out_channels; ++o) {
      rows::conv_backward_weight(s, o, x, grad_out, grad_weight, grad_bias);
    }
  }
  if (!grad_x.empty()) {
    for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
      rows::conv_backward_input(s, ic, weight, grad_out, grad_x);
    }
  }
}

template <typename T>
void dwt_analysis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                  std::span<const T> x, std::span<T> approx, std::span<T> detail) {
  for (std::size_t c = 0; c < s.channels; ++c) {
    rows::dwt_analysis_row(s, c, lo, hi, x, approx, detail);
  }
}

template <typename T>
void dwt_synthesis(const DwtShape& s, std::span<const T> lo, std::span<const T> hi,
                   std::span<const T> approx, std::span<const T> detail, std::span<T> x) {
  for (std::size_t c = 0; c < s.channels; ++c) {
    rows::dwt_synthesis_row(s, c, lo, hi, approx, detail, x);
  }
}

template <typename T>
void softmax_rows(std::size_t nrows, std::size_t cols, std::span<const T> x, std::span<T> out) {
  for (std::size_t r = 0; r < nrows; ++r) {
    rows::softmax_row(cols, x.data() + r * cols, out.data() + r * cols);
  }
}

#define WAVEFORMER_SERIAL_KERNELS(T)                                                          \
  template void gemm<T>(const GemmShape&, std::span<const T>, std::span<const T>,           \
                        std::span<T>, bool);                                                 \
  template void conv1d_forward<T>(const ConvShape&, std::span<const T>, std::span<const T>, \
                                  std::span<const T>, std::span<T>);                        \
  template void conv1d_backward<T>(const ConvShape&, std::span<const T>,                    \
                                   std::span<const T>, std::span<const T>, std::span<T>,    \
                                   std::span<T>, std::span<T>);                             \
  template void dwt_analysis<T>(const DwtShape&, std::span<const T>, std::span<const T>,    \
                                std::span<const T>, std::span<T>, std::span<T>);            \
  template void dwt_synthesis<T>(const DwtShape&, std::span<const T>, std::span<const T>,   \
                                 std::span<const T>, std::span<const T>, std::span<T>);     \
  template void softmax_rows<T>(std::size_t, std::size_t, std::span<const T>, std::span<T>);

WAVEFORMER_SERIAL_KERNELS(float)
WAVEFORMER_SERIAL_KERNELS(double)

#undef WAVEFORMER_SERIAL_KERNELS

}  // namespace waveformer::kernels::serial
