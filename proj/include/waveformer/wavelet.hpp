#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "waveformer/tensor.hpp"

namespace waveformer {

enum class WaveletFamily { haar, db2, db4 };

// Only periodization is implemented: circular wrap, non-expansive, exactly invertible.
enum class BoundaryMode { periodized };

WaveletFamily parse_wavelet_family(std::string_view name);
std::string wavelet_family_name(WaveletFamily family);

// Orthonormal analysis filters. Analysis is a stride-2 correlation (no flip):
// approx[n] = sum_k lo[k] x[2n + k], detail[n] = sum_k hi[k] x[2n + k], with
// hi[k] = (-1)^k lo[taps - 1 - k].
struct WaveletFilterPair {
  WaveletFamily family;
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t taps() const noexcept { return lo.size(); }
};

WaveletFilterPair wavelet_filters(WaveletFamily family);

template <typename T>
struct DwtLevel {
  Tensor<T> approx;  // (C, L/2)
  Tensor<T> detail;  // (C, L/2)
};

// Coefficients of a J-level decomposition: approx is cA_J and details are
// ordered coarse to fine, {cD_J, ..., cD_1}.
template <typename T>
struct DwtPyramid {
  Tensor<T> approx;
  std::vector<Tensor<T>> details;
  BoundaryMode mode = BoundaryMode::periodized;

  std::size_t levels() const noexcept { return details.size(); }
  std::size_t channels() const { return approx.dim(0); }
  // Length of the signal this pyramid reconstructs to.
  std::size_t signal_length() const;
};

// Largest J for which every level has an even input no shorter than the filter.
std::size_t max_dwt_levels(std::size_t length, std::size_t taps) noexcept;

// x is (C, L) with L even; channels never mix.
template <typename T>
DwtLevel<T> dwt_level(const Tensor<T>& x, const WaveletFilterPair& filters,
                      BoundaryMode mode = BoundaryMode::periodized);

template <typename T>
Tensor<T> idwt_level(const Tensor<T>& approx, const Tensor<T>& detail,
                     const WaveletFilterPair& filters, BoundaryMode mode = BoundaryMode::periodized);

template <typename T>
DwtPyramid<T> dwt_multi(const Tensor<T>& x, std::size_t levels, const WaveletFilterPair& filters,
                        BoundaryMode mode = BoundaryMode::periodized);

template <typename T>
Tensor<T> idwt_multi(const DwtPyramid<T>& pyramid, const WaveletFilterPair& filters);

// Coefficient dump: header `channel,level,kind,index,value`, kind A or D.
template <typename T>
void write_coefficients_csv(std::ostream& os, const DwtPyramid<T>& pyramid);

}  // namespace waveformer
