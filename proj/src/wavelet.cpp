#include "waveformer/wavelet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <ostream>

#include "waveformer/error.hpp"
#include "waveformer/kernels.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

namespace {

// Daubechies scaling filters, normalized so that sum(lo) = sqrt(2).
std::vector<double> scaling_filter(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::haar: {
      const double r = 1.0 / std::sqrt(2.0);
      return {r, r};
    }
    case WaveletFamily::db2: {
      const double s3 = std::sqrt(3.0);
      const double n = 4.0 * std::sqrt(2.0);
      return {(1.0 + s3) / n, (3.0 + s3) / n, (3.0 - s3) / n, (1.0 - s3) / n};
    }
    case WaveletFamily::db4:
      return {0.23037781330885523,  0.71484657055254153,  0.63088076792959036,
              -0.027983769416983850, -0.18703481171888114, 0.030841381835986965,
              0.032883011666982945,  -0.010597401784997278};
  }
  fail(ErrorKind::unsupported_family, "unknown wavelet family");
}

template <typename T>
std::vector<T> cast_taps(const std::vector<double>& taps) {
  return std::vector<T>(taps.begin(), taps.end());
}

template <typename T>
void check_level_input(const Tensor<T>& x, const WaveletFilterPair& filters) {
  if (x.rank() != 2) {
    fail(ErrorKind::dimension, "dwt: expected (channels, length), got " + shape_str(x.shape()));
  }
  const std::size_t len = x.dim(1);
  if (len % 2 != 0) {
    fail(ErrorKind::length, "dwt: signal length " + std::to_string(len) +
                                " is odd; right-pad to an even length before transforming");
  }
  if (len < filters.taps()) {
    fail(ErrorKind::input_too_short, "dwt: signal length " + std::to_string(len) +
                                         " is shorter than the " +
                                         std::to_string(filters.taps()) + "-tap filter");
  }
}

}  // namespace

WaveletFamily parse_wavelet_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "haar" || lower == "db1") return WaveletFamily::haar;
  if (lower == "db2") return WaveletFamily::db2;
  if (lower == "db4") return WaveletFamily::db4;
  fail(ErrorKind::unsupported_family,
       "unsupported wavelet family '" + std::string(name) + "' (expected haar, db2 or db4)");
}

std::string wavelet_family_name(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::haar: return "haar";
    case WaveletFamily::db2: return "db2";
    case WaveletFamily::db4: return "db4";
  }
  return "unknown";
}

WaveletFilterPair wavelet_filters(WaveletFamily family) {
  WaveletFilterPair f{family, scaling_filter(family), {}};
  const std::size_t n = f.lo.size();
  f.hi.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    f.hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * f.lo[n - 1 - k];
  }
  return f;
}

std::size_t max_dwt_levels(std::size_t length, std::size_t taps) noexcept {
  std::size_t levels = 0;
  std::size_t len = length;
  while (len >= 2 && len % 2 == 0 && len >= taps) {
    ++levels;
    len /= 2;
  }
  return levels;
}

template <typename T>
std::size_t DwtPyramid<T>::signal_length() const {
  return approx.dim(1) << details.size();
}

template <typename T>
DwtLevel<T> dwt_level(const Tensor<T>& x, const WaveletFilterPair& filters, BoundaryMode) {
  check_level_input(x, filters);
  const kernels::DwtShape s{x.dim(0), x.dim(1)};
  const std::size_t half = s.length / 2;
  auto lo = cast_taps<T>(filters.lo);
  auto hi = cast_taps<T>(filters.hi);
  std::vector<T> a(s.channels * half);
  std::vector<T> d(s.channels * half);
  kernels::dwt_analysis<T>(s, lo, hi, x.data(), a, d);

  // Both outputs share one tape node so the adjoint runs once per level.
  std::vector<T> packed(a);
  packed.insert(packed.end(), d.begin(), d.end());
  auto both = Tensor<T>::make_result(
      {2, s.channels, half}, std::move(packed), {x}, [s, lo, hi, half](detail::Node<T>& self) {
        auto& p = *self.parents[0];
        if (!p.requires_grad) return;
        const std::size_t n = s.channels * half;
        std::span<const T> ga(self.grad.data(), n);
        std::span<const T> gd(self.grad.data() + n, n);
        kernels::dwt_synthesis<T>(s, lo, hi, ga, gd, p.ensure_grad());
      });
  if (!both.has_tape()) {
    return {Tensor<T>::from({s.channels, half}, std::move(a)),
            Tensor<T>::from({s.channels, half}, std::move(d))};
  }
  auto flat = ops::reshape(both, {2 * s.channels, half});
  return {ops::slice_rows(flat, 0, s.channels), ops::slice_rows(flat, s.channels, 2 * s.channels)};
}

template <typename T>
Tensor<T> idwt_level(const Tensor<T>& approx, const Tensor<T>& detail,
                     const WaveletFilterPair& filters, BoundaryMode) {
  if (approx.rank() != 2 || approx.shape() != detail.shape()) {
    fail(ErrorKind::pyramid_shape, "idwt: approximation " + shape_str(approx.shape()) +
                                       " and detail " + shape_str(detail.shape()) +
                                       " must be equal-shaped matrices");
  }
  const kernels::DwtShape s{approx.dim(0), 2 * approx.dim(1)};
  if (s.length < filters.taps()) {
    fail(ErrorKind::input_too_short, "idwt: reconstructed length " + std::to_string(s.length) +
                                         " is shorter than the " +
                                         std::to_string(filters.taps()) + "-tap filter");
  }
  auto lo = cast_taps<T>(filters.lo);
  auto hi = cast_taps<T>(filters.hi);
  std::vector<T> x(s.channels * s.length, T(0));
  kernels::dwt_synthesis<T>(s, lo, hi, approx.data(), detail.data(), x);
  return Tensor<T>::make_result(
      {s.channels, s.length}, std::move(x), {approx, detail},
      [s, lo, hi](detail::Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pd = *self.parents[1];
        const std::size_t n = s.channels * s.length / 2;
        std::vector<T> ga(n), gd(n);
        kernels::dwt_analysis<T>(s, lo, hi, self.grad, ga, gd);
        if (pa.requires_grad) {
          auto& g = pa.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) g[i] += ga[i];
        }
        if (pd.requires_grad) {
          auto& g = pd.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) g[i] += gd[i];
        }
      });
}

template <typename T>
DwtPyramid<T> dwt_multi(const Tensor<T>& x, std::size_t levels, const WaveletFilterPair& filters,
                        BoundaryMode mode) {
  if (x.rank() != 2) {
    fail(ErrorKind::dimension, "dwt: expected (channels, length), got " + shape_str(x.shape()));
  }
  const std::size_t feasible = max_dwt_levels(x.dim(1), filters.taps());
  if (levels == 0 || levels > feasible) {
    fail(ErrorKind::level, "dwt: " + std::to_string(levels) + " levels requested for length " +
                               std::to_string(x.dim(1)) + " with a " +
                               std::to_string(filters.taps()) +
                               "-tap filter; max feasible J is " + std::to_string(feasible));
  }
  DwtPyramid<T> out;
  out.mode = mode;
  out.details.resize(levels);
  Tensor<T> current = x;
  for (std::size_t j = 0; j < levels; ++j) {
    auto level = dwt_level(current, filters, mode);
    out.details[levels - 1 - j] = level.detail;
    current = level.approx;
  }
  out.approx = current;
  return out;
}

template <typename T>
Tensor<T> idwt_multi(const DwtPyramid<T>& pyramid, const WaveletFilterPair& filters) {
  if (!pyramid.approx.defined() || pyramid.approx.rank() != 2 || pyramid.details.empty()) {
    fail(ErrorKind::pyramid_shape, "idwt: pyramid needs a 2-D approximation and >= 1 level");
  }
  Tensor<T> current = pyramid.approx;
  for (std::size_t j = 0; j < pyramid.details.size(); ++j) {
    const auto& d = pyramid.details[j];
    if (d.shape() != current.shape()) {
      fail(ErrorKind::pyramid_shape, "idwt: detail band " + std::to_string(j) + " has shape " +
                                         shape_str(d.shape()) + ", expected " +
                                         shape_str(current.shape()));
    }
    current = idwt_level(current, d, filters, pyramid.mode);
  }
  return current;
}

template <typename T>
void write_coefficients_csv(std::ostream& os, const DwtPyramid<T>& pyramid) {
  os << "channel,level,kind,index,value\n";
  const std::size_t levels = pyramid.levels();
  char buf[64];
  auto emit = [&](std::size_t c, std::size_t level, char kind, const Tensor<T>& band) {
    const std::size_t len = band.dim(1);
    for (std::size_t i = 0; i < len; ++i) {
      auto res = std::to_chars(buf, buf + sizeof buf, band.data()[c * len + i]);
      os << c << ',' << level << ',' << kind << ',' << i << ','
         << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
  };
  for (std::size_t c = 0; c < pyramid.channels(); ++c) {
    emit(c, levels, 'A', pyramid.approx);
    for (std::size_t j = 0; j < levels; ++j) emit(c, levels - j, 'D', pyramid.details[j]);
  }
}

#define WAVEFORMER_WAVELET(T)                                                                  \
  template struct DwtPyramid<T>;                                                               \
  template DwtLevel<T> dwt_level(const Tensor<T>&, const WaveletFilterPair&, BoundaryMode);    \
  template Tensor<T> idwt_level(const Tensor<T>&, const Tensor<T>&, const WaveletFilterPair&,  \
                                BoundaryMode);                                                 \
  template DwtPyramid<T> dwt_multi(const Tensor<T>&, std::size_t, const WaveletFilterPair&,    \
                                   BoundaryMode);                                              \
  template Tensor<T> idwt_multi(const DwtPyramid<T>&, const WaveletFilterPair&);               \
  template void write_coefficients_csv(std::ostream&, const DwtPyramid<T>&);

WAVEFORMER_WAVELET(float)
WAVEFORMER_WAVELET(double)

#undef WAVEFORMER_WAVELET

}  // namespace waveformer
