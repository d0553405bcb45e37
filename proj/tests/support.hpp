#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <optional>
#include <span>

#include "waveformer/error.hpp"
#include "waveformer/ops.hpp"
#include "waveformer/tensor.hpp"

namespace wf_test {

using waveformer::Rng;
using waveformer::Shape;
using waveformer::Tensor;

inline Tensor<double> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(waveformer::shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor<double>::from(std::move(shape), std::move(v), requires_grad);
}

// sum(y * w) with a fixed random w: a scalar whose gradient exercises every
// output element with a different weight.
inline Tensor<double> weighted_sum(const Tensor<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_tensor(y.shape(), rng);
  return waveformer::ops::sum(waveformer::ops::mul(y, w));
}

// Largest norm-wise relative error between analytic gradients and central
// differences over every leaf. loss_fn must rebuild the graph from the
// leaves' current values on each call. floor bounds the denominator from
// below so a leaf whose true gradient is exactly zero compares absolutely.
inline double gradcheck(std::vector<Tensor<double>> leaves,
                        const std::function<Tensor<double>()>& loss_fn, double h = 1e-3,
                        double floor = 1e-12) {
  for (auto& leaf : leaves) leaf.zero_grad();
  loss_fn().backward();
  double worst = 0.0;
  for (auto& leaf : leaves) {
    std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    if (analytic.empty()) analytic.assign(leaf.numel(), 0.0);
    std::vector<double> numeric(leaf.numel());
    auto values = leaf.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      double up, down;
      {
        waveformer::NoGradGuard g;
        up = loss_fn().item();
      }
      values[i] = keep - h;
      {
        waveformer::NoGradGuard g;
        down = loss_fn().item();
      }
      values[i] = keep;
      numeric[i] = (up - down) / (2.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double scale = std::max({std::sqrt(na), std::sqrt(nn), floor});
    worst = std::max(worst, std::sqrt(diff) / scale);
  }
  return worst;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Kind of the waveformer::Error thrown by f, or nullopt when f returns.
template <typename F>
std::optional<waveformer::ErrorKind> error_kind(F&& f) {
  try {
    f();
  } catch (const waveformer::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

template <typename F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const waveformer::Error& e) {
    return e.what();
  }
  return {};
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("wf_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace wf_test
