#include "waveformer/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "waveformer/error.hpp"
#include "waveformer/kernels.hpp"

namespace waveformer::ops {

namespace {

template <typename T>
using NodeT = detail::Node<T>;

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::dimension, std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                   " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* op) {
  if (a.rank() != 2) {
    fail(ErrorKind::dimension,
         std::string(op) + ": expected a matrix, got shape " + shape_str(a.shape()));
  }
}

// Accumulates `scale * g` into parent p when it wants a gradient.
template <typename T>
void accumulate(NodeT<T>& p, const std::vector<T>& g, T factor = T(1)) {
  if (!p.requires_grad) return;
  auto& pg = p.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) pg[i] += factor * g[i];
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, Fwd fwd, Deriv deriv) {
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [deriv](NodeT<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& pg = p.ensure_grad();
    for (std::size_t i = 0; i < pg.size(); ++i) {
      pg[i] += self.grad[i] * deriv(p.data[i], self.data[i]);
    }
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<T>& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad);
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<T>& self) {
    accumulate(*self.parents[0], self.grad);
    accumulate(*self.parents[1], self.grad, T(-1));
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * a.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a}, [factor](NodeT<T>& self) {
    accumulate(*self.parents[0], self.grad, factor);
  });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.numel() != 1) {
    fail(ErrorKind::dimension, "mul_scalar: scale must have one element, got shape " +
                                   shape_str(s.shape()));
  }
  const T sv = s.data()[0];
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sv * x.data()[i];
  return Tensor<T>::make_result(x.shape(), std::move(out), {x, s}, [](NodeT<T>& self) {
    auto& px = *self.parents[0];
    auto& ps = *self.parents[1];
    accumulate(px, self.grad, ps.data[0]);
    if (ps.requires_grad) {
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * px.data[i];
      ps.ensure_grad()[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& b) {
  const std::size_t cols = x.shape().back();
  if (b.numel() != cols) {
    fail(ErrorKind::dimension, "add_rowvec: last dim " + std::to_string(cols) +
                                   " vs vector length " + std::to_string(b.numel()));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.data()[i % cols];
  return Tensor<T>::make_result(x.shape(), std::move(out), {x, b}, [cols](NodeT<T>& self) {
    accumulate(*self.parents[0], self.grad);
    auto& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % cols] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    fail(ErrorKind::dimension, "matmul: inner axis mismatch " + shape_str(a.shape()) + " x " +
                                   shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  kernels::gemm<T>({m, n, k}, a.data(), b.data(), out, false);
  return Tensor<T>::make_result({m, n}, std::move(out), {a, b}, [m, n, k](NodeT<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    std::span<const T> g = self.grad;
    if (pa.requires_grad) {
      kernels::gemm<T>({m, k, n, false, true}, g, pb.data, pa.ensure_grad(), true);
    }
    if (pb.requires_grad) {
      kernels::gemm<T>({k, n, m, true, false}, pa.data, g, pb.ensure_grad(), true);
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<T> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  return Tensor<T>::make_result({c, r}, std::move(out), {a}, [r, c](NodeT<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    fail(ErrorKind::dimension,
         "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), {a}, [](NodeT<T>& self) {
    accumulate(*self.parents[0], self.grad);
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (T v : a.data()) acc += v;
  return Tensor<T>::make_result({1}, {acc}, {a}, [](NodeT<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    for (auto& g : p.ensure_grad()) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.numel() == 0) fail(ErrorKind::dimension, "mean of an empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  const std::size_t cols = a.dim(1);
  if (begin > end || end > a.dim(0)) {
    fail(ErrorKind::dimension, "slice_rows: range [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") outside axis 0 of " +
                                   shape_str(a.shape()));
  }
  std::vector<T> out(a.data().begin() + begin * cols, a.data().begin() + end * cols);
  return Tensor<T>::make_result({end - begin, cols}, std::move(out), {a},
                                [begin, cols](NodeT<T>& self) {
                                  auto& p = *self.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.ensure_grad();
                                  for (std::size_t i = 0; i < self.grad.size(); ++i)
                                    g[begin * cols + i] += self.grad[i];
                                });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  if (begin > end || end > cols) {
    fail(ErrorKind::dimension, "slice_cols: range [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") outside axis 1 of " +
                                   shape_str(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<T> out(rows * w);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.data()[i * cols + begin + j];
  return Tensor<T>::make_result({rows, w}, std::move(out), {a},
                                [rows, cols, begin, w](NodeT<T>& self) {
                                  auto& p = *self.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.ensure_grad();
                                  for (std::size_t i = 0; i < rows; ++i)
                                    for (std::size_t j = 0; j < w; ++j)
                                      g[i * cols + begin + j] += self.grad[i * w + j];
                                });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) fail(ErrorKind::dimension, "concat_rows: nothing to concatenate");
  const std::size_t cols = parts[0].dim(1);
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows");
    if (p.dim(1) != cols) {
      fail(ErrorKind::dimension, "concat_rows: axis 1 mismatch " + shape_str(parts[0].shape()) +
                                     " vs " + shape_str(p.shape()));
    }
    rows += p.dim(0);
  }
  std::vector<T> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return Tensor<T>::make_result({rows, cols}, std::move(out), parts, [](NodeT<T>& self) {
    std::size_t offset = 0;
    for (auto& pp : self.parents) {
      const std::size_t n = pp->data.size();
      if (pp->requires_grad) {
        auto& g = pp->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) fail(ErrorKind::dimension, "concat_cols: nothing to concatenate");
  const std::size_t rows = parts[0].dim(0);
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.dim(0) != rows) {
      fail(ErrorKind::dimension, "concat_cols: axis 0 mismatch " + shape_str(parts[0].shape()) +
                                     " vs " + shape_str(p.shape()));
    }
    widths.push_back(p.dim(1));
    cols += p.dim(1);
  }
  std::vector<T> out(rows * cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto src = parts[k].data();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[i * cols + offset + j] = src[i * widths[k] + j];
    offset += widths[k];
  }
  return Tensor<T>::make_result(
      {rows, cols}, std::move(out), parts, [rows, cols, widths](NodeT<T>& self) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          auto& pp = *self.parents[k];
          if (pp.requires_grad) {
            auto& g = pp.ensure_grad();
            for (std::size_t i = 0; i < rows; ++i)
              for (std::size_t j = 0; j < widths[k]; ++j)
                g[i * widths[k] + j] += self.grad[i * cols + off + j];
          }
          off += widths[k];
        }
      });
}

template <typename T>
Tensor<T> pad_cols(const Tensor<T>& a, std::size_t cols) {
  require_matrix(a, "pad_cols");
  const std::size_t c = a.dim(1);
  if (cols < c) fail(ErrorKind::dimension, "pad_cols: target narrower than input");
  if (cols == c) return a;
  return concat_cols<T>({a, Tensor<T>::zeros({a.dim(0), cols - c})});
}

template <typename T>
Tensor<T> grouped_conv1d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias,
                         std::size_t stride, std::size_t groups) {
  require_matrix(x, "grouped_conv1d");
  if (stride == 0) fail(ErrorKind::dimension, "grouped_conv1d: stride must be positive");
  if (groups == 0) fail(ErrorKind::dimension, "grouped_conv1d: groups must be positive");
  const std::size_t c_in = x.dim(0), len = x.dim(1);
  if (c_in % groups != 0) {
    fail(ErrorKind::dimension, "grouped_conv1d: axis 0 of input (" + std::to_string(c_in) +
                                   " channels) not divisible by groups=" + std::to_string(groups));
  }
  const std::size_t ipg = c_in / groups;
  std::size_t c_out = 0, k = 0;
  if (kernels.rank() == 3) {
    c_out = kernels.dim(0);
    k = kernels.dim(2);
    if (kernels.dim(1) != ipg) {
      fail(ErrorKind::dimension, "grouped_conv1d: axis 1 of kernels is " +
                                     std::to_string(kernels.dim(1)) + ", expected C_in/groups=" +
                                     std::to_string(ipg));
    }
  } else if (kernels.rank() == 2) {
    if (ipg != 1) {
      fail(ErrorKind::dimension,
           "grouped_conv1d: 2-D kernels need C_in/groups == 1, got " + std::to_string(ipg));
    }
    c_out = kernels.dim(0);
    k = kernels.dim(1);
  } else {
    fail(ErrorKind::dimension,
         "grouped_conv1d: kernels must be 2-D or 3-D, got " + shape_str(kernels.shape()));
  }
  if (c_out % groups != 0) {
    fail(ErrorKind::dimension, "grouped_conv1d: axis 0 of kernels (" + std::to_string(c_out) +
                                   ") not divisible by groups=" + std::to_string(groups));
  }
  if (k == 0) fail(ErrorKind::dimension, "grouped_conv1d: empty kernel");
  if (k > len) {
    fail(ErrorKind::input_too_short, "grouped_conv1d: kernel length " + std::to_string(k) +
                                         " exceeds input length " + std::to_string(len));
  }
  if (bias.defined() && bias.numel() != c_out) {
    fail(ErrorKind::dimension, "grouped_conv1d: bias has " + std::to_string(bias.numel()) +
                                   " entries, expected " + std::to_string(c_out));
  }
  const kernels::ConvShape s{c_in, len, c_out, k, stride, groups};
  std::vector<T> out(c_out * s.out_length());
  std::span<const T> bspan = bias.defined() ? bias.data() : std::span<const T>{};
  kernels::conv1d_forward<T>(s, x.data(), kernels.data(), bspan, out);

  std::vector<Tensor<T>> parents{x, kernels};
  if (bias.defined()) parents.push_back(bias);
  return Tensor<T>::make_result({c_out, s.out_length()}, std::move(out), parents,
                                [s](NodeT<T>& self) {
                                  auto& px = *self.parents[0];
                                  auto& pw = *self.parents[1];
                                  NodeT<T>* pb =
                                      self.parents.size() > 2 ? self.parents[2].get() : nullptr;
                                  std::span<T> gx, gw, gb;
                                  if (px.requires_grad) gx = px.ensure_grad();
                                  if (pw.requires_grad) gw = pw.ensure_grad();
                                  if (pb && pb->requires_grad) gb = pb->ensure_grad();
                                  kernels::conv1d_backward<T>(s, px.data, pw.data, self.grad, gx,
                                                              gw, gb);
                                });
}

template <typename T>
Tensor<T> window_mean(const Tensor<T>& x, std::size_t width) {
  require_matrix(x, "window_mean");
  const std::size_t rows = x.dim(0), len = x.dim(1);
  if (width == 0 || len % width != 0) {
    fail(ErrorKind::length, "window_mean: length " + std::to_string(len) +
                                " is not a multiple of window " + std::to_string(width));
  }
  const std::size_t n = len / width;
  const T inv = T(1) / static_cast<T>(width);
  std::vector<T> out(rows * n, T(0));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < len; ++t) out[r * n + t / width] += x.data()[r * len + t];
  for (auto& v : out) v *= inv;
  return Tensor<T>::make_result({rows, n}, std::move(out), {x},
                                [rows, len, n, width, inv](NodeT<T>& self) {
                                  auto& p = *self.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t t = 0; t < len; ++t)
                                      g[r * len + t] += inv * self.grad[r * n + t / width];
                                });
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  if (x.rank() == 0 || x.shape().back() == 0) {
    fail(ErrorKind::dimension, "softmax_lastdim: empty last dimension in " + shape_str(x.shape()));
  }
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  std::vector<T> out(x.numel());
  kernels::softmax_rows<T>(rows, cols, x.data(), out);
  return Tensor<T>::make_result(x.shape(), std::move(out), {x}, [rows, cols](NodeT<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.data.data() + r * cols;
      const T* gy = self.grad.data() + r * cols;
      T dot = T(0);
      for (std::size_t j = 0; j < cols; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j) g[r * cols + j] += y[j] * (gy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0) fail(ErrorKind::dimension, "layer_norm: scalar input");
  const std::size_t cols = x.shape().back();
  if (gain.numel() != cols || bias.numel() != cols) {
    fail(ErrorKind::dimension, "layer_norm: gain/bias must match last dim " +
                                   std::to_string(cols));
  }
  if (cols == 1 && eps == T(0)) {
    fail(ErrorKind::division_hazard,
         "layer_norm: last dim of size 1 with eps=0 divides by a zero variance");
  }
  const std::size_t rows = x.numel() / cols;
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows);
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * cols;
    T mu = T(0);
    for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<T>(cols);
    T var = T(0);
    for (std::size_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(cols);
    const T denom = var + eps;
    inv_std[r] = denom > T(0) ? T(1) / std::sqrt(denom) : T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      xhat[r * cols + j] = (xr[j] - mu) * inv_std[r];
      out[r * cols + j] = xhat[r * cols + j] * gain.data()[j] + bias.data()[j];
    }
  }
  return Tensor<T>::make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](NodeT<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        const auto& gy = self.grad;
        if (pg.requires_grad) {
          auto& g = pg.ensure_grad();
          for (std::size_t i = 0; i < gy.size(); ++i) g[i % cols] += gy[i] * xhat[i];
        }
        if (pb.requires_grad) {
          auto& g = pb.ensure_grad();
          for (std::size_t i = 0; i < gy.size(); ++i) g[i % cols] += gy[i];
        }
        if (!px.requires_grad) return;
        auto& gx = px.ensure_grad();
        std::vector<T> dxhat(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_d = T(0), mean_dx = T(0);
          for (std::size_t j = 0; j < cols; ++j) {
            dxhat[j] = gy[r * cols + j] * pg.data[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xhat[r * cols + j];
          }
          mean_d /= static_cast<T>(cols);
          mean_dx /= static_cast<T>(cols);
          for (std::size_t j = 0; j < cols; ++j) {
            gx[r * cols + j] +=
                inv_std[r] * (dxhat[j] - mean_d - xhat[r * cols + j] * mean_dx);
          }
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  constexpr T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  return unary(
      x, [](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
      [](T v, T) {
        return T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) +
               v * inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x,
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    fail(ErrorKind::config, "dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  const T kept = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = keep(rng) ? kept : T(0);
    out[i] = x.data()[i] * mask[i];
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x},
                                [mask = std::move(mask)](NodeT<T>& self) {
                                  auto& p = *self.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.ensure_grad();
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                    g[i] += self.grad[i] * mask[i];
                                });
}

template <typename T>
Tensor<T> outer(const Tensor<T>& c, const Tensor<T>& m) {
  const std::size_t n = c.numel(), d = m.numel();
  std::vector<T> out(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = c.data()[i] * m.data()[j];
  return Tensor<T>::make_result({n, d}, std::move(out), {c, m}, [n, d](NodeT<T>& self) {
    auto& pc = *self.parents[0];
    auto& pm = *self.parents[1];
    if (pc.requires_grad) {
      auto& g = pc.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        T acc = T(0);
        for (std::size_t j = 0; j < d; ++j) acc += self.grad[i * d + j] * pm.data[j];
        g[i] += acc;
      }
    }
    if (pm.requires_grad) {
      auto& g = pm.ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[i * d + j] * pc.data[i];
    }
  });
}

template <typename T>
Tensor<T> bias_lookup(const Tensor<T>& table, std::size_t head,
                      const std::vector<std::int32_t>& index, std::size_t tokens) {
  require_matrix(table, "bias_lookup");
  const std::size_t width = table.dim(1);
  if (head >= table.dim(0)) {
    fail(ErrorKind::dimension, "bias_lookup: head " + std::to_string(head) +
                                   " outside axis 0 of table " + shape_str(table.shape()));
  }
  if (index.size() != tokens * tokens) {
    fail(ErrorKind::dimension, "bias_lookup: index matrix is not tokens x tokens");
  }
  std::vector<T> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto b = static_cast<std::size_t>(index[i]);
    if (b >= width) fail(ErrorKind::bounds, "bias_lookup: bucket outside table width");
    out[i] = table.data()[head * width + b];
  }
  return Tensor<T>::make_result({tokens, tokens}, std::move(out), {table},
                                [head, width, index](NodeT<T>& self) {
                                  auto& p = *self.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.ensure_grad();
                                  for (std::size_t i = 0; i < index.size(); ++i)
                                    g[head * width + static_cast<std::size_t>(index[i])] +=
                                        self.grad[i];
                                });
}

#define WAVEFORMER_OPS(T)                                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                            \
  template Tensor<T> mul_scalar(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> add_rowvec(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> transpose(const Tensor<T>&);                                           \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                      \
  template Tensor<T> sum(const Tensor<T>&);                                                 \
  template Tensor<T> mean(const Tensor<T>&);                                                \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);                \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                \
  template Tensor<T> concat_rows(const std::vector<Tensor<T>>&);                            \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                            \
  template Tensor<T> pad_cols(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> grouped_conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                    std::size_t, std::size_t);                              \
  template Tensor<T> window_mean(const Tensor<T>&, std::size_t);                            \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);   \
  template Tensor<T> gelu(const Tensor<T>&);                                                \
  template Tensor<T> sigmoid(const Tensor<T>&);                                             \
  template Tensor<T> tanh(const Tensor<T>&);                                                \
  template Tensor<T> dropout(const Tensor<T>&, double, bool, Rng&);                         \
  template Tensor<T> outer(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> bias_lookup(const Tensor<T>&, std::size_t,                             \
                                 const std::vector<std::int32_t>&, std::size_t);

WAVEFORMER_OPS(float)
WAVEFORMER_OPS(double)

#undef WAVEFORMER_OPS

}  // namespace waveformer::ops
