#include "waveformer/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "waveformer/error.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

int relative_bucket(long r, int buckets, int max_distance) noexcept {
  const int half_buckets = buckets / 2;
  const long exact = std::max(1, max_distance / 2);
  const long mag = std::labs(r);
  long u = 0;
  if (mag < exact) {
    u = mag;
  } else {
    const double scaled = std::log2(static_cast<double>(mag) / static_cast<double>(exact)) *
                          static_cast<double>(half_buckets - exact);
    u = std::min<long>(half_buckets - 1, exact + static_cast<long>(std::floor(scaled)));
  }
  return static_cast<int>(r < 0 ? u + half_buckets : u);
}

std::vector<std::int32_t> bucket_index_matrix(std::size_t tokens, int buckets, int max_distance) {
  std::vector<std::int32_t> idx(tokens * tokens);
  for (std::size_t i = 0; i < tokens; ++i) {
    for (std::size_t j = 0; j < tokens; ++j) {
      idx[i * tokens + j] =
          (i == 0 || j == 0)
              ? buckets
              : relative_bucket(static_cast<long>(i) - static_cast<long>(j), buckets, max_distance);
    }
  }
  return idx;
}

void EncoderConfig::validate() const {
  if (heads == 0 || embed_dim % heads != 0) {
    fail(ErrorKind::config, "embedding dim " + std::to_string(embed_dim) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (rpe_buckets <= 0 || rpe_buckets % 2 != 0) {
    fail(ErrorKind::config, "rpe bucket count must be positive and even");
  }
  if (rpe_max_distance <= 0 || rpe_max_distance > rpe_buckets) {
    fail(ErrorKind::config, "rpe max distance must lie in [1, buckets]");
  }
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorKind::config, "dropout must lie in [0, 1)");
}

template <typename T>
Tensor<T> rpe_attention(const std::vector<Tensor<T>>& q, const std::vector<Tensor<T>>& k,
                        const std::vector<Tensor<T>>& v, const Tensor<T>& bias_table,
                        const std::vector<std::int32_t>& bucket_index, double dropout,
                        bool training, Rng& rng, std::vector<Tensor<T>>* probs) {
  const std::size_t heads = q.size();
  if (heads == 0 || k.size() != heads || v.size() != heads) {
    fail(ErrorKind::dimension, "attention: q, k, v must hold the same non-zero number of heads");
  }
  const std::size_t tokens = q[0].dim(0);
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(q[0].dim(1)));
  std::vector<Tensor<T>> outputs;
  outputs.reserve(heads);
  if (probs) probs->clear();
  for (std::size_t h = 0; h < heads; ++h) {
    if (q[h].shape() != k[h].shape() || q[h].dim(0) != v[h].dim(0) || q[h].dim(0) != tokens) {
      fail(ErrorKind::dimension, "attention: head " + std::to_string(h) +
                                     " has mismatched q/k/v shapes");
    }
    auto scores = ops::scale(ops::matmul(q[h], ops::transpose(k[h])), inv_scale);
    if (bias_table.defined()) {
      const std::size_t row = bias_table.dim(0) == 1 ? 0 : h;
      scores = ops::add(scores, ops::bias_lookup(bias_table, row, bucket_index, tokens));
    }
    auto p = ops::softmax_lastdim(scores);
    if (probs) probs->push_back(p);
    outputs.push_back(ops::matmul(ops::dropout(p, dropout, training, rng), v[h]));
  }
  return ops::concat_cols(outputs);
}

template <typename T>
EncoderLayer<T>::EncoderLayer(const EncoderConfig& config, std::size_t index,
                              ParamStore<T>& params, Rng& rng)
    : config_(config) {
  config_.validate();
  const std::size_t d = config_.embed_dim;
  const std::size_t ff = d * config_.ffn_multiplier;
  const std::string prefix = "encoder." + std::to_string(index) + ".";
  const T bound_d = T(1) / std::sqrt(static_cast<T>(d));
  const T bound_ff = T(1) / std::sqrt(static_cast<T>(ff));

  ln1_gain_ = params.constant(prefix + "ln1.gain", {d}, T(1));
  ln1_bias_ = params.zeros(prefix + "ln1.bias", {d});
  w_qkv_ = params.uniform(prefix + "attn.qkv.weight", {d, 3 * d}, bound_d, rng);
  b_qkv_ = params.zeros(prefix + "attn.qkv.bias", {3 * d});
  w_out_ = params.uniform(prefix + "attn.out.weight", {d, d}, bound_d, rng);
  b_out_ = params.zeros(prefix + "attn.out.bias", {d});
  if (config_.use_rpe) {
    const std::size_t rows = config_.rpe_tie_heads ? 1 : config_.heads;
    rpe_table_ = params.normal(prefix + "attn.rpe_table",
                               {rows, static_cast<std::size_t>(config_.rpe_buckets) + 1}, T(0.02),
                               rng);
  }
  ln2_gain_ = params.constant(prefix + "ln2.gain", {d}, T(1));
  ln2_bias_ = params.zeros(prefix + "ln2.bias", {d});
  w_ff1_ = params.uniform(prefix + "ffn.fc1.weight", {d, ff}, bound_d, rng);
  b_ff1_ = params.zeros(prefix + "ffn.fc1.bias", {ff});
  w_ff2_ = params.uniform(prefix + "ffn.fc2.weight", {ff, d}, bound_ff, rng);
  b_ff2_ = params.zeros(prefix + "ffn.fc2.bias", {d});
}

template <typename T>
Tensor<T> EncoderLayer<T>::attention(const Tensor<T>& x, bool training, Rng& rng,
                                     std::vector<Tensor<T>>* probs) const {
  const std::size_t d = config_.embed_dim;
  const std::size_t dk = config_.head_dim();
  const std::size_t tokens = x.dim(0);
  auto qkv = ops::add_rowvec(ops::matmul(x, w_qkv_), b_qkv_);
  std::vector<Tensor<T>> q, k, v;
  for (std::size_t h = 0; h < config_.heads; ++h) {
    q.push_back(ops::slice_cols(qkv, h * dk, (h + 1) * dk));
    k.push_back(ops::slice_cols(qkv, d + h * dk, d + (h + 1) * dk));
    v.push_back(ops::slice_cols(qkv, 2 * d + h * dk, 2 * d + (h + 1) * dk));
  }
  std::vector<std::int32_t> index;
  if (config_.use_rpe) {
    index = bucket_index_matrix(tokens, config_.rpe_buckets, config_.rpe_max_distance);
  }
  auto heads = rpe_attention(q, k, v, rpe_table_, index, config_.dropout, training, rng, probs);
  return ops::add_rowvec(ops::matmul(heads, w_out_), b_out_);
}

template <typename T>
Tensor<T> EncoderLayer<T>::forward(const Tensor<T>& x, bool training, Rng& rng,
                                   std::vector<Tensor<T>>* probs) const {
  if (x.rank() != 2 || x.dim(1) != config_.embed_dim) {
    fail(ErrorKind::dimension, "encoder layer: expected (T, " +
                                   std::to_string(config_.embed_dim) + "), got " +
                                   shape_str(x.shape()));
  }
  const T eps = static_cast<T>(config_.ln_eps);
  auto attended =
      ops::add(x, attention(ops::layer_norm(x, ln1_gain_, ln1_bias_, eps), training, rng, probs));
  auto h = ops::layer_norm(attended, ln2_gain_, ln2_bias_, eps);
  h = ops::gelu(ops::add_rowvec(ops::matmul(h, w_ff1_), b_ff1_));
  h = ops::dropout(h, config_.dropout, training, rng);
  h = ops::add_rowvec(ops::matmul(h, w_ff2_), b_ff2_);
  return ops::add(attended, h);
}

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& config, ParamStore<T>& params, Rng& rng)
    : config_(config) {
  config_.validate();
  layers_.reserve(config_.layers);
  for (std::size_t i = 0; i < config_.layers; ++i) layers_.emplace_back(config_, i, params, rng);
  final_gain_ = params.constant("encoder.final_ln.gain", {config_.embed_dim}, T(1));
  final_bias_ = params.zeros("encoder.final_ln.bias", {config_.embed_dim});
}

template <typename T>
Tensor<T> Encoder<T>::forward(const Tensor<T>& tokens, bool training, Rng& rng) const {
  Tensor<T> x = tokens;
  for (const auto& layer : layers_) x = layer.forward(x, training, rng);
  return ops::layer_norm(x, final_gain_, final_bias_, static_cast<T>(config_.ln_eps));
}

template <typename T>
ClassifierHead<T>::ClassifierHead(std::size_t embed_dim, std::size_t classes, double dropout,
                                  ParamStore<T>& params, Rng& rng)
    : embed_dim_(embed_dim), classes_(classes), dropout_(dropout) {
  if (classes < 2) {
    fail(ErrorKind::config, "classifier needs K >= 2 classes, got " + std::to_string(classes));
  }
  w1_ = params.uniform("head.W1", {embed_dim, 4 * embed_dim},
                       T(1) / std::sqrt(static_cast<T>(embed_dim)), rng);
  w2_ = params.uniform("head.W2", {4 * embed_dim, classes},
                       T(1) / std::sqrt(static_cast<T>(4 * embed_dim)), rng);
}

template <typename T>
Tensor<T> ClassifierHead<T>::forward(const Tensor<T>& h_cls, bool training, Rng& rng) const {
  if (h_cls.numel() != embed_dim_) {
    fail(ErrorKind::dimension, "classifier: expected a " + std::to_string(embed_dim_) +
                                   "-vector, got " + shape_str(h_cls.shape()));
  }
  auto h = ops::gelu(ops::matmul(ops::reshape(h_cls, {1, embed_dim_}), w1_));
  h = ops::dropout(h, dropout_, training, rng);
  return ops::reshape(ops::matmul(h, w2_), {classes_});
}

template Tensor<float> rpe_attention(const std::vector<Tensor<float>>&,
                                     const std::vector<Tensor<float>>&,
                                     const std::vector<Tensor<float>>&, const Tensor<float>&,
                                     const std::vector<std::int32_t>&, double, bool, Rng&,
                                     std::vector<Tensor<float>>*);
template Tensor<double> rpe_attention(const std::vector<Tensor<double>>&,
                                      const std::vector<Tensor<double>>&,
                                      const std::vector<Tensor<double>>&, const Tensor<double>&,
                                      const std::vector<std::int32_t>&, double, bool, Rng&,
                                      std::vector<Tensor<double>>*);
template class EncoderLayer<float>;
template class EncoderLayer<double>;
template class Encoder<float>;
template class Encoder<double>;
template class ClassifierHead<float>;
template class ClassifierHead<double>;

}  // namespace waveformer
