#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "waveformer/params.hpp"
#include "waveformer/tensor.hpp"

namespace waveformer {

// Bucket of a signed relative distance r (T5-style, bidirectional):
// |r| < r_max/2 maps to itself, larger distances are binned logarithmically
// and capped at B/2 - 1; negative distances use the upper half [B/2, B).
int relative_bucket(long r, int buckets, int max_distance) noexcept;

// Row-major (tokens x tokens) bucket indices for a sequence whose token 0 is
// the class token. Pairs involving the class token use the reserved bucket
// `buckets` (one past the temporal buckets).
std::vector<std::int32_t> bucket_index_matrix(std::size_t tokens, int buckets, int max_distance);

struct EncoderConfig {
  std::size_t embed_dim = 128;
  std::size_t heads = 4;
  std::size_t layers = 4;
  std::size_t ffn_multiplier = 4;
  double dropout = 0.2;
  bool use_rpe = true;
  int rpe_buckets = 32;
  int rpe_max_distance = 16;
  bool rpe_tie_heads = false;
  double ln_eps = 1e-5;

  std::size_t head_dim() const noexcept { return embed_dim / heads; }
  void validate() const;
};

// Scaled dot-product attention per head with an additive relative bias.
// q, k, v hold one (T, d_k) matrix per head. bias_table is (heads, B + 1), or
// (1, B + 1) when tied, or undefined for no bias. Returns the heads
// concatenated to (T, heads * d_k). When probs is non-null it receives each
// head's post-softmax attention matrix.
template <typename T>
Tensor<T> rpe_attention(const std::vector<Tensor<T>>& q, const std::vector<Tensor<T>>& k,
                        const std::vector<Tensor<T>>& v, const Tensor<T>& bias_table,
                        const std::vector<std::int32_t>& bucket_index, double dropout,
                        bool training, Rng& rng, std::vector<Tensor<T>>* probs = nullptr);

// Pre-norm layer: x + MHSA(LN(x)), then + FFN(LN(.)).
template <typename T>
class EncoderLayer {
 public:
  EncoderLayer(const EncoderConfig& config, std::size_t index, ParamStore<T>& params, Rng& rng);

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng,
                    std::vector<Tensor<T>>* probs = nullptr) const;

  const Tensor<T>& bias_table() const noexcept { return rpe_table_; }

 private:
  Tensor<T> attention(const Tensor<T>& x, bool training, Rng& rng,
                      std::vector<Tensor<T>>* probs) const;

  EncoderConfig config_;
  Tensor<T> ln1_gain_, ln1_bias_;
  Tensor<T> w_qkv_, b_qkv_;
  Tensor<T> w_out_, b_out_;
  Tensor<T> ln2_gain_, ln2_bias_;
  Tensor<T> w_ff1_, b_ff1_;
  Tensor<T> w_ff2_, b_ff2_;
  Tensor<T> rpe_table_;
};

template <typename T>
class Encoder {
 public:
  Encoder(const EncoderConfig& config, ParamStore<T>& params, Rng& rng);

  const EncoderConfig& config() const noexcept { return config_; }
  const std::vector<EncoderLayer<T>>& layers() const noexcept { return layers_; }

  // (T, d) -> (T, d), including the final layer norm.
  Tensor<T> forward(const Tensor<T>& tokens, bool training, Rng& rng) const;

 private:
  EncoderConfig config_;
  std::vector<EncoderLayer<T>> layers_;
  Tensor<T> final_gain_, final_bias_;
};

// logits = W_2 . Dropout(GELU(W_1 h_cls)), bias-free, W_1: d x 4d, W_2: 4d x K.
template <typename T>
class ClassifierHead {
 public:
  ClassifierHead(std::size_t embed_dim, std::size_t classes, double dropout,
                 ParamStore<T>& params, Rng& rng);

  // h_cls has d entries; returns (K).
  Tensor<T> forward(const Tensor<T>& h_cls, bool training, Rng& rng) const;

  std::size_t classes() const noexcept { return classes_; }

 private:
  std::size_t embed_dim_;
  std::size_t classes_;
  double dropout_;
  Tensor<T> w1_, w2_;
};

extern template class EncoderLayer<float>;
extern template class EncoderLayer<double>;
extern template class Encoder<float>;
extern template class Encoder<double>;
extern template class ClassifierHead<float>;
extern template class ClassifierHead<double>;

}  // namespace waveformer
