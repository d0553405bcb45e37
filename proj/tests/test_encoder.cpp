#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "support.hpp"
#include "waveformer/encoder.hpp"
#include "waveformer/error.hpp"
#include "waveformer/model.hpp"

using namespace waveformer;
using wf_test::error_kind;
using wf_test::random_tensor;

namespace {

// Largest m with |r|^8 >= 2^(m + 24): floor(8 log2(|r| / 8)) in exact integers.
int bucket_oracle(long r) {
  const long mag = std::labs(r);
  long u;
  if (mag < 8) {
    u = mag;
  } else {
    __int128 p = 1;
    for (int i = 0; i < 8; ++i) p *= mag;
    int m = 0;
    while ((static_cast<__int128>(1) << (m + 1 + 24)) <= p) ++m;
    u = std::min<long>(15, 8 + m);
  }
  return static_cast<int>(r < 0 ? u + 16 : u);
}

std::vector<Tensor<double>> split_heads(const Tensor<double>& x, std::size_t heads) {
  std::vector<Tensor<double>> out;
  const std::size_t dk = x.dim(1) / heads;
  for (std::size_t h = 0; h < heads; ++h) out.push_back(ops::slice_cols(x, h * dk, (h + 1) * dk));
  return out;
}

void zero_named(ParamStore<double>& ps, const std::string& name) {
  for (auto& v : ps.get(name).mutable_data()) v = 0.0;
}

}  // namespace

TEST_CASE("bucket examples") {
  CHECK(relative_bucket(0, 32, 16) == 0);
  CHECK(relative_bucket(20, 32, 16) == 15);
  CHECK(relative_bucket(-5, 32, 16) == 21);
}

TEST_CASE("bucket function agrees with the exact integer oracle") {
  for (long r = -256; r <= 256; ++r) {
    CAPTURE(r);
    CHECK(relative_bucket(r, 32, 16) == bucket_oracle(r));
  }
}

TEST_CASE("bucket range, monotonicity and the exact region") {
  int prev_pos = -1, prev_neg = -1;
  for (long m = 0; m <= 256; ++m) {
    const int pos = relative_bucket(m, 32, 16);
    const int neg = relative_bucket(-m, 32, 16);
    CHECK(pos >= 0);
    CHECK(pos < 16);
    if (m > 0) {
      CHECK(neg >= 16);
      CHECK(neg < 32);
      CHECK(neg >= prev_neg);
      prev_neg = neg;
    }
    CHECK(pos >= prev_pos);
    prev_pos = pos;
    if (m < 8) CHECK(pos == m);
  }
  for (long r : {-100000L, 100000L, 1L << 40}) {
    const int b = relative_bucket(r, 32, 16);
    CHECK(b >= 0);
    CHECK(b < 32);
  }
}

TEST_CASE("bucket index matrix reserves one bucket for the class token") {
  auto idx = bucket_index_matrix(5, 32, 16);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(idx[j] == 32);
    CHECK(idx[j * 5] == 32);
  }
  CHECK(idx[1 * 5 + 1] == 0);
  CHECK(idx[3 * 5 + 1] == 2);
  CHECK(idx[1 * 5 + 3] == relative_bucket(-2, 32, 16));
}

TEST_CASE("zero bias table matches vanilla attention") {
  Rng rng(1);
  const std::size_t tokens = 7, heads = 2, dk = 3;
  auto q = random_tensor({tokens, heads * dk}, rng);
  auto k = random_tensor({tokens, heads * dk}, rng);
  auto v = random_tensor({tokens, heads * dk}, rng);
  auto idx = bucket_index_matrix(tokens, 32, 16);
  auto table = Tensor<double>::zeros({heads, 33});
  auto with = rpe_attention(split_heads(q, heads), split_heads(k, heads), split_heads(v, heads), table,
                            idx, 0.0, false, rng);
  auto without = rpe_attention(split_heads(q, heads), split_heads(k, heads), split_heads(v, heads),
                               Tensor<double>{}, {}, 0.0, false, rng);
  CHECK(wf_test::max_abs_diff(with.data(), without.data()) == 0.0);

  // Direct computation of softmax(q k^T / sqrt(dk)) v for head 0.
  for (std::size_t i = 0; i < tokens; ++i) {
    std::vector<double> s(tokens);
    double mx = -1e300, z = 0.0;
    for (std::size_t j = 0; j < tokens; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < dk; ++c) dot += q.data()[i * 6 + c] * k.data()[j * 6 + c];
      s[j] = dot / std::sqrt(3.0);
      mx = std::max(mx, s[j]);
    }
    for (auto& x : s) z += (x = std::exp(x - mx));
    for (std::size_t c = 0; c < dk; ++c) {
      double o = 0.0;
      for (std::size_t j = 0; j < tokens; ++j) o += s[j] / z * v.data()[j * 6 + c];
      CHECK(without.data()[i * 6 + c] == doctest::Approx(o).epsilon(1e-12));
    }
  }
}

TEST_CASE("a single token attends only to itself") {
  Rng rng(2);
  auto q = random_tensor({1, 4}, rng), k = random_tensor({1, 4}, rng), v = random_tensor({1, 4}, rng);
  auto out = rpe_attention<double>({q}, {k}, {v}, Tensor<double>::zeros({1, 33}),
                                   bucket_index_matrix(1, 32, 16), 0.0, false, rng);
  CHECK(wf_test::max_abs_diff(out.data(), v.data()) < 1e-15);
}

TEST_CASE("a saturated diagonal bias gives identity mixing") {
  Rng rng(3);
  const std::size_t tokens = 6;
  auto q = random_tensor({tokens, 4}, rng), k = random_tensor({tokens, 4}, rng);
  auto v = random_tensor({tokens, 4}, rng);
  // Every pair uses a temporal bucket here, including those with token 0.
  std::vector<std::int32_t> idx(tokens * tokens);
  for (std::size_t i = 0; i < tokens; ++i)
    for (std::size_t j = 0; j < tokens; ++j)
      idx[i * tokens + j] = relative_bucket(static_cast<long>(i) - static_cast<long>(j), 32, 16);
  std::vector<double> table(33, -1e4);
  table[0] = 1e4;
  std::vector<Tensor<double>> probs;
  auto out = rpe_attention<double>({q}, {k}, {v}, Tensor<double>::from({1, 33}, table), idx, 0.0,
                                   false, rng, &probs);
  CHECK(wf_test::max_abs_diff(out.data(), v.data()) < 1e-12);
  REQUIRE(probs.size() == 1);
  for (std::size_t i = 0; i < tokens; ++i) CHECK(probs[0].data()[i * tokens + i] == doctest::Approx(1.0));
}

TEST_CASE("attention rows sum to one and the bias table receives gradient") {
  EncoderConfig c;
  c.embed_dim = 16;
  c.heads = 4;
  c.layers = 1;
  c.dropout = 0.0;
  ParamStore<double> ps;
  Rng rng(4);
  EncoderLayer<double> layer(c, 0, ps, rng);
  auto x = random_tensor({9, 16}, rng);
  std::vector<Tensor<double>> probs;
  auto y = layer.forward(x, false, rng, &probs);
  REQUIRE(probs.size() == 4);
  for (const auto& p : probs) {
    CHECK(p.shape() == Shape{9, 9});
    for (std::size_t i = 0; i < 9; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 9; ++j) s += p.data()[i * 9 + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  ps.zero_grad();
  wf_test::weighted_sum(y, 5).backward();
  auto table = layer.bias_table();
  REQUIRE(table.shape() == Shape{4, 33});
  REQUIRE(table.has_grad());
  double norm = 0.0;
  for (double g : table.grad()) norm += g * g;
  CHECK(norm > 0.0);
}

TEST_CASE("tied heads share one bias row") {
  EncoderConfig c;
  c.embed_dim = 8;
  c.heads = 2;
  c.rpe_tie_heads = true;
  ParamStore<double> ps;
  Rng rng(5);
  EncoderLayer<double> layer(c, 0, ps, rng);
  CHECK(layer.bias_table().shape() == Shape{1, 33});
  c.use_rpe = false;
  EncoderLayer<double> plain(c, 1, ps, rng);
  CHECK_FALSE(plain.bias_table().defined());
}

TEST_CASE("zeroed output projections make the layer an identity") {
  EncoderConfig c;
  c.embed_dim = 16;
  c.heads = 2;
  ParamStore<double> ps;
  Rng rng(6);
  EncoderLayer<double> layer(c, 0, ps, rng);
  zero_named(ps, "encoder.0.attn.out.weight");
  zero_named(ps, "encoder.0.ffn.fc2.weight");
  auto x = random_tensor({5, 16}, rng);
  auto y = layer.forward(x, true, rng);
  CHECK(wf_test::max_abs_diff(y.data(), x.data()) == 0.0);
}

TEST_CASE("layer shape and eval determinism at the WSS size") {
  EncoderConfig c;
  ParamStore<double> ps;
  Rng rng(7);
  Encoder<double> enc(c, ps, rng);
  auto x = random_tensor({27, 128}, rng);
  auto a = enc.forward(x, false, rng);
  auto b = enc.forward(x, false, rng);
  CHECK(a.shape() == Shape{27, 128});
  CHECK(wf_test::max_abs_diff(a.data(), b.data()) == 0.0);
  auto t = enc.forward(x, true, rng);
  CHECK(wf_test::max_abs_diff(a.data(), t.data()) > 0.0);
}

TEST_CASE("encoder configuration errors") {
  ParamStore<double> ps;
  Rng rng(8);
  EncoderConfig c;
  c.heads = 3;
  CHECK(error_kind([&] { Encoder<double>(c, ps, rng); }) == ErrorKind::config);
  c = EncoderConfig{};
  c.rpe_buckets = 31;
  CHECK(error_kind([&] { Encoder<double>(c, ps, rng); }) == ErrorKind::config);
  c = EncoderConfig{};
  c.rpe_max_distance = 40;
  CHECK(error_kind([&] { Encoder<double>(c, ps, rng); }) == ErrorKind::config);
}

TEST_CASE("classifier head") {
  ParamStore<double> ps;
  Rng rng(9);
  ClassifierHead<double> head(128, 2, 0.2, ps, rng);
  auto h = random_tensor({128}, rng);
  auto logits = head.forward(h, false, rng);
  CHECK(logits.shape() == Shape{2});
  auto again = head.forward(h, false, rng);
  CHECK(wf_test::max_abs_diff(logits.data(), again.data()) == 0.0);
  zero_named(ps, "head.W1");
  const auto zeroed = head.forward(h, true, rng);
  for (double v : zeroed.data()) CHECK(v == 0.0);

  ParamStore<double> other;
  CHECK(error_kind([&] { ClassifierHead<double>(8, 1, 0.0, other, rng); }) == ErrorKind::config);
}

TEST_CASE("miniature model gradients match finite differences") {
  // With one layer only the class-token attention row reaches the logits, and
  // that row uses the reserved bucket alone, so the bias table's true gradient
  // is exactly zero; two layers give it a live gradient.
  for (std::size_t layers : {1u, 2u}) {
    CAPTURE(layers);
    ModelConfig mc;
    mc.channels = 2;
    mc.length = 16;
    mc.classes = 2;
    mc.patch_size = 4;
    mc.embed_dim = 8;
    mc.heads = 2;
    mc.layers = layers;
    mc.dropout = 0.0;
    WaveFormer<double> model(mc, 3);
    Rng rng(10);
    auto x = random_tensor({2, 16}, rng);
    for (auto& e : model.params().entries()) {
      CAPTURE(e.name);
      const double err = wf_test::gradcheck(
          {e.tensor}, [&] { return wf_test::weighted_sum(model.forward(x, false, rng), 1); }, 1e-5,
          1e-7);
      CHECK(err < 1e-4);
    }
  }
}
