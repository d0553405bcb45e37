#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "waveformer/dywpe.hpp"
#include "waveformer/error.hpp"

using namespace waveformer;
using wf_test::error_kind;
using wf_test::random_tensor;

namespace {

DywpeConfig small_config(std::size_t channels = 3, std::size_t d = 16) {
  DywpeConfig c;
  c.channels = channels;
  c.embed_dim = d;
  c.patch_size = 4;
  c.padded_length = 128;  // 32 tokens
  return c;
}

void fill(Tensor<double> t, double v) {
  for (auto& x : t.mutable_data()) x = v;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("default level count") {
  CHECK(default_dywpe_levels(1) == 1);
  CHECK(default_dywpe_levels(4) == 1);
  CHECK(default_dywpe_levels(8) == 2);
  CHECK(default_dywpe_levels(16) == 3);
  CHECK(default_dywpe_levels(26) == 3);
  CHECK(default_dywpe_levels(1024) == 3);
}

TEST_CASE("channel projection examples") {
  ParamStore<double> ps;
  Rng rng(1);
  Dywpe<double> pe(small_config(), ps, rng);
  auto x = random_tensor({3, 32}, rng);

  auto w = pe.w_channel();
  fill(w, 0.0);
  w.mutable_data()[0] = 1.0;
  CHECK(wf_test::max_abs_diff(pe.channel_project(x).data(), x.data().subspan(0, 32)) == 0.0);

  fill(w, 0.0);
  CHECK(max_abs(pe.channel_project(x).data()) == 0.0);
  CHECK(max_abs(pe.encode(x).data()) == 0.0);

  ParamStore<double> ps1;
  Dywpe<double> mono(small_config(1), ps1, rng);
  fill(mono.w_channel(), 2.0);
  auto y = random_tensor({1, 32}, rng);
  auto proj = mono.channel_project(y);
  for (std::size_t t = 0; t < 32; ++t) CHECK(proj.data()[t] == 2.0 * y.data()[t]);

  CHECK(error_kind([&] { pe.channel_project(Tensor<double>::zeros({2, 32})); }) == ErrorKind::dimension);
}

TEST_CASE("gate examples") {
  ParamStore<double> ps;
  Rng rng(2);
  Dywpe<double> pe(small_config(), ps, rng);
  auto e = random_tensor({16}, rng);
  auto c = random_tensor({5}, rng);
  CHECK(pe.gate(e, c).shape() == Shape{5, 16});
  CHECK(max_abs(pe.gate(e, Tensor<double>::zeros({5})).data()) == 0.0);

  auto wv = pe.w_value();
  fill(wv, 0.0);
  CHECK(max_abs(pe.gate(e, c).data()) == 0.0);

  // d = 1: sigmoid(0) = 1/2 and tanh saturates at 1.
  DywpeConfig one = small_config(1, 1);
  ParamStore<double> ps1;
  Dywpe<double> tiny(one, ps1, rng);
  fill(tiny.w_gate(), 0.0);
  fill(tiny.w_value(), 1000.0);
  auto out = tiny.gate(Tensor<double>::from({1}, {1.0}), Tensor<double>::from({3}, {1.0, -2.0, 0.5}));
  CHECK(out.data()[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.data()[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.data()[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("parameters: J + 1 scale embeddings of length d") {
  for (std::size_t levels : {1u, 2u, 3u}) {
    auto cfg = small_config();
    cfg.levels = levels;
    ParamStore<double> ps;
    Rng rng(3);
    Dywpe<double> pe(cfg, ps, rng);
    CHECK(pe.levels() == levels);
    REQUIRE(pe.scale_embeddings().size() == levels + 1);
    for (const auto& s : pe.scale_embeddings()) CHECK(s.numel() == 16);
    CHECK(pe.w_channel().numel() == 3);
    CHECK(pe.w_channel().data()[0] == doctest::Approx(1.0 / 3.0));
    CHECK(pe.w_gate().shape() == Shape{16, 16});
    CHECK(pe.w_value().shape() == Shape{16, 16});
  }
}

TEST_CASE("zero signal gives exactly zero field") {
  ParamStore<double> ps;
  Rng rng(4);
  Dywpe<double> pe(small_config(), ps, rng);
  auto p = pe.forward(Tensor<double>::zeros({3, 128}));
  CHECK(p.shape() == Shape{32, 16});
  for (double v : p.data()) CHECK(v == 0.0);
}

TEST_CASE("the field is linear in the signal") {
  for (auto res : {DywpeResolution::token, DywpeResolution::signal}) {
    for (auto fam : {WaveletFamily::haar, WaveletFamily::db2}) {
      auto cfg = small_config();
      cfg.resolution = res;
      cfg.family = fam;
      ParamStore<double> ps;
      Rng rng(5);
      Dywpe<double> pe(cfg, ps, rng);
      auto x = random_tensor({3, 128}, rng);
      auto y = random_tensor({3, 128}, rng);
      const double a = 1.75, b = -0.4;
      std::vector<double> mix(x.numel());
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x.data()[i] + b * y.data()[i];
      auto pm = pe.forward(Tensor<double>::from({3, 128}, mix));
      auto px = pe.forward(x), py = pe.forward(y);
      double worst = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < pm.numel(); ++i) {
        const double expect = a * px.data()[i] + b * py.data()[i];
        worst = std::max(worst, std::abs(pm.data()[i] - expect));
        scale = std::max(scale, std::abs(expect));
      }
      CHECK(worst <= 1e-6 * scale);
    }
  }
}

TEST_CASE("the field depends on the signal, not only on positions") {
  int differing = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ParamStore<double> ps;
    Rng rng(100 + seed);
    Dywpe<double> pe(small_config(), ps, rng);
    auto x = random_tensor({3, 128}, rng);
    std::vector<std::size_t> order(128);
    for (std::size_t i = 0; i < 128; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> shuffled(x.numel());
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t t = 0; t < 128; ++t) shuffled[c * 128 + t] = x.data()[c * 128 + order[t]];
    auto a = pe.forward(x);
    auto b = pe.forward(Tensor<double>::from({3, 128}, shuffled));
    if (wf_test::max_abs_diff(a.data(), b.data()) > 1e-6) ++differing;
  }
  CHECK(differing == 20);
}

TEST_CASE("gradients reach every DyWPE parameter") {
  ParamStore<double> ps;
  Rng rng(6);
  Dywpe<double> pe(small_config(), ps, rng);
  auto x = random_tensor({3, 128}, rng);
  ps.zero_grad();
  wf_test::weighted_sum(pe.forward(x), 9).backward();
  for (const auto& e : ps.entries()) {
    CAPTURE(e.name);
    REQUIRE(e.tensor.has_grad());
    double norm = 0.0;
    for (double g : e.tensor.grad()) norm += g * g;
    CHECK(norm > 0.0);
  }
}

TEST_CASE("level errors") {
  auto cfg = small_config();
  cfg.levels = 3;  // 4 tokens pad to 8, too short for three 8-tap levels
  cfg.padded_length = 16;
  cfg.family = WaveletFamily::db4;
  ParamStore<double> ps;
  Rng rng(7);
  CHECK(error_kind([&] { Dywpe<double>(cfg, ps, rng); }) == ErrorKind::level);

  ParamStore<double> ps2;
  auto ok = small_config();
  ok.levels = 3;
  Dywpe<double> pe(ok, ps2, rng);
  CHECK(error_kind([&] { pe.encode(Tensor<double>::zeros({3, 12})); }) == ErrorKind::level);
  const auto msg = wf_test::error_message([&] { pe.encode(Tensor<double>::zeros({3, 12})); });
  CHECK(msg.find("16") != std::string::npos);

  auto bad = small_config();
  bad.padded_length = 130;
  ParamStore<double> ps3;
  CHECK(error_kind([&] { Dywpe<double>(bad, ps3, rng); }) == ErrorKind::config);
}

TEST_CASE("token counts that are not a power of two are padded and truncated") {
  auto cfg = small_config();
  cfg.padded_length = 4 * 26;
  ParamStore<double> ps;
  Rng rng(8);
  Dywpe<double> pe(cfg, ps, rng);
  CHECK(pe.levels() == 3);
  CHECK(pe.working_length() == 32);
  CHECK(pe.forward(random_tensor({3, 104}, rng)).shape() == Shape{26, 16});
}

TEST_CASE("DyWPE gradients match finite differences") {
  for (auto res : {DywpeResolution::token, DywpeResolution::signal}) {
    DywpeConfig cfg;
    cfg.channels = 2;
    cfg.embed_dim = 3;
    cfg.patch_size = 2;
    cfg.padded_length = 16;
    cfg.family = WaveletFamily::db2;
    cfg.resolution = res;
    ParamStore<double> ps;
    Rng rng(9);
    Dywpe<double> pe(cfg, ps, rng);
    // Larger scale embeddings keep the gate away from its flat region.
    for (auto& s : pe.scale_embeddings())
      for (auto& v : Tensor<double>(s).mutable_data()) v *= 30.0;
    auto x = random_tensor({2, 16}, rng, -1, 1, true);
    std::vector<Tensor<double>> leaves{x};
    for (auto& e : ps.entries()) leaves.push_back(e.tensor);
    const double err =
        wf_test::gradcheck(leaves, [&] { return wf_test::weighted_sum(pe.forward(x), 4); }, 1e-5);
    CHECK(err < 1e-6);
  }
}
