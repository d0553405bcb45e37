#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "waveformer/error.hpp"
#include "waveformer/trainer.hpp"

using namespace waveformer;
using wf_test::error_kind;
using wf_test::random_tensor;

namespace {

ModelConfig desk_model(const SeriesDataset& ds) {
  ModelConfig mc;
  mc.channels = ds.channels;
  mc.length = ds.length;
  mc.classes = ds.classes;
  mc.patch_size = 8;
  mc.embed_dim = 32;
  mc.heads = 4;
  mc.layers = 2;
  return mc;
}

DatasetPair small_synth(std::uint64_t seed, std::size_t samples = 32) {
  SynthSpec s;
  s.samples = samples;
  s.length = 64;
  s.seed = seed;
  return standardize(synth_freq_task(s).train, synth_freq_task(s).test);
}

template <typename T>
double eval_loss(const WaveFormer<T>& model, const std::vector<Tensor<T>>& xs, const std::vector<int>& ys) {
  NoGradGuard guard;
  Rng rng(0);
  return static_cast<double>(cross_entropy(model.forward_batch(xs, false, rng), ys).item());
}

}  // namespace

TEST_CASE("cross-entropy examples") {
  const std::vector<int> y0{0};
  CHECK(cross_entropy(Tensor<double>::from({1, 2}, {0, 0}), y0).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double sat = cross_entropy(Tensor<double>::from({1, 2}, {1e4, -1e4}), y0).item();
  CHECK(std::isfinite(sat));
  CHECK(sat == doctest::Approx(0.0));
  const double wrong = cross_entropy(Tensor<double>::from({1, 2}, {-1e4, 1e4}), y0).item();
  CHECK(wrong == doctest::Approx(2e4));

  double prev = std::numeric_limits<double>::infinity();
  for (double s : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double l = cross_entropy(Tensor<double>::from({2, 3}, {s, 0, 0, 0, 0, s}), std::vector<int>{0, 2}).item();
    CHECK(l < prev);
    prev = l;
  }
  CHECK(error_kind([] { cross_entropy(Tensor<double>::zeros({1, 2}), std::vector<int>{2}); }) ==
        ErrorKind::label_range);
  CHECK(error_kind([] { cross_entropy(Tensor<double>::zeros({1, 2}), std::vector<int>{-1}); }) ==
        ErrorKind::label_range);
}

TEST_CASE("cross-entropy gradient matches finite differences") {
  Rng rng(1);
  auto logits = random_tensor({4, 3}, rng, -3, 3, true);
  const std::vector<int> y{0, 2, 1, 1};
  CHECK(wf_test::gradcheck({logits}, [&] { return cross_entropy(logits, y); }, 1e-6) < 1e-7);
}

TEST_CASE("first Adam step is -lr times the gradient sign") {
  ParamStore<double> ps;
  auto p = ps.constant("p", {3}, 0.5);
  Adam<double> adam(ps);
  auto g = p.mutable_grad();
  g[0] = 1.0;
  g[1] = -4.0;
  g[2] = 0.0;
  adam.step(0.1);
  CHECK(p.data()[0] == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(p.data()[1] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(p.data()[2] == 0.5);
  CHECK(adam.steps() == 1);
}

TEST_CASE("zero gradients leave parameters unchanged; missing gradients are skipped") {
  ParamStore<double> ps;
  auto a = ps.constant("a", {4}, 1.25);
  auto b = ps.constant("b", {2}, -2.0);
  Adam<double> adam(ps);
  for (int i = 0; i < 10; ++i) {
    ps.zero_grad();
    a.mutable_grad();
    adam.step(0.01);
  }
  for (double v : a.data()) CHECK(v == 1.25);
  for (double v : b.data()) CHECK(v == -2.0);
}

TEST_CASE("a NaN gradient aborts with the parameter name") {
  ParamStore<double> ps;
  ps.constant("fine", {1}, 0.0).mutable_grad()[0] = 1.0;
  auto bad = ps.constant("head.W2", {2}, 0.0);
  bad.mutable_grad()[1] = std::numeric_limits<double>::quiet_NaN();
  Adam<double> adam(ps);
  CHECK(error_kind([&] { adam.step(0.1); }) == ErrorKind::numeric);
  CHECK(wf_test::error_message([&] { adam.step(0.1); }).find("head.W2") != std::string::npos);
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 100, 1e-3, 1e-5) == 1e-3);
  CHECK(cosine_lr(100, 100, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(cosine_lr(50, 100, 1e-3, 1e-5) == doctest::Approx((1e-3 + 1e-5) / 2).epsilon(1e-12));
  CHECK(cosine_lr(7, 0, 1e-3, 1e-5) == 1e-3);
  double prev = 1.0;
  for (std::size_t t = 0; t <= 100; ++t) {
    const double lr = cosine_lr(t, 100, 1e-3, 1e-5);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("gradient clipping") {
  ParamStore<double> ps;
  auto a = ps.constant("a", {2}, 0.0);
  auto b = ps.constant("b", {1}, 0.0);
  a.mutable_grad()[0] = 6.0;
  a.mutable_grad()[1] = 0.0;
  b.mutable_grad()[0] = 8.0;
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(10.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(b.grad()[0] == doctest::Approx(0.8));
  CHECK(std::hypot(a.grad()[0], b.grad()[0]) == doctest::Approx(1.0).epsilon(1e-6));

  a.mutable_grad()[0] = 0.3;
  b.mutable_grad()[0] = 0.4;
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(0.5));
  CHECK(a.grad()[0] == 0.3);
  CHECK(b.grad()[0] == 0.4);

  ps.zero_grad();
  CHECK(clip_grad_norm(ps, 1.0) == 0.0);
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.validate();
  c.patience = 0;
  CHECK(error_kind([&] { c.validate(); }) == ErrorKind::config);
  c = TrainConfig{};
  c.lr_min = 1.0;
  CHECK(error_kind([&] { c.validate(); }) == ErrorKind::config);
  c = TrainConfig{};
  c.clip_norm = 0.0;
  CHECK(error_kind([&] { c.validate(); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_monitor("val_f1"); }) == ErrorKind::config);
}

TEST_CASE("patience 1 with a frozen learning rate stops after one non-improving epoch") {
  auto data = small_synth(3);
  auto split = stratified_split(data.train, 0.25, 1);
  WaveFormer<double> model(desk_model(data.train), 1);
  const auto before = model.params().snapshot();
  TrainConfig tc;
  tc.epochs = 10;
  tc.lr_max = 0.0;
  tc.lr_min = 0.0;
  tc.patience = 1;
  tc.record_wall_time = false;
  auto r = train_loop(model, split.train, split.test, tc);
  CHECK(r.epochs.size() == 2);
  CHECK(r.best_epoch == 1);
  CHECK(r.stopped_early);
  CHECK(model.params().snapshot() == before);
  CHECK(r.epochs[1].val_loss == r.epochs[0].val_loss);
}

TEST_CASE("divergence aborts and keeps the finished epochs") {
  auto data = small_synth(4);
  auto d32 = data.train;
  WaveFormer<float> model(desk_model(d32), 2);
  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = d32.size();
  tc.lr_max = 1e38;
  tc.lr_min = 1e38;
  tc.clip_norm = 1e30;
  try {
    train_loop(model, d32, SeriesDataset{}, tc);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.kind() == ErrorKind::numeric);
    REQUIRE(e.metrics().size() == 1);
    CHECK(std::isfinite(e.metrics()[0].train_loss));
    CHECK(exit_code_for(e.kind()) == 4);
  }
}

TEST_CASE("one optimizer step lowers the first-batch loss") {
  int descended = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto data = small_synth(100 + seed);
    WaveFormer<double> model(desk_model(data.train), seed);
    std::vector<Tensor<double>> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < 16; ++i) {
      xs.push_back(data.train.sample_tensor<double>(i));
      ys.push_back(data.train.labels[i]);
    }
    const double l0 = eval_loss(model, xs, ys);
    Adam<double> adam(model.params());
    Rng rng(seed);
    model.params().zero_grad();
    cross_entropy(model.forward_batch(xs, false, rng), ys).backward();
    clip_grad_norm(model.params(), 1.0);
    adam.step(1e-3);
    if (eval_loss(model, xs, ys) < l0) ++descended;
  }
  CHECK(descended >= 18);
}

TEST_CASE("training is deterministic and metrics round-trip") {
  auto data = small_synth(5, 40);
  auto split = stratified_split(data.train, 0.2, 1);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 11;
  tc.record_wall_time = false;
  std::vector<std::string> rows[2];
  std::vector<std::vector<double>> params[2];
  for (int run = 0; run < 2; ++run) {
    WaveFormer<double> model(desk_model(data.train), 7);
    auto r = train_loop(model, split.train, split.test, tc,
                        [&](const EpochMetrics& m) { rows[run].push_back(format_metrics_row(m)); });
    CHECK(r.epochs.size() == 3);
    for (const auto& m : r.epochs) {
      CHECK(m.train_acc >= 0.0);
      CHECK(m.train_acc <= 1.0);
      CHECK(m.val_acc >= 0.0);
      CHECK(m.val_acc <= 1.0);
      CHECK(m.wall_ms == 0.0);
    }
    params[run] = model.params().snapshot();
  }
  CHECK(rows[0] == rows[1]);
  CHECK(params[0] == params[1]);

  wf_test::TempDir dir("metrics");
  {
    MetricsWriter w(dir / "metrics.csv");
    EpochMetrics m{1, 1e-3, 0.69314718, 0.5, 0.7, 0.25, 1.5, 12.5};
    w.write(m);
    m.epoch = 2;
    m.lr = 9.7e-4;
    w.write(m);
  }
  auto back = read_metrics_csv(dir / "metrics.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].train_loss == 0.69314718);
  CHECK(back[1].lr == 9.7e-4);
  CHECK(back[1].epoch == 2);
}

TEST_CASE("evaluate reports accuracy, loss and a confusion matrix") {
  auto data = small_synth(6);
  WaveFormer<double> model(desk_model(data.train), 3);
  auto ev = evaluate(model, data.test);
  CHECK(ev.predictions.size() == data.test.size());
  REQUIRE(ev.confusion.size() == 2);
  std::size_t total = 0, diag = 0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      total += ev.confusion[i][j];
      if (i == j) diag += ev.confusion[i][j];
    }
  CHECK(total == data.test.size());
  CHECK(ev.accuracy == doctest::Approx(static_cast<double>(diag) / total));
  CHECK(std::isfinite(ev.loss));

  auto wrong = data.test;
  wrong.length = 32;
  CHECK(error_kind([&] { evaluate(model, wrong); }) == ErrorKind::compatibility);
}

TEST_CASE("run ids are stable 12-digit hex") {
  CHECK(run_id("abc") == run_id("abc"));
  CHECK(run_id("abc") != run_id("abd"));
  CHECK(run_id("").size() == 12);
  // FNV-1a of the empty string is the offset basis.
  CHECK(run_id("") == "cbf29ce48422");
}
