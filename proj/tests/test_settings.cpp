#include <doctest.h>

#include "support.hpp"
#include "waveformer/error.hpp"
#include "waveformer/settings.hpp"

using namespace waveformer;
using wf_test::error_kind;

TEST_CASE("parse a sectioned config") {
  auto s = parse_settings(
      "# leading comment\n"
      "[run]\nseed = 9\nout_dir = \"runs/x # not a comment\"\nprecision = float64\n"
      "[synth]\nfreqs = [2, 5.5, 9]  # trailing comment\nnoise_std = 0\n"
      "[model]\nuse_rpe = false\nwavelet = db4\npatch_size = 16\ndywpe_resolution = signal\n"
      "position_fallback = none\n"
      "[train]\nmonitor = val_loss\nlr_max = 3e-4\n"
      "[ablate]\nseeds = 4, 5\n");
  CHECK(s.run.seed == 9);
  CHECK(s.run.out_dir == "runs/x # not a comment");
  CHECK(s.run.precision == "float64");
  CHECK(s.synth.freqs == std::vector<double>{2.0, 5.5, 9.0});
  CHECK(s.synth.noise_std == 0.0);
  CHECK_FALSE(s.model.use_rpe);
  CHECK(s.model.family == WaveletFamily::db4);
  CHECK(s.model.patch_size == 16);
  CHECK(s.model.dywpe_resolution == DywpeResolution::signal);
  CHECK(s.model.position_fallback == PositionFallback::none);
  CHECK(s.train.monitor == Monitor::val_loss);
  CHECK(s.train.lr_max == 3e-4);
  CHECK(s.ablate.seeds == std::vector<std::uint64_t>{4, 5});
  s.validate();
}

TEST_CASE("defaults") {
  Settings s;
  CHECK(s.model.embed_dim == 128);
  CHECK(s.model.heads == 4);
  CHECK(s.model.layers == 4);
  CHECK(s.model.dropout == 0.2);
  CHECK(s.model.rpe_buckets == 32);
  CHECK(s.model.rpe_max_distance == 16);
  CHECK(s.model.alpha_init == 1.0);
  CHECK(s.train.lr_max == 1e-3);
  CHECK(s.train.lr_min == 1e-5);
  CHECK(s.train.clip_norm == 1.0);
  CHECK(s.train.patience == 20);
  CHECK(s.train.val_ratio == 0.2);
  CHECK(s.train.monitor == Monitor::val_acc);
  s.validate();
}

TEST_CASE("unknown keys list every valid key") {
  Settings s;
  CHECK(error_kind([&] { s.set("model.embedding_dim", "64"); }) == ErrorKind::config);
  const auto msg = wf_test::error_message([&] { s.set("model.embedding_dim", "64"); });
  for (const auto& k : Settings::keys()) CHECK(msg.find(k) != std::string::npos);
  CHECK(error_kind([] { parse_settings("[model]\nbogus = 1\n"); }) == ErrorKind::config);
  CHECK(wf_test::error_message([] { parse_settings("[model]\nbogus = 1\n", "cfg.toml"); })
            .find("cfg.toml:2") != std::string::npos);
}

TEST_CASE("malformed text and values") {
  CHECK(error_kind([] { parse_settings("seed = 1\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[run\nseed = 1\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[run]\nseed\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[run]\nseed = -1\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[model]\nuse_rpe = maybe\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[model]\nwavelet = sym8\n"); }) == ErrorKind::unsupported_family);
  CHECK(error_kind([] { parse_settings("[train]\nlr_max = fast\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_settings("[data]\nsource = s3\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { load_settings("/nonexistent/cfg.toml"); }) == ErrorKind::config);
}

TEST_CASE("overrides") {
  Settings s;
  apply_override(s, "train.epochs=7");
  apply_override(s, "model.use_dywpe = false");
  apply_override(s, "run.out_dir=\"a b\"");
  CHECK(s.train.epochs == 7);
  CHECK_FALSE(s.model.use_dywpe);
  CHECK(s.run.out_dir == "a b");
  CHECK(error_kind([&] { apply_override(s, "train.epochs"); }) == ErrorKind::config);
  CHECK(error_kind([&] { apply_override(s, "=3"); }) == ErrorKind::config);
  CHECK(error_kind([&] { apply_override(s, "train.nope=3"); }) == ErrorKind::config);
}

TEST_CASE("format and parse round-trip") {
  Settings s;
  apply_override(s, "synth.freqs=[1.5, 4]");
  apply_override(s, "train.lr_max=0.000123");
  apply_override(s, "model.rpe_tie_heads=true");
  apply_override(s, "data.source=ts");
  apply_override(s, "data.train_ts=x/A_TRAIN.ts");
  const auto text = format_settings(s);
  auto back = parse_settings(text);
  CHECK(format_settings(back) == text);
  for (const auto& k : Settings::keys()) {
    CAPTURE(k);
    CHECK(back.get(k) == s.get(k));
  }
}

TEST_CASE("json echo is nested and typed") {
  Settings s;
  auto j = settings_to_json(s);
  CHECK(j["model"]["embed_dim"] == 128);
  CHECK(j["model"]["use_rpe"] == true);
  CHECK(j["train"]["lr_max"] == 1e-3);
  CHECK(j["run"]["precision"] == "float32");
  CHECK(j["run"]["out_dir"] == "runs/default");
  CHECK(j.size() == 6);
}

TEST_CASE("validation catches inconsistent sources") {
  Settings s;
  s.data.source = DataSource::dir;
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::config);
  s.data.source = DataSource::ts;
  s.data.train_ts = "a.ts";
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::config);
  s = Settings{};
  s.ablate.seeds.clear();
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::config);
  s = Settings{};
  s.synth.freqs = {3, 70};
  CHECK(error_kind([&] { s.validate(); }) == ErrorKind::spec);
}
