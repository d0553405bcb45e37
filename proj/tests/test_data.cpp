#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "waveformer/data.hpp"
#include "waveformer/error.hpp"
#include "waveformer/wavelet.hpp"

using namespace waveformer;
using wf_test::error_kind;
using wf_test::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kMeta = R"({"name": "tiny", "C": 2, "L": 3, "K": 2, "precision": "float64"})";
const char* kTrain =
    "sample,channel,label,t0,t1,t2\n"
    "0,0,1,1.5,2,-3e-1\n"
    "0,1,1,0,0,0\n"
    "1,0,0,4,5,6\n"
    "1,1,0,7,8,9.25\n";

void write_tiny(const std::filesystem::path& dir, const std::string& train = kTrain) {
  write_text(dir / "meta.json", kMeta);
  write_text(dir / "train.csv", train);
  write_text(dir / "test.csv", kTrain);
}

SeriesDataset make_dataset(std::size_t n, std::size_t c, std::size_t len, std::size_t k,
                           std::uint64_t seed, double loc = 0.0, double scale = 1.0) {
  SeriesDataset ds;
  ds.name = "rand";
  ds.split = "train";
  ds.channels = c;
  ds.length = len;
  ds.classes = k;
  Rng rng(seed);
  std::normal_distribution<double> g(loc, scale);
  ds.values.resize(n * c * len);
  for (auto& v : ds.values) v = g(rng);
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(i % k));
  return ds;
}

}  // namespace

TEST_CASE("dataset directory examples") {
  TempDir dir("data");
  write_tiny(dir.path());
  auto pair = load_dataset_dir(dir.path());
  CHECK(pair.train.size() == 2);
  CHECK(pair.train.channels == 2);
  CHECK(pair.train.length == 3);
  CHECK(pair.train.labels == std::vector<int>{1, 0});
  CHECK(pair.train.at(0, 0, 2) == -0.3);
  CHECK(pair.train.at(1, 1, 2) == 9.25);
  CHECK(pair.train.split == "train");
  CHECK(pair.test.split == "test");
  CHECK(pair.train.name == "tiny");
  auto t = pair.train.sample_tensor<double>(1);
  CHECK(t.shape() == Shape{2, 3});
  CHECK(t.data()[3] == 7.0);
}

TEST_CASE("dataset directory errors") {
  CHECK(error_kind([] { load_dataset_dir("/nonexistent/wf_data"); }) == ErrorKind::not_found);

  TempDir dir("data_err");
  write_tiny(dir.path(), "sample,channel,label,t0,t1,t2\n0,0,1,1,2,3\n0,1,0,1,2,3\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::integrity);

  write_tiny(dir.path(), "sample,channel,label,t0,t1,t2\n0,0,5,1,2,3\n0,1,5,1,2,3\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::label_range);

  write_tiny(dir.path(), "sample,channel,label,t0,t1,t2\n0,0,1,1,2,3\n0,1,1,1,2\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::parse);
  const auto msg = wf_test::error_message([&] { load_dataset_dir(dir.path()); });
  CHECK(msg.find("train.csv:3") != std::string::npos);

  write_tiny(dir.path(), "sample,channel,label,t0,t1,t2\n0,0,1,1,x,3\n0,1,1,1,2,3\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::parse);

  write_tiny(dir.path(), "sample,channel,label,t0,t1\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::parse);

  write_tiny(dir.path(), "sample,channel,label,t0,t1,t2\n0,0,1,1,2,3\n");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::integrity);

  std::filesystem::remove(dir / "test.csv");
  write_tiny(dir.path());
  std::filesystem::remove(dir / "test.csv");
  CHECK(error_kind([&] { load_dataset_dir(dir.path()); }) == ErrorKind::not_found);
}

TEST_CASE("CSV round trips are bit-identical") {
  for (const std::string precision : {"float64", "float32"}) {
    CAPTURE(precision);
    TempDir dir("rt");
    DatasetPair pair{make_dataset(5, 3, 17, 3, 1), make_dataset(4, 3, 17, 3, 2)};
    pair.test.split = "test";
    for (auto* ds : {&pair.train, &pair.test}) {
      ds->precision = precision;
      if (precision == "float32")
        for (auto& v : ds->values) v = static_cast<float>(v);
      // Awkward magnitudes exercise the shortest round-trip formatting.
      ds->values[0] = precision == "float32" ? static_cast<float>(1e-30) : 1e-300;
      ds->values[1] = precision == "float32" ? static_cast<float>(0.1) : 0.1;
    }
    write_dataset_dir(dir / "a", pair);
    auto back = load_dataset_dir(dir / "a");
    CHECK(back.train.values == pair.train.values);
    CHECK(back.test.values == pair.test.values);
    CHECK(back.train.labels == pair.train.labels);
    write_dataset_dir(dir / "b", back);
    CHECK(read_text(dir / "a" / "train.csv") == read_text(dir / "b" / "train.csv"));
    CHECK(read_text(dir / "a" / "meta.json") == read_text(dir / "b" / "meta.json"));
  }
}

TEST_CASE(".ts fixture parses and round-trips") {
  TempDir dir("ts");
  write_text(dir / "Mini_TRAIN.ts",
             "# comment line\n"
             "@problemName Mini\n@timeStamps false\n@missing false\n@univariate true\n"
             "@equalLength true\n@seriesLength 4\n@classLabel true up down\n@data\n"
             "1.0,2.0,3.0,4.0:up\n"
             "4,3,2,1:down\n");
  auto ds = parse_ts_file(dir / "Mini_TRAIN.ts");
  CHECK(ds.name == "Mini");
  CHECK(ds.size() == 2);
  CHECK(ds.channels == 1);
  CHECK(ds.length == 4);
  CHECK(ds.classes == 2);
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.class_names == std::vector<std::string>{"up", "down"});
  CHECK(ds.at(1, 0, 0) == 4.0);
  CHECK(ds.split == "train");

  write_ts_file(dir / "copy.ts", ds);
  auto again = parse_ts_file(dir / "copy.ts");
  CHECK(again.values == ds.values);
  CHECK(again.labels == ds.labels);
  CHECK(again.class_names == ds.class_names);

  // Multivariate with a caller-fixed class order.
  write_text(dir / "Multi_TEST.ts",
             "@problemName Multi\n@dimensions 2\n@equalLength true\n@classLabel true a b\n@data\n"
             "1,2,3:4,5,6:b\n7,8,9:1e1,11,12:a\n");
  auto m = parse_ts_file(dir / "Multi_TEST.ts", {"b", "a"});
  CHECK(m.channels == 2);
  CHECK(m.length == 3);
  CHECK(m.labels == std::vector<int>{0, 1});
  CHECK(m.at(1, 1, 0) == 10.0);
  CHECK(m.split == "test");
}

TEST_CASE(".ts unsupported features and errors") {
  TempDir dir("ts_err");
  const std::string head = "@problemName X\n@classLabel true a b\n@data\n";
  auto kind_of = [&](const std::string& body) {
    write_text(dir / "x.ts", body);
    return error_kind([&] { parse_ts_file(dir / "x.ts"); });
  };
  CHECK(kind_of(head + "1,2,3:a\n1,2:b\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of(head + "1,?,3:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of(head + "1,NaN,3:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of(head + "1,2:3,4,5:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of("@timeStamps true\n" + head + "1,2:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of("@equalLength false\n" + head + "1,2:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of("@classLabel false\n@data\n1,2:a\n") == ErrorKind::unsupported_feature);
  CHECK(kind_of(head + "1,2:c\n") == ErrorKind::label_range);
  CHECK(kind_of(head + "1,zz:a\n") == ErrorKind::parse);
  CHECK(kind_of("@dimensions 3\n" + head + "1,2:a\n") == ErrorKind::integrity);
  CHECK(error_kind([] { parse_ts_file("/nonexistent/x.ts"); }) == ErrorKind::not_found);
}

TEST_CASE("standardize examples") {
  // Channel 0 of train has mean 5 and std 2 exactly.
  SeriesDataset train;
  train.name = "s";
  train.channels = 2;
  train.length = 2;
  train.classes = 2;
  train.values = {3, 7, 1, 1, 3, 7, 1, 1};
  train.labels = {0, 1};
  SeriesDataset test = train;
  test.values = {5, 9, 1, 1};
  test.labels = {0};
  auto z = standardize(train, test);
  CHECK(z.train.values[0] == -1.0);
  CHECK(z.train.values[1] == 1.0);
  CHECK(z.test.values[0] == 0.0);
  CHECK(z.test.values[1] == 2.0);
  // Constant channel: floored std, zeros out, nothing NaN.
  CHECK(z.train.values[2] == 0.0);
  CHECK(z.test.values[3] == 0.0);
  REQUIRE(z.train.stats);
  CHECK(z.train.stats->mean[0] == 5.0);
  CHECK(z.train.stats->std[0] == 2.0);
  CHECK(z.train.stats->std[1] == 1e-8);

  CHECK(error_kind([&] { standardize(z.train, z.test); }) == ErrorKind::idempotence);
  CHECK(error_kind([&] { apply_stats(z.test, *z.train.stats); }) == ErrorKind::idempotence);
  ChannelStats wrong{{0.0}, {1.0}};
  CHECK(error_kind([&] { apply_stats(train, wrong); }) == ErrorKind::compatibility);
}

TEST_CASE("standardized train channels have zero mean and unit std; test uses train stats") {
  auto train = make_dataset(30, 4, 50, 2, 3, 12.0, 7.0);
  auto test = make_dataset(10, 4, 50, 2, 4, -3.0, 0.5);
  auto z = standardize(train, test);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0, s = 0;
    const double n = 30.0 * 50.0;
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t t = 0; t < 50; ++t) m += z.train.at(i, c, t);
    m /= n;
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t t = 0; t < 50; ++t) s += (z.train.at(i, c, t) - m) * (z.train.at(i, c, t) - m);
    CHECK(std::abs(m) < 1e-6);
    CHECK(std::abs(std::sqrt(s / n) - 1.0) < 1e-4);
    // Test values are mapped with the train statistics, not their own.
    const double expect = (test.at(0, c, 0) - z.train.stats->mean[c]) / z.train.stats->std[c];
    CHECK(z.test.at(0, c, 0) == expect);
  }
}

TEST_CASE("stratified split keeps class proportions") {
  auto ds = make_dataset(50, 1, 4, 2, 5);
  auto parts = stratified_split(ds, 0.2, 9);
  CHECK(parts.train.size() == 40);
  CHECK(parts.test.size() == 10);
  CHECK(parts.test.split == "val");
  int val_zero = 0;
  for (int y : parts.test.labels) val_zero += y == 0;
  CHECK(val_zero == 5);
  auto again = stratified_split(ds, 0.2, 9);
  CHECK(again.test.values == parts.test.values);
  CHECK(error_kind([&] { stratified_split(ds, 1.0, 1); }) == ErrorKind::config);
}

TEST_CASE("synthetic tasks: shape and determinism") {
  SynthSpec spec;
  spec.samples = 64;
  auto a = synth_freq_task(spec);
  auto b = synth_freq_task(spec);
  CHECK(a.train.size() + a.test.size() == 64);
  CHECK(a.train.size() == 32);
  CHECK(a.train.channels == 2);
  CHECK(a.train.length == 128);
  CHECK(a.train.values.size() == 32 * 2 * 128);
  CHECK(a.train.values == b.train.values);
  CHECK(a.test.values == b.test.values);
  a.train.validate();
  for (int k : {0, 1}) CHECK(std::count(a.train.labels.begin(), a.train.labels.end(), k) == 16);

  spec.seed = 8;
  CHECK(synth_freq_task(spec).train.values != a.train.values);

  for (auto task : {SynthTask::chirp_vs_tone, SynthTask::phase_shift}) {
    SynthSpec s;
    s.task = task;
    s.freqs = {4.0};
    s.classes = 3;
    auto d = synth_freq_task(s);
    CHECK(d.train.classes == (task == SynthTask::phase_shift ? 3u : 2u));
    d.train.validate();
  }
}

TEST_CASE("synthetic spec errors") {
  SynthSpec s;
  s.freqs = {3.0, 64.0};
  CHECK(error_kind([&] { synth_freq_task(s); }) == ErrorKind::spec);
  s.freqs = {3.0, 3.0};
  CHECK(error_kind([&] { synth_freq_task(s); }) == ErrorKind::spec);
  s.freqs = {3.0, 7.0};
  s.noise_std = -1.0;
  CHECK(error_kind([&] { synth_freq_task(s); }) == ErrorKind::spec);
  CHECK(error_kind([] { parse_synth_task("square"); }) == ErrorKind::config);
}

TEST_CASE("noise-free frequency pair is separable by wavelet band energy") {
  // With L = 128, level j details cover [64 / 2^j, 128 / 2^j) cycles: 3 cycles
  // fall in level 5 and 7 cycles in level 4.
  SynthSpec spec;
  spec.noise_std = 0.0;
  spec.samples = 40;
  auto data = synth_freq_task(spec);
  const auto f = wavelet_filters(WaveletFamily::db4);
  for (const auto* ds : {&data.train, &data.test}) {
    for (std::size_t i = 0; i < ds->size(); ++i) {
      auto p = dwt_multi(ds->sample_tensor<double>(i), 5, f);
      double e5 = 0, e4 = 0;
      for (double v : p.details[0].data()) e5 += v * v;
      for (double v : p.details[1].data()) e4 += v * v;
      CHECK((e4 > e5 ? 1 : 0) == ds->labels[i]);
    }
  }
}
