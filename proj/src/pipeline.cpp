#include "waveformer/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <map>

#include "waveformer/checkpoint.hpp"
#include "waveformer/error.hpp"

namespace waveformer {

namespace {

nlohmann::ordered_json dataset_json(const PreparedData& d) {
  return {{"name", d.train.name},
          {"C", d.train.channels},
          {"L", d.train.length},
          {"K", d.train.classes},
          {"train", d.train.size()},
          {"val", d.val.size()},
          {"test", d.test.size()},
          {"standardized", d.stats.has_value()}};
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

template <typename T>
RunOutcome train_typed(const Settings& s, const PreparedData& data, const std::filesystem::path& out_dir) {
  const ModelConfig mc = model_config_for(s, data.train);
  WaveFormer<T> model(mc, s.run.seed);
  TrainConfig tc = s.train;
  tc.seed = s.run.seed;
  tc.record_wall_time = s.run.record_wall_time;

  std::optional<MetricsWriter> writer;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    writer.emplace(out_dir / "metrics.csv");
  }
  RunOutcome r;
  r.train = train_loop(model, data.train, data.val, tc, [&](const EpochMetrics& m) {
    if (writer) writer->write(m);
  });
  r.train_acc = evaluate(model, data.train).accuracy;
  r.test = evaluate(model, data.test);

  const auto config = settings_to_json(s);
  r.run_id = run_id(config.dump() + "|" + data.train.name);
  nlohmann::ordered_json summary;
  summary["run_id"] = r.run_id;
  summary["seed"] = s.run.seed;
  summary["best_epoch"] = r.train.best_epoch;
  summary["epochs_run"] = r.train.epochs.size();
  summary["stopped_early"] = r.train.stopped_early;
  summary["best_val_acc"] = r.train.best_val_acc;
  summary["best_val_loss"] = r.train.best_val_loss;
  summary["train_acc"] = r.train_acc;
  summary["test_acc"] = r.test.accuracy;
  summary["test_loss"] = r.test.loss;
  summary["parameters"] = model.params().total_elements();
  summary["dataset"] = dataset_json(data);
  summary["config"] = config;
  r.summary = summary;

  if (!out_dir.empty()) {
    CheckpointInfo info;
    info.model = mc;
    info.precision = precision_name<T>();
    info.run_config = config;
    info.stats = data.stats;
    info.class_names = data.class_names;
    info.seed = s.run.seed;
    save_checkpoint(out_dir / "model.ckpt", model, info);
    write_json(out_dir / "summary.json", summary);
  }
  return r;
}

}  // namespace

DatasetPair load_run_data(const Settings& s) {
  switch (s.data.source) {
    case DataSource::synth:
      return synth_freq_task(s.synth);
    case DataSource::dir:
      return load_dataset_dir(s.data.path);
    case DataSource::ts: {
      DatasetPair d;
      d.train = parse_ts_file(s.data.train_ts);
      d.test = parse_ts_file(s.data.test_ts, d.train.class_names);
      d.train.split = "train";
      d.test.split = "test";
      if (d.train.channels != d.test.channels || d.train.length != d.test.length) {
        fail(ErrorKind::compatibility, "train .ts is (C=" + std::to_string(d.train.channels) +
                                           ", L=" + std::to_string(d.train.length) +
                                           "), test .ts is (C=" + std::to_string(d.test.channels) +
                                           ", L=" + std::to_string(d.test.length) + ")");
      }
      return d;
    }
  }
  fail(ErrorKind::config, "unknown data source");
}

PreparedData prepare_data(const Settings& s) {
  auto raw = load_run_data(s);
  raw.train.validate();
  raw.test.validate();
  PreparedData out;
  out.class_names = raw.train.class_names;
  if (s.data.standardize) {
    auto z = standardize(raw.train, raw.test);
    out.stats = z.train.stats;
    raw = std::move(z);
  }
  out.test = std::move(raw.test);
  if (s.train.val_ratio > 0.0) {
    auto split = stratified_split(raw.train, s.train.val_ratio, s.run.seed);
    out.train = std::move(split.train);
    out.val = std::move(split.test);
  } else {
    out.train = std::move(raw.train);
    out.val = out.train;
    out.val.values.clear();
    out.val.labels.clear();
    out.val.split = "val";
  }
  return out;
}

ModelConfig model_config_for(const Settings& s, const SeriesDataset& train) {
  ModelConfig mc = s.model;
  mc.channels = train.channels;
  mc.length = train.length;
  mc.classes = train.classes;
  mc.validate();
  return mc;
}

RunOutcome run_training(const Settings& s, const std::filesystem::path& out_dir) {
  s.validate();
  return run_training(s, prepare_data(s), out_dir);
}

RunOutcome run_training(const Settings& s, const PreparedData& data, const std::filesystem::path& out_dir) {
  s.validate();
  if (s.run.precision == "float64") return train_typed<double>(s, data, out_dir);
  return train_typed<float>(s, data, out_dir);
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> names{"full", "no_wavelet_embed", "no_dywpe", "no_rpe"};
  return names;
}

void apply_variant(Settings& s, const std::string& variant) {
  if (variant == "full") return;
  if (variant == "no_wavelet_embed") {
    s.model.use_wavelet_embed = false;
  } else if (variant == "no_dywpe") {
    s.model.use_dywpe = false;
  } else if (variant == "no_rpe") {
    s.model.use_rpe = false;
  } else {
    fail(ErrorKind::config, "unknown ablation variant '" + variant + "'");
  }
}

std::vector<AblationRow> run_ablation(const Settings& s, const std::filesystem::path& out_dir) {
  s.validate();
  std::vector<AblationRow> rows;
  for (const auto seed : s.ablate.seeds) {
    Settings base = s;
    base.run.seed = seed;
    const PreparedData data = prepare_data(base);
    for (const auto& variant : ablation_variants()) {
      Settings v = base;
      apply_variant(v, variant);
      rows.push_back({variant, seed, run_training(v, data).test.accuracy});
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "ablation.csv", std::ios::binary | std::ios::trunc);
    csv << "variant,seed,test_acc\n";
    for (const auto& r : rows) csv << r.variant << ',' << r.seed << ',' << nlohmann::json(r.test_acc).dump() << '\n';
    if (!csv) fail(ErrorKind::io, "failed writing ablation.csv");
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (const auto& a : summarize_ablation(rows)) {
      summary.push_back({{"variant", a.variant}, {"mean_test_acc", a.mean_test_acc}, {"delta_pp", a.delta_pp}});
    }
    write_json(out_dir / "ablation_summary.json",
               {{"seeds", s.ablate.seeds}, {"variants", summary}, {"config", settings_to_json(s)}});
  }
  return rows;
}

std::vector<AblationSummary> summarize_ablation(const std::vector<AblationRow>& rows) {
  std::vector<AblationSummary> out;
  for (const auto& variant : ablation_variants()) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r.variant == variant) {
        sum += r.test_acc;
        ++n;
      }
    }
    if (n > 0) out.push_back({variant, sum / static_cast<double>(n), 0.0});
  }
  double full = 0.0;
  for (const auto& a : out) {
    if (a.variant == "full") full = a.mean_test_acc;
  }
  for (auto& a : out) a.delta_pp = 100.0 * (full - a.mean_test_acc);
  return out;
}

}  // namespace waveformer
