#include "waveformer/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "waveformer/checkpoint.hpp"
#include "waveformer/error.hpp"
#include "waveformer/pipeline.hpp"
#include "waveformer/settings.hpp"

namespace waveformer {

namespace {

struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> overrides;
};

void add_config_args(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.config, "Run configuration file ([section] key = value)");
  cmd->add_option("-s,--set", a.sets, "Override a config key: section.key=value (repeatable)");
  cmd->add_option("overrides", a.overrides, "Overrides as section.key=value");
}

Settings resolve_settings(const ConfigArgs& a) {
  Settings s = a.config.empty() ? Settings{} : load_settings(a.config);
  for (const auto& o : a.sets) apply_override(s, o);
  for (const auto& o : a.overrides) apply_override(s, o);
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  if (!f) fail(ErrorKind::io, "failed writing " + path.string());
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int cmd_train(const ConfigArgs& a, const std::string& out_flag, std::ostream& out) {
  Settings s = resolve_settings(a);
  if (!out_flag.empty()) s.run.out_dir = out_flag;
  s.validate();
  const std::filesystem::path dir = s.run.out_dir;
  const auto r = run_training(s, dir);
  out << "run " << r.run_id << ": best epoch " << r.train.best_epoch << " of " << r.train.epochs.size()
      << ", train_acc " << fixed(r.train_acc, 4) << ", test_acc " << fixed(r.test.accuracy, 4) << '\n'
      << "wrote " << (dir / "metrics.csv").string() << ", " << (dir / "model.ckpt").string() << ", "
      << (dir / "summary.json").string() << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string ts;
  std::string split = "test";
  std::string out;
  ConfigArgs config;
};

SeriesDataset eval_dataset(const EvalArgs& a) {
  if (!a.ts.empty()) return parse_ts_file(a.ts);
  DatasetPair d;
  if (!a.data_dir.empty()) {
    d = load_dataset_dir(a.data_dir);
  } else {
    d = load_run_data(resolve_settings(a.config));
  }
  return a.split == "train" ? d.train : d.test;
}

template <typename T>
EvalResult eval_typed(const std::filesystem::path& ckpt, const SeriesDataset& raw) {
  CheckpointInfo info;
  auto model = load_checkpoint<T>(ckpt, &info);
  const auto& mc = model->config();
  if (raw.channels != mc.channels || raw.length != mc.length) {
    fail(ErrorKind::compatibility, "checkpoint was trained on (C=" + std::to_string(mc.channels) +
                                       ", L=" + std::to_string(mc.length) + ") but dataset '" +
                                       raw.name + "' is (C=" + std::to_string(raw.channels) +
                                       ", L=" + std::to_string(raw.length) + ")");
  }
  const SeriesDataset ds = info.stats ? apply_stats(raw, *info.stats) : raw;
  return evaluate(*model, ds);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto raw = eval_dataset(a);
  raw.validate();
  const auto info = read_checkpoint_info(a.checkpoint);
  const EvalResult r = info.precision == "float64" ? eval_typed<double>(a.checkpoint, raw)
                                                  : eval_typed<float>(a.checkpoint, raw);
  std::vector<std::size_t> counts(r.confusion.size(), 0);
  for (int y : raw.labels) ++counts[static_cast<std::size_t>(y)];
  nlohmann::ordered_json j;
  j["checkpoint"] = a.checkpoint;
  j["dataset"] = raw.name;
  j["split"] = raw.split;
  j["samples"] = raw.size();
  j["accuracy"] = r.accuracy;
  j["loss"] = r.loss;
  j["class_counts"] = counts;
  j["confusion"] = r.confusion;
  const std::filesystem::path dir = a.out.empty() ? std::filesystem::path(a.checkpoint).parent_path() : std::filesystem::path(a.out);
  write_text(dir / "eval.json", j.dump(2) + "\n");

  out << "accuracy " << fixed(r.accuracy, 4) << " on " << raw.size() << " samples\n";
  out << "confusion (rows true, columns predicted):\n";
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    out << "  " << i << ":";
    for (auto c : r.confusion[i]) out << ' ' << c;
    out << '\n';
  }
  out << "wrote " << (dir / "eval.json").string() << '\n';
  return 0;
}

int cmd_ablate(const ConfigArgs& a, const std::string& out_flag, std::ostream& out) {
  Settings s = resolve_settings(a);
  if (!out_flag.empty()) s.run.out_dir = out_flag;
  s.validate();
  const std::filesystem::path dir = s.run.out_dir;
  const auto rows = run_ablation(s, dir);
  out << "variant            mean_test_acc  delta_pp\n";
  for (const auto& v : summarize_ablation(rows)) {
    out << std::left << std::setw(19) << v.variant << std::setw(15) << fixed(v.mean_test_acc, 4)
        << fixed(v.delta_pp, 2) << '\n';
  }
  out << "wrote " << (dir / "ablation.csv").string() << ", " << (dir / "ablation_summary.json").string()
      << '\n';
  return 0;
}

struct InspectArgs {
  EvalArgs source;
  std::size_t index = 0;
  std::string wavelet = "haar";
  std::size_t levels = 0;
  std::string out = "inspect";
};

template <typename T>
std::string positional_csv(const std::string& ckpt, const SeriesDataset& ds, std::span<const double> sample) {
  CheckpointInfo info;
  auto model = load_checkpoint<T>(ckpt, &info);
  std::vector<T> values(sample.size());
  for (std::size_t c = 0; c < ds.channels; ++c) {
    for (std::size_t t = 0; t < ds.length; ++t) {
      double v = sample[c * ds.length + t];
      if (info.stats) v = (v - info.stats->mean[c]) / info.stats->std[c];
      values[c * ds.length + t] = static_cast<T>(v);
    }
  }
  NoGradGuard guard;
  const auto field = model->positional_field(Tensor<T>::from({ds.channels, ds.length}, values));
  std::ostringstream csv;
  csv << "token,dim,value\n";
  if (field.defined()) {
    for (std::size_t i = 0; i < field.dim(0); ++i)
      for (std::size_t j = 0; j < field.dim(1); ++j)
        csv << i << ',' << j << ',' << nlohmann::json(field.data()[i * field.dim(1) + j]).dump() << '\n';
  }
  return csv.str();
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const auto ds = eval_dataset(a.source);
  const auto sample = ds.sample(a.index);
  const auto filters = wavelet_filters(parse_wavelet_family(a.wavelet));
  const std::size_t max_j = max_dwt_levels(ds.length, filters.taps());
  const std::size_t levels = a.levels == 0 ? std::max<std::size_t>(1, std::min<std::size_t>(3, max_j)) : a.levels;

  auto x = Tensor<double>::from({ds.channels, ds.length}, std::vector<double>(sample.begin(), sample.end()));
  NoGradGuard guard;
  const auto pyramid = dwt_multi(x, levels, filters);
  const auto rec = idwt_multi(pyramid, filters);
  double err = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) err = std::max(err, std::abs(rec.data()[i] - sample[i]));

  const std::filesystem::path dir = a.out;
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "coefficients.csv", std::ios::binary | std::ios::trunc);
    write_coefficients_csv(f, pyramid);
    if (!f) fail(ErrorKind::io, "failed writing coefficients.csv");
  }
  std::ostringstream line;
  line << "reconstruction_max_abs_error=" << std::scientific << std::setprecision(6) << err;
  write_text(dir / "reconstruction.txt", line.str() + "\n");

  if (!a.source.checkpoint.empty()) {
    const bool wide = read_checkpoint_info(a.source.checkpoint).precision == "float64";
    write_text(dir / "positional.csv", wide ? positional_csv<double>(a.source.checkpoint, ds, sample)
                                            : positional_csv<float>(a.source.checkpoint, ds, sample));
  }

  out << line.str() << '\n'
      << "sample " << a.index << " of '" << ds.name << "' (" << ds.split << "), " << a.wavelet << ", J=" << levels
      << ", wrote " << (dir / "coefficients.csv").string() << '\n';
  return 0;
}

int cmd_synth(const ConfigArgs& a, const std::string& out_dir, const std::string& format, std::ostream& out) {
  Settings s = resolve_settings(a);
  const auto d = synth_freq_task(s.synth);
  const std::filesystem::path dir = out_dir;
  if (format == "ts") {
    write_ts_file(dir / (d.train.name + "_TRAIN.ts"), d.train);
    write_ts_file(dir / (d.train.name + "_TEST.ts"), d.test);
  } else {
    write_dataset_dir(dir, d);
  }
  out << "wrote " << d.train.size() << " train / " << d.test.size() << " test samples (C=" << d.train.channels
      << ", L=" << d.train.length << ", K=" << d.train.classes << ") to " << dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"WaveFormer: wavelet-enhanced transformer for multivariate time-series classification",
               "waveformer"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Train a model; writes metrics.csv, model.ckpt, summary.json");
  add_config_args(train, train_args);
  train->add_option("-o,--out", train_out, "Output directory (overrides run.out_dir)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; writes eval.json");
  eval->add_option("-k,--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval->add_option("-d,--data-dir", eval_args.data_dir, "Dataset directory (meta.json, train.csv, test.csv)");
  eval->add_option("--ts", eval_args.ts, "A .ts file to evaluate on");
  eval->add_option("--split", eval_args.split, "Split of the dataset directory or config data")
      ->check(CLI::IsMember({"train", "test"}));
  eval->add_option("-o,--out", eval_args.out, "Output directory (default: the checkpoint's directory)");
  add_config_args(eval, eval_args.config);

  ConfigArgs ablate_args;
  std::string ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Full model vs one-component-removed variants over ablate.seeds");
  add_config_args(ablate, ablate_args);
  ablate->add_option("-o,--out", ablate_out, "Output directory (overrides run.out_dir)");

  InspectArgs inspect_args;
  auto* inspect = app.add_subcommand("inspect", "Dump one sample's wavelet coefficients and reconstruction error");
  inspect->add_option("-d,--data-dir", inspect_args.source.data_dir, "Dataset directory");
  inspect->add_option("--ts", inspect_args.source.ts, "A .ts file");
  inspect->add_option("--split", inspect_args.source.split, "Split to read the sample from")
      ->check(CLI::IsMember({"train", "test"}));
  inspect->add_option("-i,--index", inspect_args.index, "Sample index");
  inspect->add_option("-w,--wavelet", inspect_args.wavelet, "Wavelet family: haar, db2, db4");
  inspect->add_option("-J,--levels", inspect_args.levels, "Decomposition levels (0: min(3, max feasible))");
  inspect->add_option("-k,--checkpoint", inspect_args.source.checkpoint,
                      "Also dump the model's positional field to positional.csv");
  inspect->add_option("-o,--out", inspect_args.out, "Output directory");
  add_config_args(inspect, inspect_args.source.config);

  ConfigArgs synth_args;
  std::string synth_out = "data/synth";
  std::string synth_format = "dir";
  auto* synth = app.add_subcommand("synth", "Write the synthetic task described by the [synth] section");
  add_config_args(synth, synth_args);
  synth->add_option("-o,--out", synth_out, "Output directory");
  synth->add_option("-f,--format", synth_format, "dir (meta.json + CSV) or ts")->check(CLI::IsMember({"dir", "ts"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun 'waveformer --help' or 'waveformer <command> --help'\n";
    return 2;
  }

  try {
    if (*train) return cmd_train(train_args, train_out, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*ablate) return cmd_ablate(ablate_args, ablate_out, out);
    if (*inspect) return cmd_inspect(inspect_args, out);
    if (*synth) return cmd_synth(synth_args, synth_out, synth_format, out);
  } catch (const Error& e) {
    err << "error [" << error_kind_name(e.kind()) << "]: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error [io]: " << e.what() << '\n';
    return 3;
  }
  return 2;
}

}  // namespace waveformer
