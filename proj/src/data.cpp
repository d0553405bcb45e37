#include "waveformer/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "waveformer/error.hpp"

namespace waveformer {

namespace fs = std::filesystem;

namespace {

constexpr double kStdFloor = 1e-8;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_float32(const std::string& precision) { return precision == "float32"; }

void check_precision(const std::string& precision) {
  if (precision != "float32" && precision != "float64") {
    fail(ErrorKind::parse, "precision must be float32 or float64, got '" + precision + "'");
  }
}

// Decimal with optional exponent; float32 text is parsed at single precision.
bool parse_real(std::string_view text, bool single, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  if (single) {
    float f = 0.0f;
    auto res = std::from_chars(first, last, f);
    if (res.ec != std::errc() || res.ptr != last) return false;
    out = f;
  } else {
    auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || res.ptr != last) return false;
  }
  return std::isfinite(out);
}

bool parse_index(std::string_view text, long& out) {
  const std::string t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

std::string format_real(double v, bool single) {
  char buf[64];
  std::to_chars_result res = single ? std::to_chars(buf, buf + sizeof buf, static_cast<float>(v))
                                    : std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::not_found, "file not found: " + path.string());
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::span<const double> SeriesDataset::sample(std::size_t i) const {
  if (i >= size()) {
    fail(ErrorKind::bounds, "sample index " + std::to_string(i) + " out of range (dataset has " +
                                std::to_string(size()) + " samples)");
  }
  return std::span<const double>(values).subspan(i * channels * length, channels * length);
}

void SeriesDataset::validate() const {
  if (channels == 0 || length == 0) {
    fail(ErrorKind::integrity, "dataset '" + name + "' has an empty channel or length axis");
  }
  if (values.size() != labels.size() * channels * length) {
    fail(ErrorKind::integrity, "dataset '" + name + "' value count does not match its shape");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::label_range, "dataset '" + name + "' has label " + std::to_string(y) +
                                       " outside [0, " + std::to_string(classes) + ")");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorKind::integrity, "dataset '" + name + "' has non-finite values");
  }
}

template <typename T>
Tensor<T> SeriesDataset::sample_tensor(std::size_t i) const {
  auto s = sample(i);
  return Tensor<T>::from({channels, length}, std::vector<T>(s.begin(), s.end()));
}

template Tensor<float> SeriesDataset::sample_tensor<float>(std::size_t) const;
template Tensor<double> SeriesDataset::sample_tensor<double>(std::size_t) const;

SeriesDataset load_dataset_csv(const fs::path& csv, const std::string& name, std::size_t channels,
                               std::size_t length, std::size_t classes,
                               const std::string& precision, const std::string& split_name) {
  check_precision(precision);
  const bool single = is_float32(precision);
  auto in = open_input(csv);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail(ErrorKind::parse, csv.string() + ": empty file");
  ++line_no;
  {
    const std::string header = trim(line);
    const auto cols = split(header, ',');
    bool ok = cols.size() == 3 + length && trim(cols[0]) == "sample" &&
              trim(cols[1]) == "channel" && trim(cols[2]) == "label";
    for (std::size_t t = 0; ok && t < length; ++t) ok = trim(cols[3 + t]) == "t" + std::to_string(t);
    if (!ok) {
      fail(ErrorKind::parse, csv.string() + ":1: header must be sample,channel,label,t0,...,t" +
                                 std::to_string(length - 1));
    }
  }

  struct Row {
    long label;
    std::vector<double> values;
  };
  std::map<std::pair<long, long>, Row> rows;
  long max_sample = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cols = split(t, ',');
    const std::string where = csv.string() + ":" + std::to_string(line_no);
    if (cols.size() != 3 + length) {
      fail(ErrorKind::parse, where + ": expected " + std::to_string(3 + length) +
                                 " fields, found " + std::to_string(cols.size()));
    }
    long sample = 0, channel = 0, label = 0;
    if (!parse_index(cols[0], sample) || !parse_index(cols[1], channel) ||
        !parse_index(cols[2], label) || sample < 0 || channel < 0) {
      fail(ErrorKind::parse, where + ": malformed sample/channel/label fields");
    }
    if (static_cast<std::size_t>(channel) >= channels) {
      fail(ErrorKind::integrity, where + ": channel " + std::to_string(channel) +
                                     " outside [0, " + std::to_string(channels) + ")");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      fail(ErrorKind::label_range, where + ": label " + std::to_string(label) + " outside [0, " +
                                       std::to_string(classes) + ")");
    }
    Row row{label, std::vector<double>(length)};
    for (std::size_t k = 0; k < length; ++k) {
      if (!parse_real(cols[3 + k], single, row.values[k])) {
        fail(ErrorKind::parse, where + ": field t" + std::to_string(k) + " is not a finite number");
      }
    }
    if (!rows.emplace(std::make_pair(sample, channel), std::move(row)).second) {
      fail(ErrorKind::integrity, where + ": duplicate row for sample " + std::to_string(sample) +
                                     " channel " + std::to_string(channel));
    }
    max_sample = std::max(max_sample, sample);
  }

  const std::size_t n = static_cast<std::size_t>(max_sample + 1);
  if (rows.size() != n * channels) {
    fail(ErrorKind::integrity, csv.string() + ": " + std::to_string(rows.size()) +
                                   " rows, expected samples x channels = " +
                                   std::to_string(n * channels));
  }
  SeriesDataset ds;
  ds.name = name;
  ds.split = split_name;
  ds.precision = precision;
  ds.channels = channels;
  ds.length = length;
  ds.classes = classes;
  ds.values.resize(n * channels * length);
  ds.labels.resize(n);
  for (const auto& [key, row] : rows) {
    const auto [s, c] = key;
    if (c == 0) {
      ds.labels[s] = static_cast<int>(row.label);
    } else if (rows.at({s, 0}).label != row.label) {
      fail(ErrorKind::integrity, csv.string() + ": sample " + std::to_string(s) +
                                     " has conflicting labels across channel rows");
    }
    std::copy(row.values.begin(), row.values.end(),
              ds.values.begin() + static_cast<std::ptrdiff_t>((s * channels + c) * length));
  }
  return ds;
}

DatasetPair load_dataset_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::not_found, "dataset directory not found: " + dir.string());
  const auto meta_path = dir / "meta.json";
  auto in = open_input(meta_path);
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, meta_path.string() + ": " + e.what());
  }
  std::string name, precision;
  std::size_t c = 0, l = 0, k = 0;
  try {
    name = meta.at("name").get<std::string>();
    c = meta.at("C").get<std::size_t>();
    l = meta.at("L").get<std::size_t>();
    k = meta.at("K").get<std::size_t>();
    precision = meta.value("precision", std::string("float64"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, meta_path.string() + ": " + e.what());
  }
  if (c == 0 || l == 0 || k == 0) fail(ErrorKind::parse, meta_path.string() + ": C, L, K must be positive");
  DatasetPair out;
  out.train = load_dataset_csv(dir / "train.csv", name, c, l, k, precision, "train");
  out.test = load_dataset_csv(dir / "test.csv", name, c, l, k, precision, "test");
  return out;
}

void write_dataset_csv(const fs::path& csv, const SeriesDataset& ds) {
  const bool single = is_float32(ds.precision);
  auto out = open_output(csv);
  out << "sample,channel,label";
  for (std::size_t t = 0; t < ds.length; ++t) out << ",t" << t;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.channels; ++c) {
      out << i << ',' << c << ',' << ds.labels[i];
      for (std::size_t t = 0; t < ds.length; ++t) out << ',' << format_real(ds.at(i, c, t), single);
      out << '\n';
    }
  }
  if (!out) fail(ErrorKind::io, "failed writing " + csv.string());
}

void write_dataset_dir(const fs::path& dir, const DatasetPair& data) {
  fs::create_directories(dir);
  nlohmann::ordered_json meta{{"name", data.train.name},         {"C", data.train.channels},
                              {"L", data.train.length},          {"K", data.train.classes},
                              {"precision", data.train.precision}};
  auto out = open_output(dir / "meta.json");
  out << meta.dump(2) << '\n';
  write_dataset_csv(dir / "train.csv", data.train);
  write_dataset_csv(dir / "test.csv", data.test);
}

SeriesDataset parse_ts_file(const fs::path& path) { return parse_ts_file(path, {}); }

SeriesDataset parse_ts_file(const fs::path& path, const std::vector<std::string>& class_order) {
  auto in = open_input(path);
  SeriesDataset ds;
  ds.name = path.stem().string();
  ds.split = lower(path.stem().string()).find("test") != std::string::npos ? "test" : "train";
  ds.precision = "float64";
  std::vector<std::string> classes;
  std::size_t declared_dims = 0, declared_len = 0;
  bool in_data = false;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> cases;
  std::vector<std::string> case_labels;

  auto unsupported = [&](const std::string& what) {
    fail(ErrorKind::unsupported_feature,
         path.string() + ":" + std::to_string(line_no) + ": " + what +
             " (only equal-length, fully observed, labelled series are supported)");
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!in_data) {
      if (t[0] != '@') fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": expected a @tag");
      std::istringstream ss(t);
      std::string tag;
      ss >> tag;
      tag = lower(tag);
      std::vector<std::string> args;
      for (std::string a; ss >> a;) args.push_back(a);
      auto flag = [&]() { return !args.empty() && lower(args[0]) == "true"; };
      if (tag == "@problemname" && !args.empty()) {
        ds.name = args[0];
      } else if (tag == "@timestamps") {
        if (flag()) unsupported("timestamped series");
      } else if (tag == "@equallength") {
        if (!flag()) unsupported("unequal-length series");
      } else if (tag == "@dimensions" && !args.empty()) {
        declared_dims = std::stoul(args[0]);
      } else if (tag == "@serieslength" && !args.empty()) {
        declared_len = std::stoul(args[0]);
      } else if (tag == "@classlabel") {
        if (!flag()) unsupported("unlabelled series");
        classes.assign(args.begin() + 1, args.end());
      } else if (tag == "@targetlabel") {
        if (flag()) unsupported("regression targets");
      } else if (tag == "@data") {
        in_data = true;
      }
      continue;
    }
    const auto dims = split(t, ':');
    if (dims.size() < 2) fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": case has no label");
    std::vector<double> values;
    std::size_t case_len = 0;
    for (std::size_t d = 0; d + 1 < dims.size(); ++d) {
      const auto fields = split(dims[d], ',');
      if (d == 0) case_len = fields.size();
      if (fields.size() != case_len) unsupported("unequal dimension lengths within a case");
      for (auto f : fields) {
        const std::string v = trim(f);
        if (v == "?" || lower(v) == "nan") unsupported("missing values");
        double x = 0.0;
        if (!parse_real(v, false, x)) {
          fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": bad value '" + v + "'");
        }
        values.push_back(x);
      }
    }
    const std::size_t c = dims.size() - 1;
    if (cases.empty()) {
      ds.channels = c;
      ds.length = case_len;
    } else if (c != ds.channels) {
      unsupported("cases with different dimension counts");
    } else if (case_len != ds.length) {
      unsupported("unequal series lengths");
    }
    cases.push_back(std::move(values));
    case_labels.push_back(trim(dims.back()));
  }
  if (!in_data || cases.empty()) fail(ErrorKind::parse, path.string() + ": no @data section or no cases");
  if (declared_dims && declared_dims != ds.channels) {
    fail(ErrorKind::integrity, path.string() + ": @dimensions " + std::to_string(declared_dims) +
                                   " but cases have " + std::to_string(ds.channels));
  }
  if (declared_len && declared_len != ds.length) {
    fail(ErrorKind::integrity, path.string() + ": @seriesLength " + std::to_string(declared_len) +
                                   " but cases have " + std::to_string(ds.length));
  }
  if (!class_order.empty()) classes = class_order;
  if (classes.empty()) unsupported("missing @classLabel list");
  ds.class_names = classes;
  ds.classes = classes.size();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto it = std::find(classes.begin(), classes.end(), case_labels[i]);
    if (it == classes.end()) {
      fail(ErrorKind::label_range, path.string() + ": case " + std::to_string(i) + " has label '" +
                                       case_labels[i] + "' not declared in @classLabel");
    }
    ds.labels.push_back(static_cast<int>(it - classes.begin()));
    ds.values.insert(ds.values.end(), cases[i].begin(), cases[i].end());
  }
  return ds;
}

void write_ts_file(const fs::path& path, const SeriesDataset& ds) {
  const bool single = is_float32(ds.precision);
  auto out = open_output(path);
  out << "@problemName " << ds.name << '\n'
      << "@timeStamps false\n@missing false\n"
      << "@univariate " << (ds.channels == 1 ? "true" : "false") << '\n'
      << "@dimensions " << ds.channels << '\n'
      << "@equalLength true\n@seriesLength " << ds.length << '\n'
      << "@classLabel true";
  for (std::size_t k = 0; k < ds.classes; ++k) {
    out << ' ' << (k < ds.class_names.size() ? ds.class_names[k] : std::to_string(k));
  }
  out << "\n@data\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c = 0; c < ds.channels; ++c) {
      for (std::size_t t = 0; t < ds.length; ++t) {
        if (t) out << ',';
        out << format_real(ds.at(i, c, t), single);
      }
      out << ':';
    }
    const auto k = static_cast<std::size_t>(ds.labels[i]);
    out << (k < ds.class_names.size() ? ds.class_names[k] : std::to_string(k)) << '\n';
  }
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

SeriesDataset apply_stats(const SeriesDataset& ds, const ChannelStats& stats) {
  if (ds.stats) fail(ErrorKind::idempotence, "dataset '" + ds.name + "' is already standardized");
  if (stats.mean.size() != ds.channels || stats.std.size() != ds.channels) {
    fail(ErrorKind::compatibility, "normalization stats cover " + std::to_string(stats.mean.size()) +
                                       " channels, dataset has " + std::to_string(ds.channels));
  }
  SeriesDataset out = ds;
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t c = 0; c < out.channels; ++c)
      for (std::size_t t = 0; t < out.length; ++t) {
        auto& v = out.values[(i * out.channels + c) * out.length + t];
        v = (v - stats.mean[c]) / stats.std[c];
      }
  out.stats = stats;
  out.precision = "float64";
  return out;
}

DatasetPair standardize(const SeriesDataset& train, const SeriesDataset& test) {
  if (train.stats || test.stats) {
    fail(ErrorKind::idempotence, "standardize: dataset already standardized; refusing to normalize twice");
  }
  if (train.channels != test.channels) {
    fail(ErrorKind::compatibility, "standardize: train has " + std::to_string(train.channels) +
                                       " channels, test has " + std::to_string(test.channels));
  }
  ChannelStats stats;
  const std::size_t per_channel = train.size() * train.length;
  for (std::size_t c = 0; c < train.channels; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i)
      for (std::size_t t = 0; t < train.length; ++t) mean += train.at(i, c, t);
    mean /= static_cast<double>(per_channel);
    double var = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i)
      for (std::size_t t = 0; t < train.length; ++t) {
        const double d = train.at(i, c, t) - mean;
        var += d * d;
      }
    double sd = std::sqrt(var / static_cast<double>(per_channel));
    if (!(sd >= kStdFloor)) {
      std::cerr << "warning: channel " << c << " of '" << train.name
                << "' is constant; std floored at " << kStdFloor << '\n';
      sd = kStdFloor;
    }
    stats.mean.push_back(mean);
    stats.std.push_back(sd);
  }
  return {apply_stats(train, stats), apply_stats(test, stats)};
}

SeriesDataset subset(const SeriesDataset& ds, const std::vector<std::size_t>& indices) {
  SeriesDataset out = ds;
  out.values.clear();
  out.labels.clear();
  for (auto i : indices) {
    auto s = ds.sample(i);
    out.values.insert(out.values.end(), s.begin(), s.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

DatasetPair stratified_split(const SeriesDataset& ds, double ratio, std::uint64_t seed) {
  if (ratio < 0.0 || ratio >= 1.0) fail(ErrorKind::config, "split ratio must lie in [0, 1)");
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> first, second;
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    auto take = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(members.size())));
    if (ratio > 0.0 && take == 0 && members.size() >= 2) take = 1;
    second.insert(second.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    first.insert(first.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  DatasetPair out{subset(ds, first), subset(ds, second)};
  out.test.split = "val";
  return out;
}

SynthTask parse_synth_task(const std::string& name) {
  if (name == "freq_pair") return SynthTask::freq_pair;
  if (name == "chirp_vs_tone") return SynthTask::chirp_vs_tone;
  if (name == "phase_shift") return SynthTask::phase_shift;
  fail(ErrorKind::config, "synth task must be freq_pair, chirp_vs_tone or phase_shift, got '" + name + "'");
}

std::string synth_task_name(SynthTask task) {
  switch (task) {
    case SynthTask::freq_pair: return "freq_pair";
    case SynthTask::chirp_vs_tone: return "chirp_vs_tone";
    case SynthTask::phase_shift: return "phase_shift";
  }
  return "freq_pair";
}

std::size_t SynthSpec::num_classes() const {
  switch (task) {
    case SynthTask::freq_pair: return freqs.size();
    case SynthTask::chirp_vs_tone: return 2;
    case SynthTask::phase_shift: return classes;
  }
  return 0;
}

void SynthSpec::validate() const {
  if (length < 2 || channels == 0) fail(ErrorKind::spec, "synth: need L >= 2 and C >= 1");
  if (samples < 2) fail(ErrorKind::spec, "synth: need at least 2 samples");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) fail(ErrorKind::spec, "synth: noise_std must be finite and >= 0");
  if (num_classes() < 2) fail(ErrorKind::spec, "synth: need at least 2 classes");
  if (task == SynthTask::phase_shift && channels < 2) {
    fail(ErrorKind::spec, "synth: phase_shift needs C >= 2 channels");
  }
  const double nyquist = static_cast<double>(length) / 2.0;
  std::vector<double> seen;
  for (double f : freqs) {
    if (!(f > 0.0) || f >= nyquist) {
      fail(ErrorKind::spec, "synth: frequency " + format_real(f, false) +
                                " cycles must lie in (0, " + format_real(nyquist, false) +
                                ") below Nyquist");
    }
    if (std::find(seen.begin(), seen.end(), f) != seen.end()) {
      fail(ErrorKind::spec, "synth: class frequencies must be distinct");
    }
    seen.push_back(f);
  }
  if (task != SynthTask::freq_pair && freqs.empty()) fail(ErrorKind::spec, "synth: need a base frequency");
}

DatasetPair synth_freq_task(const SynthSpec& spec) {
  spec.validate();
  const std::size_t k_count = spec.num_classes();
  const std::size_t c_count = spec.channels;
  const std::size_t len = spec.length;
  const double two_pi = 2.0 * std::numbers::pi;
  const double L = static_cast<double>(len);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
  std::normal_distribution<double> noise(0.0, 1.0);

  DatasetPair out;
  for (SeriesDataset* ds : {&out.train, &out.test}) {
    ds->name = "synth_" + synth_task_name(spec.task);
    ds->precision = "float64";
    ds->channels = c_count;
    ds->length = len;
    ds->classes = k_count;
  }
  out.train.split = "train";
  out.test.split = "test";

  std::vector<double> sample(c_count * len);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::size_t k = i % k_count;
    // phase_shift shares one random phase across channels so the lag stays class-defined.
    const double shared = spec.task == SynthTask::phase_shift ? phase_dist(rng) : 0.0;
    for (std::size_t c = 0; c < c_count; ++c) {
      const double phi = spec.task == SynthTask::phase_shift ? shared : phase_dist(rng);
      const double f0 = spec.freqs.front();
      for (std::size_t t = 0; t < len; ++t) {
        const double u = static_cast<double>(t) / L;
        double v = 0.0;
        switch (spec.task) {
          case SynthTask::freq_pair:
            v = std::sin(two_pi * spec.freqs[k] * u + phi);
            break;
          case SynthTask::chirp_vs_tone: {
            // Class 1 sweeps linearly from f0 to 2 f0, capped below Nyquist.
            const double f1 = std::min(2.0 * f0, L / 2.0 - 1.0);
            v = k == 0 ? std::sin(two_pi * f0 * u + phi)
                       : std::sin(two_pi * (f0 * u + 0.5 * (f1 - f0) * u * u) + phi);
            break;
          }
          case SynthTask::phase_shift: {
            const double lag = c == 0 ? 0.0
                                      : std::numbers::pi * static_cast<double>(k) /
                                            static_cast<double>(k_count);
            v = std::sin(two_pi * f0 * u + phi + lag);
            break;
          }
        }
        sample[c * len + t] = v;
      }
    }
    if (spec.noise_std > 0.0) {
      for (auto& v : sample) v += spec.noise_std * noise(rng);
    }
    SeriesDataset& dst = (i / k_count) % 2 == 0 ? out.train : out.test;
    dst.values.insert(dst.values.end(), sample.begin(), sample.end());
    dst.labels.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace waveformer
