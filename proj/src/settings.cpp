#include "waveformer/settings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "waveformer/error.hpp"

namespace waveformer {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  return t;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& want) {
  fail(ErrorKind::config, "'" + key + "' expects " + want + ", got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

template <typename U>
U to_unsigned(const std::string& key, const std::string& v) {
  U out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  if (!v.empty() && v[0] == '+') ++first;
  auto res = std::from_chars(first, v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::vector<std::string> to_list(const std::string& v) {
  std::string t = trim(v);
  if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(t);
  for (std::string item; std::getline(ss, item, ',');) {
    item = unquote(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename U>
std::string num_u(U v) {
  return std::to_string(v);
}

std::string flag(bool b) { return b ? "true" : "false"; }

template <typename V>
std::string join(const std::vector<V>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<V>) {
      out += num(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

const char* source_name(DataSource s) {
  switch (s) {
    case DataSource::synth: return "synth";
    case DataSource::dir: return "dir";
    case DataSource::ts: return "ts";
  }
  return "synth";
}

struct Entry {
  std::string key;
  std::function<void(Settings&, const std::string&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

#define WF_SIZE(field) \
  [](Settings& s, const std::string& k, const std::string& v) { s.field = to_unsigned<std::size_t>(k, v); }, \
  [](const Settings& s) { return num_u(s.field); }
#define WF_U64(field) \
  [](Settings& s, const std::string& k, const std::string& v) { s.field = to_unsigned<std::uint64_t>(k, v); }, \
  [](const Settings& s) { return num_u(s.field); }
#define WF_REAL(field) \
  [](Settings& s, const std::string& k, const std::string& v) { s.field = to_double(k, v); }, \
  [](const Settings& s) { return num(s.field); }
#define WF_BOOL(field) \
  [](Settings& s, const std::string& k, const std::string& v) { s.field = to_bool(k, v); }, \
  [](const Settings& s) { return flag(s.field); }
#define WF_INT(field) \
  [](Settings& s, const std::string& k, const std::string& v) { s.field = to_int(k, v); }, \
  [](const Settings& s) { return std::to_string(s.field); }
#define WF_TEXT(field) \
  [](Settings& s, const std::string&, const std::string& v) { s.field = v; }, \
  [](const Settings& s) { return s.field; }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"run.seed", WF_U64(run.seed)},
      {"run.out_dir", WF_TEXT(run.out_dir)},
      {"run.precision",
       [](Settings& s, const std::string& k, const std::string& v) {
         if (v != "float32" && v != "float64") bad_value(k, v, "float32 or float64");
         s.run.precision = v;
       },
       [](const Settings& s) { return s.run.precision; }},
      {"run.record_wall_time", WF_BOOL(run.record_wall_time)},

      {"data.source",
       [](Settings& s, const std::string& k, const std::string& v) {
         if (v == "synth") s.data.source = DataSource::synth;
         else if (v == "dir") s.data.source = DataSource::dir;
         else if (v == "ts") s.data.source = DataSource::ts;
         else bad_value(k, v, "synth, dir or ts");
       },
       [](const Settings& s) { return std::string(source_name(s.data.source)); }},
      {"data.path", WF_TEXT(data.path)},
      {"data.train_ts", WF_TEXT(data.train_ts)},
      {"data.test_ts", WF_TEXT(data.test_ts)},
      {"data.standardize", WF_BOOL(data.standardize)},

      {"synth.task",
       [](Settings& s, const std::string&, const std::string& v) { s.synth.task = parse_synth_task(v); },
       [](const Settings& s) { return synth_task_name(s.synth.task); }},
      {"synth.length", WF_SIZE(synth.length)},
      {"synth.channels", WF_SIZE(synth.channels)},
      {"synth.samples", WF_SIZE(synth.samples)},
      {"synth.noise_std", WF_REAL(synth.noise_std)},
      {"synth.seed", WF_U64(synth.seed)},
      {"synth.freqs",
       [](Settings& s, const std::string& k, const std::string& v) {
         s.synth.freqs.clear();
         for (const auto& item : to_list(v)) s.synth.freqs.push_back(to_double(k, item));
       },
       [](const Settings& s) { return join(s.synth.freqs); }},
      {"synth.classes", WF_SIZE(synth.classes)},

      {"model.patch_size", WF_SIZE(model.patch_size)},
      {"model.embed_dim", WF_SIZE(model.embed_dim)},
      {"model.heads", WF_SIZE(model.heads)},
      {"model.layers", WF_SIZE(model.layers)},
      {"model.ffn_multiplier", WF_SIZE(model.ffn_multiplier)},
      {"model.dropout", WF_REAL(model.dropout)},
      {"model.wavelet",
       [](Settings& s, const std::string&, const std::string& v) { s.model.family = parse_wavelet_family(v); },
       [](const Settings& s) { return std::string(wavelet_family_name(s.model.family)); }},
      {"model.alpha_init", WF_REAL(model.alpha_init)},
      {"model.dywpe_levels", WF_SIZE(model.dywpe_levels)},
      {"model.dywpe_resolution",
       [](Settings& s, const std::string& k, const std::string& v) {
         if (v == "token") s.model.dywpe_resolution = DywpeResolution::token;
         else if (v == "signal") s.model.dywpe_resolution = DywpeResolution::signal;
         else bad_value(k, v, "token or signal");
       },
       [](const Settings& s) {
         return std::string(s.model.dywpe_resolution == DywpeResolution::token ? "token" : "signal");
       }},
      {"model.use_wavelet_embed", WF_BOOL(model.use_wavelet_embed)},
      {"model.use_dywpe", WF_BOOL(model.use_dywpe)},
      {"model.use_rpe", WF_BOOL(model.use_rpe)},
      {"model.position_fallback",
       [](Settings& s, const std::string& k, const std::string& v) {
         if (v == "learned") s.model.position_fallback = PositionFallback::learned;
         else if (v == "none") s.model.position_fallback = PositionFallback::none;
         else bad_value(k, v, "learned or none");
       },
       [](const Settings& s) {
         return std::string(s.model.position_fallback == PositionFallback::learned ? "learned" : "none");
       }},
      {"model.rpe_buckets", WF_INT(model.rpe_buckets)},
      {"model.rpe_max_distance", WF_INT(model.rpe_max_distance)},
      {"model.rpe_tie_heads", WF_BOOL(model.rpe_tie_heads)},
      {"model.ln_eps", WF_REAL(model.ln_eps)},

      {"train.epochs", WF_SIZE(train.epochs)},
      {"train.batch_size", WF_SIZE(train.batch_size)},
      {"train.lr_max", WF_REAL(train.lr_max)},
      {"train.lr_min", WF_REAL(train.lr_min)},
      {"train.beta1", WF_REAL(train.beta1)},
      {"train.beta2", WF_REAL(train.beta2)},
      {"train.eps", WF_REAL(train.eps)},
      {"train.clip_norm", WF_REAL(train.clip_norm)},
      {"train.patience", WF_SIZE(train.patience)},
      {"train.monitor",
       [](Settings& s, const std::string&, const std::string& v) { s.train.monitor = parse_monitor(v); },
       [](const Settings& s) { return std::string(monitor_name(s.train.monitor)); }},
      {"train.val_ratio", WF_REAL(train.val_ratio)},

      {"ablate.seeds",
       [](Settings& s, const std::string& k, const std::string& v) {
         s.ablate.seeds.clear();
         for (const auto& item : to_list(v)) s.ablate.seeds.push_back(to_unsigned<std::uint64_t>(k, item));
       },
       [](const Settings& s) { return join(s.ablate.seeds); }},
  };
  return table;
}

#undef WF_SIZE
#undef WF_U64
#undef WF_REAL
#undef WF_BOOL
#undef WF_INT
#undef WF_TEXT

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries()) {
    if (e.key == key) return e;
  }
  std::string valid;
  for (const auto& e : entries()) valid += "\n  " + e.key;
  fail(ErrorKind::config, "unknown config key '" + key + "'; valid keys:" + valid);
}

}  // namespace

void Settings::set(const std::string& key, const std::string& value) {
  find_entry(key).set(*this, key, unquote(value));
}

std::string Settings::get(const std::string& key) const { return find_entry(key).get(*this); }

const std::vector<std::string>& Settings::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return names;
}

void Settings::validate() const {
  if (data.source == DataSource::synth) synth.validate();
  if (data.source == DataSource::dir && data.path.empty()) {
    fail(ErrorKind::config, "data.source = dir needs data.path");
  }
  if (data.source == DataSource::ts && (data.train_ts.empty() || data.test_ts.empty())) {
    fail(ErrorKind::config, "data.source = ts needs data.train_ts and data.test_ts");
  }
  if (ablate.seeds.empty()) fail(ErrorKind::config, "ablate.seeds must list at least one seed");
  train.validate();
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings s;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // '#' starts a comment unless it sits inside a quoted string.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorKind::config, where + "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::config, where + "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (section.empty()) fail(ErrorKind::config, where + "key '" + key + "' appears before any [section]");
    try {
      s.set(section + "." + key, t.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.kind(), where + e.what());
    }
  }
  return s;
}

Settings load_settings(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::config, "config file not found: " + path.string());
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path.string());
}

std::string format_settings(const Settings& s) {
  std::string out, section;
  for (const auto& e : entries()) {
    const auto dot = e.key.find('.');
    const std::string sec = e.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += e.key.substr(dot + 1) + " = " + e.get(s) + "\n";
  }
  return out;
}

void apply_override(Settings& s, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(ErrorKind::config, "override '" + assignment + "' must look like section.key=value");
  }
  s.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

nlohmann::ordered_json settings_to_json(const Settings& s) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& e : entries()) {
    const auto dot = e.key.find('.');
    const std::string v = e.get(s);
    nlohmann::ordered_json value = v;
    if (v == "true" || v == "false") {
      value = v == "true";
    } else if (!v.empty() && e.key != "run.out_dir" && e.key.rfind("data.", 0) != 0) {
      double d = 0.0;
      auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec == std::errc() && res.ptr == v.data() + v.size()) {
        value = v.find_first_of(".eE") == std::string::npos && v[0] != '-' ? nlohmann::ordered_json(std::stoull(v))
                                                                          : nlohmann::ordered_json(d);
      }
    }
    out[e.key.substr(0, dot)][e.key.substr(dot + 1)] = value;
  }
  return out;
}

}  // namespace waveformer
