#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "waveformer/data.hpp"
#include "waveformer/model.hpp"
#include "waveformer/trainer.hpp"

namespace waveformer {

enum class DataSource { synth, dir, ts };

struct RunSettings {
  std::uint64_t seed = 1;
  std::string out_dir = "runs/default";
  std::string precision = "float32";
  bool record_wall_time = true;
};

struct DataSettings {
  DataSource source = DataSource::synth;
  std::string path;      // dataset directory (dir)
  std::string train_ts;  // .ts files (ts)
  std::string test_ts;
  bool standardize = true;
};

struct AblateSettings {
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

// Everything a run needs. Model fields that come from the data (C, L, K) are
// filled in once the dataset is loaded.
struct Settings {
  RunSettings run;
  DataSettings data;
  SynthSpec synth;
  ModelConfig model;
  TrainConfig train;
  AblateSettings ablate;

  // Dotted key such as "model.use_dywpe". Unknown keys are config errors that
  // list every valid key.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;
};

// Sectioned `key = value` text: `[section]` headers, `#` comments, optional
// double quotes around strings, lists as `a, b` or `[a, b]`.
Settings parse_settings(const std::string& text, const std::string& origin = "<string>");
Settings load_settings(const std::filesystem::path& path);
std::string format_settings(const Settings& s);

// "section.key=value".
void apply_override(Settings& s, const std::string& assignment);

nlohmann::ordered_json settings_to_json(const Settings& s);

}  // namespace waveformer
