#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waveformer/tensor.hpp"

namespace waveformer {

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Equal-length labelled multivariate series, stored (samples, channels, length).
struct SeriesDataset {
  std::string name;
  std::string split;                    // "train", "test", "val"
  std::string precision = "float64";    // text precision: float32 or float64
  std::size_t channels = 0;
  std::size_t length = 0;
  std::size_t classes = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> class_names;  // optional, from .ts files
  std::optional<ChannelStats> stats;      // set by standardize()

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> sample(std::size_t i) const;
  double at(std::size_t i, std::size_t c, std::size_t t) const {
    return values[(i * channels + c) * length + t];
  }

  // Checks shape bookkeeping, label range and finite values.
  void validate() const;

  template <typename T>
  Tensor<T> sample_tensor(std::size_t i) const;
};

struct DatasetPair {
  SeriesDataset train;
  SeriesDataset test;
};

// Directory with meta.json {name, C, L, K, precision} and train.csv /
// test.csv in long format: `sample,channel,label,t0,...,t{L-1}`.
DatasetPair load_dataset_dir(const std::filesystem::path& dir);
SeriesDataset load_dataset_csv(const std::filesystem::path& csv, const std::string& name,
                               std::size_t channels, std::size_t length, std::size_t classes,
                               const std::string& precision, const std::string& split);
void write_dataset_dir(const std::filesystem::path& dir, const DatasetPair& data);
void write_dataset_csv(const std::filesystem::path& csv, const SeriesDataset& ds);

// UEA/sktime `.ts` text files, equal-length and fully observed only.
SeriesDataset parse_ts_file(const std::filesystem::path& path);
// Parses with a fixed class-label order (so train and test agree).
SeriesDataset parse_ts_file(const std::filesystem::path& path,
                            const std::vector<std::string>& class_order);
void write_ts_file(const std::filesystem::path& path, const SeriesDataset& ds);

// Per-channel z-normalization with train statistics applied to both splits.
DatasetPair standardize(const SeriesDataset& train, const SeriesDataset& test);
// Applies previously computed statistics (evaluation of a saved model).
SeriesDataset apply_stats(const SeriesDataset& ds, const ChannelStats& stats);

SeriesDataset subset(const SeriesDataset& ds, const std::vector<std::size_t>& indices);

// Class-stratified split; `ratio` of each class goes to the second set.
DatasetPair stratified_split(const SeriesDataset& ds, double ratio, std::uint64_t seed);

enum class SynthTask { freq_pair, chirp_vs_tone, phase_shift };

SynthTask parse_synth_task(const std::string& name);
std::string synth_task_name(SynthTask task);

struct SynthSpec {
  SynthTask task = SynthTask::freq_pair;
  std::size_t length = 128;
  std::size_t channels = 2;
  std::size_t samples = 128;  // total, split 50/50 into train and test
  double noise_std = 0.1;
  std::uint64_t seed = 7;
  std::vector<double> freqs{3.0, 7.0};  // cycles per series
  std::size_t classes = 2;              // used by phase_shift only

  std::size_t num_classes() const;
  void validate() const;
};

// Sinusoid classes: freq_pair uses one frequency per class, chirp_vs_tone a
// steady tone versus a linear sweep, phase_shift a class-dependent lag between
// channels. Random per-channel phase and Gaussian noise; deterministic in seed.
DatasetPair synth_freq_task(const SynthSpec& spec);

}  // namespace waveformer
