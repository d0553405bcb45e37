#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "waveformer/data.hpp"
#include "waveformer/settings.hpp"
#include "waveformer/trainer.hpp"

namespace waveformer {

// Datasets ready for training: standardized with training statistics and a
// stratified validation split carved from the training set.
struct PreparedData {
  SeriesDataset train;
  SeriesDataset val;
  SeriesDataset test;
  std::optional<ChannelStats> stats;
  std::vector<std::string> class_names;
};

DatasetPair load_run_data(const Settings& s);
PreparedData prepare_data(const Settings& s);

// Model settings completed with the data's channel count, length and classes.
ModelConfig model_config_for(const Settings& s, const SeriesDataset& train);

struct RunOutcome {
  TrainResult train;
  double train_acc = 0.0;  // inference mode, best-epoch parameters
  EvalResult test;
  std::string run_id;
  nlohmann::ordered_json summary;
};

// Trains, restores the best epoch and evaluates on the test split. With a
// non-empty out_dir writes metrics.csv (per epoch), model.ckpt and
// summary.json there.
RunOutcome run_training(const Settings& s, const std::filesystem::path& out_dir = {});
RunOutcome run_training(const Settings& s, const PreparedData& data,
                        const std::filesystem::path& out_dir = {});

struct AblationRow {
  std::string variant;
  std::uint64_t seed = 0;
  double test_acc = 0.0;
};

// The full model and one variant per removed component.
const std::vector<std::string>& ablation_variants();
void apply_variant(Settings& s, const std::string& variant);

// Every variant under every seed in ablate.seeds, sharing one prepared data set
// per seed. With a non-empty out_dir writes ablation.csv and
// ablation_summary.json.
std::vector<AblationRow> run_ablation(const Settings& s, const std::filesystem::path& out_dir = {});

struct AblationSummary {
  std::string variant;
  double mean_test_acc = 0.0;
  double delta_pp = 0.0;  // full mean minus variant mean, percentage points
};

std::vector<AblationSummary> summarize_ablation(const std::vector<AblationRow>& rows);

}  // namespace waveformer
