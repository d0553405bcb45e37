#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "waveformer/data.hpp"
#include "waveformer/model.hpp"

namespace waveformer {

// Binary layout: 8-byte magic "WFCKPT01", uint64 little-endian manifest
// length, UTF-8 JSON manifest, then every parameter buffer in manifest order
// as little-endian IEEE values.
inline constexpr char kCheckpointMagic[9] = "WFCKPT01";
inline constexpr int kCheckpointFormatVersion = 1;

struct CheckpointParam {
  std::string name;
  Shape shape;
};

struct CheckpointInfo {
  ModelConfig model;
  std::string precision;  // float32 or float64
  nlohmann::json run_config;  // echo of the training settings, may be null
  std::optional<ChannelStats> stats;
  std::vector<std::string> class_names;
  std::vector<CheckpointParam> params;
  std::uint64_t seed = 0;
};

template <typename T>
const char* precision_name() noexcept;

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const WaveFormer<T>& model,
                     const CheckpointInfo& info);

// Reads and validates the header and manifest only.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Rebuilds the model from the manifest and overwrites every parameter with
// the stored bytes. The stored precision must equal T.
template <typename T>
std::unique_ptr<WaveFormer<T>> load_checkpoint(const std::filesystem::path& path,
                                               CheckpointInfo* info = nullptr);

}  // namespace waveformer
