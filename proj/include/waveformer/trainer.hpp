#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "waveformer/data.hpp"
#include "waveformer/error.hpp"
#include "waveformer/model.hpp"
#include "waveformer/params.hpp"

namespace waveformer {

enum class Monitor { val_acc, val_loss };

Monitor parse_monitor(const std::string& name);
const char* monitor_name(Monitor m) noexcept;

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;
  std::size_t patience = 20;
  Monitor monitor = Monitor::val_acc;
  double val_ratio = 0.2;
  std::uint64_t seed = 0;
  // Off writes wall_ms as 0 so metrics files compare byte-for-byte.
  bool record_wall_time = true;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& c);

// Mean over rows of -log softmax(logits)[y], computed with the max shift.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// lr_min + (lr_max - lr_min)(1 + cos(pi t / T)) / 2; lr_max when T is 0.
double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min);

// Scales every gradient by max_norm / g when the global L2 norm g exceeds
// max_norm. Returns g.
template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm);

// Bias-corrected Adam over every parameter in the store. Parameters that
// received no gradient this step are skipped.
template <typename T>
class Adam {
 public:
  Adam(ParamStore<T>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  ParamStore<T>& params_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

// Inference over every sample; samples run concurrently when the parallel
// backend is active. Results do not depend on the thread count.
template <typename T>
EvalResult evaluate(const WaveFormer<T>& model, const SeriesDataset& ds);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // running, in training mode
  double val_loss = 0.0;
  double val_acc = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over the epoch's steps
  double wall_ms = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,lr,train_loss,train_acc,val_loss,val_acc,grad_norm,wall_ms";

std::string format_metrics_row(const EpochMetrics& m);

// Appends one flushed row per epoch so a crash leaves every finished epoch.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const EpochMetrics& m);

 private:
  std::ofstream out_;
};

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

// Loss became non-finite. Carries every epoch completed before it.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::vector<EpochMetrics> metrics)
      : Error(ErrorKind::numeric, message), metrics_(std::move(metrics)) {}
  const std::vector<EpochMetrics>& metrics() const noexcept { return metrics_; }

 private:
  std::vector<EpochMetrics> metrics_;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

// Minibatch training with per-step cosine schedule, clipping and early
// stopping. The best-epoch parameters are restored before returning. An empty
// validation set makes the monitor fall back to the training metrics.
template <typename T>
TrainResult train_loop(WaveFormer<T>& model, const SeriesDataset& train, const SeriesDataset& val,
                       const TrainConfig& config,
                       const std::function<void(const EpochMetrics&)>& on_epoch = {});

// 12 hex digits of FNV-1a over the text; stable across platforms.
std::string run_id(const std::string& text);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace waveformer
