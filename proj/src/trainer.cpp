#include "waveformer/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "waveformer/kernels.hpp"
#include "waveformer/ops.hpp"

namespace waveformer {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::size_t argmax(std::span<const T> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Fixed offset so the training stream differs from the initialization stream.
constexpr std::uint64_t kTrainStreamSalt = 0x9e3779b97f4a7c15ULL;

}  // namespace

Monitor parse_monitor(const std::string& name) {
  if (name == "val_acc") return Monitor::val_acc;
  if (name == "val_loss") return Monitor::val_loss;
  fail(ErrorKind::config, "monitor must be val_acc or val_loss, got '" + name + "'");
}

const char* monitor_name(Monitor m) noexcept {
  return m == Monitor::val_acc ? "val_acc" : "val_loss";
}

void TrainConfig::validate() const {
  if (epochs == 0) fail(ErrorKind::config, "train.epochs must be >= 1");
  if (batch_size == 0) fail(ErrorKind::config, "train.batch_size must be >= 1");
  // lr_min = 0 is allowed so a frozen (lr = 0) run can be expressed.
  if (!(lr_min >= 0.0) || !(lr_min <= lr_max) || !std::isfinite(lr_max)) {
    fail(ErrorKind::config, "learning rates must satisfy 0 <= lr_min <= lr_max");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::config, "adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::config, "adam eps must be > 0");
  if (!(clip_norm > 0.0)) fail(ErrorKind::config, "train.clip_norm must be > 0");
  if (patience == 0) fail(ErrorKind::config, "train.patience must be >= 1");
  if (!(val_ratio >= 0.0 && val_ratio < 1.0)) fail(ErrorKind::config, "train.val_ratio must lie in [0, 1)");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},       {"batch_size", c.batch_size},
          {"lr_max", c.lr_max},       {"lr_min", c.lr_min},
          {"beta1", c.beta1},         {"beta2", c.beta2},
          {"eps", c.eps},             {"clip_norm", c.clip_norm},
          {"patience", c.patience},   {"monitor", monitor_name(c.monitor)},
          {"val_ratio", c.val_ratio}, {"seed", c.seed},
          {"record_wall_time", c.record_wall_time}};
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || logits.dim(0) == 0) {
    fail(ErrorKind::dimension, "cross_entropy: logits " + shape_str(logits.shape()) +
                                   " do not match " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t rows = logits.dim(0);
  const std::size_t k = logits.dim(1);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      fail(ErrorKind::label_range, "cross_entropy: label " + std::to_string(y) + " outside [0, " +
                                       std::to_string(k) + ")");
    }
  }
  const auto& x = logits.data();
  std::vector<T> probs(rows * k);
  T total = T(0);
  for (std::size_t i = 0; i < rows; ++i) {
    const T* row = x.data() + i * k;
    const T m = *std::max_element(row, row + k);
    T z = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::exp(row[j] - m);
      z += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    total += m + std::log(z) - row[labels[i]];
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return Tensor<T>::make_result(
      {}, {total / static_cast<T>(rows)}, {logits},
      [probs = std::move(probs), ys = std::move(ys), rows, k](typename Tensor<T>::NodeT& self) {
        auto& parent = *self.parents[0];
        if (!parent.requires_grad) return;
        auto& g = parent.ensure_grad();
        const T scale = self.grad[0] / static_cast<T>(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            const T onehot = static_cast<std::size_t>(ys[i]) == j ? T(1) : T(0);
            g[i * k + j] += scale * (probs[i * k + j] - onehot);
          }
        }
      });
}

double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min) {
  if (total == 0) return lr_max;
  const double frac = static_cast<double>(std::min(t, total)) / static_cast<double>(total);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

template <typename T>
double clip_grad_norm(ParamStore<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params.entries()) {
    for (T g : p.tensor.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params.entries()) {
      if (!p.tensor.has_grad()) continue;
      for (T& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

template <typename T>
Adam<T>::Adam(ParamStore<T>& params, double beta1, double beta2, double eps)
    : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_.entries()) {
    m_.emplace_back(p.tensor.numel(), T(0));
    v_.emplace_back(p.tensor.numel(), T(0));
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  auto& entries = params_.entries();
  if (entries.size() != m_.size()) fail(ErrorKind::tape, "adam: parameter store changed after construction");
  for (const auto& p : entries) {
    for (T g : p.tensor.grad()) {
      if (!std::isfinite(g)) fail(ErrorKind::numeric, "non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const T b1 = static_cast<T>(beta1_);
  const T b2 = static_cast<T>(beta2_);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& grad = entries[i].tensor.grad();
    if (grad.empty()) continue;
    auto values = entries[i].tensor.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * grad[j];
      v[j] = b2 * v[j] + (T(1) - b2) * grad[j] * grad[j];
      const double m_hat = static_cast<double>(m[j]) / c1;
      const double v_hat = static_cast<double>(v[j]) / c2;
      values[j] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + eps_));
    }
  }
}

template <typename T>
EvalResult evaluate(const WaveFormer<T>& model, const SeriesDataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t k = model.config().classes;
  if (ds.channels != model.config().channels || ds.length != model.config().length) {
    fail(ErrorKind::compatibility,
         "model expects C=" + std::to_string(model.config().channels) +
             ", L=" + std::to_string(model.config().length) + " but dataset '" + ds.name +
             "' has C=" + std::to_string(ds.channels) + ", L=" + std::to_string(ds.length));
  }
  if (ds.classes > k) {
    fail(ErrorKind::compatibility, "dataset has " + std::to_string(ds.classes) +
                                       " classes, model has " + std::to_string(k));
  }
  std::vector<double> losses(n, 0.0);
  std::vector<int> preds(n, 0);
  std::exception_ptr failure;
  const bool parallel = kernels::backend() == kernels::Backend::parallel && n > 1;
  (void)parallel;
#ifdef WAVEFORMER_HAS_OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::size_t i = 0; i < n; ++i) {
    try {
      NoGradGuard guard;
      Rng rng(0);
      auto logits = model.forward(ds.sample_tensor<T>(i), false, rng);
      auto row = std::span<const T>(logits.data());
      const int y = ds.labels[i];
      const T m = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (T v : row) z += std::exp(static_cast<double>(v - m));
      losses[i] = static_cast<double>(m) + std::log(z) - static_cast<double>(row[y]);
      preds[i] = static_cast<int>(argmax(row));
    } catch (...) {
#ifdef WAVEFORMER_HAS_OPENMP
#pragma omp critical(waveformer_eval_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  EvalResult r;
  r.predictions = preds;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += losses[i];
    ++r.confusion[static_cast<std::size_t>(ds.labels[i])][static_cast<std::size_t>(preds[i])];
    if (preds[i] == ds.labels[i]) ++correct;
  }
  if (n > 0) {
    r.loss = total / static_cast<double>(n);
    r.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  }
  return r;
}

std::string format_metrics_row(const EpochMetrics& m) {
  std::ostringstream s;
  s << m.epoch << ',' << shortest(m.lr) << ',' << shortest(m.train_loss) << ','
    << shortest(m.train_acc) << ',' << shortest(m.val_loss) << ',' << shortest(m.val_acc) << ','
    << shortest(m.grad_norm) << ',' << shortest(m.wall_ms);
  return s.str();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) fail(ErrorKind::io, "cannot write " + path.string());
  out_ << kMetricsHeader << '\n';
  out_.flush();
}

void MetricsWriter::write(const EpochMetrics& m) {
  out_ << format_metrics_row(m) << '\n';
  out_.flush();
  if (!out_) fail(ErrorKind::io, "failed writing metrics row");
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "file not found: " + path.string());
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    fail(ErrorKind::parse, path.string() + ":1: unexpected metrics header");
  }
  std::vector<EpochMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> f;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto end = std::min(line.find(',', start), line.size());
      double v = 0.0;
      auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end) {
        fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": bad field");
      }
      f.push_back(v);
      start = end + 1;
    }
    if (f.size() != 8) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    rows.push_back({static_cast<std::size_t>(f[0]), f[1], f[2], f[3], f[4], f[5], f[6], f[7]});
  }
  return rows;
}

template <typename T>
TrainResult train_loop(WaveFormer<T>& model, const SeriesDataset& train, const SeriesDataset& val,
                       const TrainConfig& config,
                       const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (train.size() == 0) fail(ErrorKind::integrity, "training set is empty");
  const auto& mc = model.config();
  if (train.channels != mc.channels || train.length != mc.length) {
    fail(ErrorKind::compatibility, "training data (C=" + std::to_string(train.channels) +
                                       ", L=" + std::to_string(train.length) +
                                       ") does not match the model (C=" +
                                       std::to_string(mc.channels) + ", L=" +
                                       std::to_string(mc.length) + ")");
  }
  auto& params = model.params();
  Adam<T> adam(params, config.beta1, config.beta2, config.eps);
  Rng rng(config.seed ^ kTrainStreamSalt);

  std::vector<Tensor<T>> inputs;
  inputs.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) inputs.push_back(train.sample_tensor<T>(i));

  const std::size_t steps_per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = config.epochs * steps_per_epoch;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  auto best = params.snapshot();
  bool have_best = false;
  std::size_t since_best = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics em;
    em.epoch = epoch;
    em.lr = cosine_lr(step, total_steps, config.lr_max, config.lr_min);
    double loss_sum = 0.0, norm_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, order.size());
      std::vector<Tensor<T>> xs;
      std::vector<int> ys;
      for (std::size_t j = lo; j < hi; ++j) {
        xs.push_back(inputs[order[j]]);
        ys.push_back(train.labels[order[j]]);
      }
      params.zero_grad();
      auto logits = model.forward_batch(xs, true, rng);
      auto loss = cross_entropy(logits, std::span<const int>(ys));
      const double batch_loss = static_cast<double>(loss.item());
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                  std::to_string(step) + ": loss is not finite",
                              result.epochs);
      }
      loss.backward();
      norm_sum += clip_grad_norm(params, config.clip_norm);
      adam.step(cosine_lr(step, total_steps, config.lr_max, config.lr_min));
      ++step;
      loss_sum += batch_loss * static_cast<double>(hi - lo);
      const std::size_t k = logits.dim(1);
      for (std::size_t j = 0; j < ys.size(); ++j) {
        auto row = std::span<const T>(logits.data()).subspan(j * k, k);
        if (static_cast<int>(argmax(row)) == ys[j]) ++correct;
      }
    }
    em.train_loss = loss_sum / static_cast<double>(train.size());
    em.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    em.grad_norm = norm_sum / static_cast<double>(steps_per_epoch);
    if (val.size() > 0) {
      const auto ev = evaluate(model, val);
      em.val_loss = ev.loss;
      em.val_acc = ev.accuracy;
    } else {
      em.val_loss = em.train_loss;
      em.val_acc = em.train_acc;
    }
    if (config.record_wall_time) {
      em.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                       .count();
    }
    result.epochs.push_back(em);
    if (on_epoch) on_epoch(em);

    bool improved = !have_best;
    if (have_best) {
      if (config.monitor == Monitor::val_acc) {
        improved = em.val_acc > result.best_val_acc ||
                   (em.val_acc == result.best_val_acc && em.val_loss < result.best_val_loss);
      } else {
        improved = em.val_loss < result.best_val_loss;
      }
    }
    if (improved) {
      have_best = true;
      result.best_epoch = epoch;
      result.best_val_acc = em.val_acc;
      result.best_val_loss = em.val_loss;
      best = params.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  params.restore(best);
  params.zero_grad();
  return result;
}

std::string run_id(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(12, '0');
  for (std::size_t i = 0; i < 12; ++i) out[i] = digits[(h >> (60 - 4 * i)) & 0xf];
  return out;
}

template Tensor<float> cross_entropy(const Tensor<float>&, std::span<const int>);
template Tensor<double> cross_entropy(const Tensor<double>&, std::span<const int>);
template double clip_grad_norm(ParamStore<float>&, double);
template double clip_grad_norm(ParamStore<double>&, double);
template class Adam<float>;
template class Adam<double>;
template EvalResult evaluate(const WaveFormer<float>&, const SeriesDataset&);
template EvalResult evaluate(const WaveFormer<double>&, const SeriesDataset&);
template TrainResult train_loop(WaveFormer<float>&, const SeriesDataset&, const SeriesDataset&,
                                const TrainConfig&, const std::function<void(const EpochMetrics&)>&);
template TrainResult train_loop(WaveFormer<double>&, const SeriesDataset&, const SeriesDataset&,
                                const TrainConfig&, const std::function<void(const EpochMetrics&)>&);

}  // namespace waveformer
