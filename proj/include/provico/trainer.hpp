#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "provico/data_io.hpp"
#include "provico/distances.hpp"
#include "provico/losses.hpp"
#include "provico/mining.hpp"

namespace provico {

struct TrainConfig {
  std::size_t embed_dim = 32;    // D
  std::size_t input_dim = 64;    // F
  std::vector<std::size_t> encoder = {128, 128};
  std::size_t n_samples = 10;    // K
  std::size_t n_clips = 2;       // N
  std::size_t batch_size = 96;   // B
  double lambda = 0.0;           // 0 resolves to 1/(4D)
  double tau = 0.15;
  MiningMode tau_mode = MiningMode::fixed_tau;  // mode used after stage 1
  double beta = 1e-4;
  std::size_t epochs = 60;
  long warmup_epochs = -1;       // <0 resolves to 10% of epochs
  std::size_t stage1_epochs = 10;
  double base_lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  Metric metric = Metric::bhattacharyya;

  double resolved_lambda() const {
    return lambda > 0.0 ? lambda : default_lambda(embed_dim);
  }
  std::size_t resolved_warmup() const {
    return warmup_epochs >= 0 ? static_cast<std::size_t>(warmup_epochs)
                              : epochs / 10;
  }
  void validate() const;
  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

struct MetricsRow {
  std::size_t epoch = 0;  // 1-based, set after the epoch completes
  double lr = 0.0;
  double total = 0.0;
  double stoc = 0.0;
  double kl = 0.0;
  double mean_uncertainty = 0.0;
  std::string mode;
  double tau = 0.0;
  double precision = -1.0;  // -1 when the corpus carries no labels
  double recall = -1.0;
};

struct TrainState {
  TrainConfig config;
  ModelParams params;
  Vec64 adam_m, adam_v;
  long adam_step = 0;
  std::size_t epoch = 0;  // completed epochs
  Rng rng;
  std::vector<MetricsRow> metrics;
};

/// Linear warm-up from zero over warmup epochs, then half-period cosine
/// decay of base_lr over the remaining epochs.
double lr_at(std::size_t epoch, const TrainConfig& config);

TrainState init_state(const TrainConfig& config);

void adam_step(TrainState& state, const Vec64& grad, double lr);

/// One pass over the corpus: shuffle, embed, sample, mine (identity-only
/// before stage1_epochs), backprop, update. The trailing partial batch
/// is dropped. Appends one metrics row.
void train_epoch(TrainState& state, const Corpus& corpus, int threads);

using EpochCallback = std::function<void(const TrainState&)>;

/// Runs train_epoch until config.epochs, invoking the callback after
/// each epoch (checkpoint snapshots hang off it).
void train(TrainState& state, const Corpus& corpus, int threads,
           const EpochCallback& callback = {});

/// Self-describing JSON checkpoint; doubles are written with the
/// shortest representation that parses back to the identical value.
/// Writes are atomic (temp file + rename).
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace provico
