#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "insdvl/nn/model.hpp"
#include "insdvl/random.hpp"

namespace insdvl {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;  // first moments, zero-initialized
  std::vector<double> v;  // second moments, zero-initialized

  AdamState(std::size_t n, double learning_rate)
      : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam update applied to trainable segments only; batchnorm
// running statistics are never touched by the optimizer.
void adam_step(AdamState& state, ModelParams& params,
               const std::vector<double>& grads);

struct TrainOptions {
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 60;
  std::size_t patience = 10;  // epochs without val improvement; 0 disables
  bool shuffle = true;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // deg^2, mean over the epoch's samples
  double val_loss = 0.0;    // deg^2, inference mode
};

struct TrainResult {
  ModelParams params;  // parameters at the best validation epoch
  std::vector<EpochStats> history;
  double best_val_loss = 0.0;
  std::size_t best_epoch = 0;
};

// Mini-batch epoch loop: init from rng, shuffled batches of batch_size
// (final partial batch included), Adam updates, per-epoch train/val loss.
// Throws Diverged when a loss becomes non-finite.
TrainResult train(const ModelConfig& config, const WindowDataset& train_ds,
                  const WindowDataset& val_ds, const TrainOptions& opt,
                  Rng& rng);

std::string history_csv(const std::vector<EpochStats>& history);

// Checkpoint: 8-byte magic "IDVLNN01", u32 config JSON length, config JSON,
// u64 parameter count, float64 values little-endian. Running statistics are
// part of the value array.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace insdvl
