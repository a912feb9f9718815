#pragma once

#include <string>
#include <utility>
#include <vector>

#include "insdvl/config.hpp"
#include "insdvl/dataset.hpp"
#include "insdvl/metrics.hpp"
#include "insdvl/nn/train.hpp"

namespace insdvl {

struct BenchRow {
  EvalReport report;
  double rmse_std_deg = 0.0;  // sample std of the per-trial RMSE
};

/// Window-size comparison table: one row per (method, window), metrics
/// pooled over trials x alignments. The SVD method slices the leading
/// window_s seconds of each trial's paired streams. The network method loads
/// model_dir/w<len>.ckpt with len = round(window_s * dvl rate) and consumes
/// the same leading epochs; checkpoints are reused, never retrained here.
/// One IMU corruption + mechanization is shared by all alignments of a trial
/// (the INS stream does not depend on the alignment).
/// Throws MissingModel when a required checkpoint is absent or has the wrong
/// input length.
std::vector<BenchRow> run_window_comparison(const ExperimentConfig& cfg);
std::string window_comparison_csv(const ExperimentConfig& cfg,
                                  const std::vector<BenchRow>& rows);

struct BiasSweepCell {
  double accel_mg = 0.0;
  double gyro_deg_h = 0.0;
  double min_rmse_deg = 0.0;
  double best_window_s = 0.0;
};

/// Bias-sensitivity contour: per (accel, gyro) bias cell, the minimum over
/// the window grid of the trial-averaged SVD RMSE; noise densities and
/// everything else come from cfg. Trial seeds are deliberately shared across
/// cells (common random numbers), so cell-to-cell ordering reflects the bias
/// scaling rather than Monte-Carlo luck. Rows follow the input grid order,
/// accel outer, gyro inner.
std::vector<BiasSweepCell> run_bias_sweep(
    const ExperimentConfig& cfg, const std::vector<double>& accel_mg,
    const std::vector<double>& gyro_deg_h);
std::string bias_sweep_csv(const ExperimentConfig& cfg,
                           const std::vector<BiasSweepCell>& cells);

struct DomainShiftResult {
  EvalReport in_domain;
  EvalReport shifted;
  double gap_rmse_deg = 0.0;
  std::vector<EpochStats> history;
};

/// Trains a model on the dataset train_cfg describes, evaluates it on that
/// dataset's test split (in-domain) and on the test split of a dataset built
/// under eval_cfg (shifted). gap = shifted RMSE - in-domain RMSE. The two
/// configs must agree on window_len.
DomainShiftResult run_domain_shift(const ExperimentConfig& train_cfg,
                                   const ExperimentConfig& eval_cfg);
std::string domain_shift_csv(const ExperimentConfig& train_cfg,
                             const ExperimentConfig& eval_cfg,
                             const DomainShiftResult& r);

/// The augmented, split dataset a config describes: alignment population
/// from alignment_mode (grid lattice, or one draw per trial), fresh sensor
/// noise per alignment, split at alignment granularity.
std::pair<DatasetSplits, DatasetManifest> build_dataset(
    const ExperimentConfig& cfg);

/// Batched network metrics over one split.
EvalReport eval_network(const ModelParams& params, const WindowDataset& ds,
                        double window_s);

/// Spearman rank correlation with average ranks on ties. Throws
/// LengthMismatch unless both series share a length >= 2.
double spearman_rho(const std::vector<double>& x,
                    const std::vector<double>& y);

}  // namespace insdvl
