#include "insdvl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <utility>

#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"
#include "insdvl/wahba.hpp"

namespace insdvl {

namespace {

// Keeps (trial, alignment) DVL streams distinct while staying independent of
// anything a bias-sweep cell varies, so cells share their random numbers.
constexpr std::uint64_t kTrialStride = 1000003;

std::string config_comment(const ExperimentConfig& cfg) {
  return "# config " + cfg.to_json().dump() + "\n";
}

// Alignment index range evaluated in trial k: the whole population in grid
// mode, the trial's own draw in random mode.
std::pair<std::size_t, std::size_t> trial_range(const ExperimentConfig& cfg,
                                                std::size_t n_aligns, int k) {
  if (cfg.alignment_mode == "random")
    return {static_cast<std::size_t>(k), static_cast<std::size_t>(k) + 1};
  return {0, n_aligns};
}

WindowSample head_window(const PairedVelocityWindow& p, std::uint32_t len) {
  if (p.size() < len)
    throw TooShort("paired stream shorter than the network window");
  WindowSample s;
  s.dvl.resize(std::size_t{3} * len);
  s.ins.resize(std::size_t{3} * len);
  for (std::uint32_t e = 0; e < len; ++e) {
    for (int a = 0; a < 3; ++a) {
      s.dvl[std::size_t{e} * 3 + a] = static_cast<float>(p.v_d[e](a));
      s.ins[std::size_t{e} * 3 + a] = static_cast<float>(p.v_b[e](a));
    }
  }
  return s;
}

struct MethodAcc {
  std::vector<EulerAngles> truth, est;      // pooled over trials
  std::vector<EulerAngles> t_truth, t_est;  // current trial
  std::vector<double> trial_rmse;

  void add(const EulerAngles& gt, const EulerAngles& hat) {
    t_truth.push_back(gt);
    t_est.push_back(hat);
  }
  void end_trial() {
    if (t_truth.empty()) return;
    trial_rmse.push_back(rmse_deg(t_truth, t_est));
    truth.insert(truth.end(), t_truth.begin(), t_truth.end());
    est.insert(est.end(), t_est.begin(), t_est.end());
    t_truth.clear();
    t_est.clear();
  }
};

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::uint32_t network_window_len(double window_s, double dvl_rate_hz) {
  return static_cast<std::uint32_t>(std::llround(window_s * dvl_rate_hz));
}

}  // namespace

std::vector<BenchRow> run_window_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  const bool want_svd = std::find(cfg.methods.begin(), cfg.methods.end(),
                                  "svd") != cfg.methods.end();
  const bool want_net = std::find(cfg.methods.begin(), cfg.methods.end(),
                                  "network") != cfg.methods.end();
  const std::size_t n_win = cfg.windows_s.size();

  std::vector<ModelParams> nets;  // parallel to windows_s when want_net
  if (want_net) {
    for (double w : cfg.windows_s) {
      const std::uint32_t len = network_window_len(w, cfg.dvl.rate_hz);
      const std::string path =
          cfg.model_dir + "/w" + std::to_string(len) + ".ckpt";
      if (cfg.model_dir.empty() || !std::filesystem::exists(path))
        throw MissingModel("window comparison: no checkpoint at " +
                           (cfg.model_dir.empty() ? "<model_dir unset>"
                                                  : path));
      ModelParams p = load_checkpoint(path);
      if (p.config.window_len != static_cast<int>(len))
        throw MissingModel("checkpoint " + path + " has window_len " +
                           std::to_string(p.config.window_len) +
                           ", expected " + std::to_string(len));
      nets.push_back(std::move(p));
    }
  }

  const Trajectory traj = cfg.build_trajectory();
  const std::vector<EulerAngles> aligns = cfg.build_alignments();
  std::vector<MethodAcc> acc_svd(n_win), acc_net(n_win);

  for (int k = 0; k < cfg.trials; ++k) {
    Rng imu_rng(derive_seed(cfg.seed, seed_domain::imu,
                            static_cast<std::uint64_t>(k)));
    const ImuSeries imu = imu_corrupt(traj, cfg.imu, imu_rng);
    const InsVelocitySeries ins = mechanize(imu, traj.samples.front().v_n,
                                            traj.samples.front().R_nb);
    const auto [lo, hi] = trial_range(cfg, aligns.size(), k);
    for (std::size_t i = lo; i < hi; ++i) {
      Rng dvl_rng(derive_seed(cfg.seed, seed_domain::dvl,
                              kTrialStride * static_cast<std::uint64_t>(k) +
                                  i));
      const DvlSeries dvl = simulate_dvl(traj, aligns[i], cfg.dvl, dvl_rng);
      const PairedVelocityWindow paired = pair_streams(dvl, ins);
      for (std::size_t wi = 0; wi < n_win; ++wi) {
        if (want_svd) {
          const AlignmentEstimate e =
              svd_align(slice_window(paired, cfg.windows_s[wi]));
          acc_svd[wi].add(aligns[i], matrix_to_euler(e.R_hat));
        }
        if (want_net) {
          const WindowSample s = head_window(
              paired, network_window_len(cfg.windows_s[wi], cfg.dvl.rate_hz));
          acc_net[wi].add(aligns[i], predict(nets[wi], s));
        }
      }
    }
    for (std::size_t wi = 0; wi < n_win; ++wi) {
      acc_svd[wi].end_trial();
      acc_net[wi].end_trial();
    }
  }

  std::vector<BenchRow> rows;
  auto emit = [&](const std::string& method, std::vector<MethodAcc>& acc) {
    for (std::size_t wi = 0; wi < n_win; ++wi) {
      BenchRow row;
      row.report.method = method;
      row.report.window_s = cfg.windows_s[wi];
      row.report.n_samples = acc[wi].truth.size();
      row.report.rmse_deg = rmse_deg(acc[wi].truth, acc[wi].est);
      row.report.aoe_deg = aoe_deg(acc[wi].truth, acc[wi].est);
      row.report.max_err_deg =
          max_geodesic_error_deg(acc[wi].truth, acc[wi].est);
      row.rmse_std_deg = sample_std(acc[wi].trial_rmse);
      rows.push_back(std::move(row));
    }
  };
  for (const std::string& m : cfg.methods) {
    if (m == "svd" && want_svd) emit("svd", acc_svd);
    if (m == "network" && want_net) emit("network", acc_net);
  }
  return rows;
}

std::string window_comparison_csv(const ExperimentConfig& cfg,
                                  const std::vector<BenchRow>& rows) {
  std::string out = config_comment(cfg);
  out += EvalReport::csv_header();
  out += ",rmse_std_deg\n";
  for (const BenchRow& r : rows) {
    out += csv_row({r.report.method, fmt_num(r.report.window_s),
                    std::to_string(r.report.n_samples),
                    fmt_num(r.report.rmse_deg), fmt_num(r.report.aoe_deg),
                    fmt_num(r.report.max_err_deg),
                    fmt_num(r.rmse_std_deg)});
  }
  return out;
}

std::vector<BiasSweepCell> run_bias_sweep(
    const ExperimentConfig& cfg, const std::vector<double>& accel_mg,
    const std::vector<double>& gyro_deg_h) {
  cfg.validate();
  if (accel_mg.empty() || gyro_deg_h.empty())
    throw Error("bias sweep: both bias grids must be nonempty");

  const Trajectory traj = cfg.build_trajectory();
  const std::vector<EulerAngles> aligns = cfg.build_alignments();
  const std::size_t n_win = cfg.windows_s.size();

  std::vector<BiasSweepCell> cells;
  for (double a : accel_mg) {
    for (double g : gyro_deg_h) {
      ImuSpec spec = cfg.imu;
      spec.accel_bias_mg = a;
      spec.gyro_bias_deg_h = g;

      std::vector<double> rmse_sum(n_win, 0.0);
      for (int k = 0; k < cfg.trials; ++k) {
        Rng imu_rng(derive_seed(cfg.seed, seed_domain::imu,
                                static_cast<std::uint64_t>(k)));
        const ImuSeries imu = imu_corrupt(traj, spec, imu_rng);
        const InsVelocitySeries ins = mechanize(
            imu, traj.samples.front().v_n, traj.samples.front().R_nb);
        std::vector<std::vector<EulerAngles>> truth(n_win), est(n_win);
        const auto [lo, hi] = trial_range(cfg, aligns.size(), k);
        for (std::size_t i = lo; i < hi; ++i) {
          Rng dvl_rng(derive_seed(
              cfg.seed, seed_domain::dvl,
              kTrialStride * static_cast<std::uint64_t>(k) + i));
          const DvlSeries dvl =
              simulate_dvl(traj, aligns[i], cfg.dvl, dvl_rng);
          const PairedVelocityWindow paired = pair_streams(dvl, ins);
          for (std::size_t wi = 0; wi < n_win; ++wi) {
            const AlignmentEstimate e =
                svd_align(slice_window(paired, cfg.windows_s[wi]));
            truth[wi].push_back(aligns[i]);
            est[wi].push_back(matrix_to_euler(e.R_hat));
          }
        }
        for (std::size_t wi = 0; wi < n_win; ++wi)
          rmse_sum[wi] += rmse_deg(truth[wi], est[wi]);
      }

      BiasSweepCell cell;
      cell.accel_mg = a;
      cell.gyro_deg_h = g;
      cell.min_rmse_deg = rmse_sum[0];
      cell.best_window_s = cfg.windows_s[0];
      for (std::size_t wi = 0; wi < n_win; ++wi) {
        const double mean = rmse_sum[wi] / cfg.trials;
        if (wi == 0 || mean < cell.min_rmse_deg) {
          cell.min_rmse_deg = mean;
          cell.best_window_s = cfg.windows_s[wi];
        }
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string bias_sweep_csv(const ExperimentConfig& cfg,
                           const std::vector<BiasSweepCell>& cells) {
  std::string out = config_comment(cfg);
  out += "accel_mg,gyro_deg_h,min_rmse_deg,best_window_s\n";
  for (const BiasSweepCell& c : cells) {
    out += csv_row({fmt_num(c.accel_mg), fmt_num(c.gyro_deg_h),
                    fmt_num(c.min_rmse_deg), fmt_num(c.best_window_s)});
  }
  return out;
}

std::pair<DatasetSplits, DatasetManifest> build_dataset(
    const ExperimentConfig& cfg) {
  cfg.validate();
  const Trajectory traj = cfg.build_trajectory();
  const std::vector<EulerAngles> aligns = cfg.build_alignments();
  Rng rng(derive_seed(cfg.seed, seed_domain::dataset));
  const std::vector<WindowSample> samples = augment_and_build(
      traj, aligns, cfg.dvl, cfg.imu, cfg.window_len, rng);
  DatasetSplits splits =
      split_dataset(samples, cfg.window_len, cfg.split_fractions, cfg.seed);

  DatasetManifest m;
  m.window_len = cfg.window_len;
  m.dvl_rate_hz = cfg.dvl.rate_hz;
  m.n_train = splits.train.size();
  m.n_val = splits.val.size();
  m.n_test = splits.test.size();
  m.alignment_mode = cfg.alignment_mode;
  m.range_deg = cfg.range_deg;
  m.seed = cfg.seed;
  m.creation = cfg.to_json();
  return {std::move(splits), std::move(m)};
}

EvalReport eval_network(const ModelParams& params, const WindowDataset& ds,
                        double window_s) {
  std::vector<EulerAngles> truth, est;
  truth.reserve(ds.size());
  est.reserve(ds.size());
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    std::vector<const WindowSample*> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(&ds.samples[i]);
    const std::vector<Eigen::Vector3d> preds =
        forward_deg_batch(params, batch);
    for (std::size_t i = start; i < end; ++i) {
      truth.push_back(ds.samples[i].label());
      const Eigen::Vector3d& p = preds[i - start];
      est.push_back(EulerAngles::from_deg(p.x(), p.y(), p.z()));
    }
  }
  EvalReport r;
  r.method = "network";
  r.window_s = window_s;
  r.n_samples = ds.size();
  r.rmse_deg = rmse_deg(truth, est);
  r.aoe_deg = aoe_deg(truth, est);
  r.max_err_deg = max_geodesic_error_deg(truth, est);
  return r;
}

DomainShiftResult run_domain_shift(const ExperimentConfig& train_cfg,
                                   const ExperimentConfig& eval_cfg) {
  train_cfg.validate();
  eval_cfg.validate();
  if (train_cfg.window_len != eval_cfg.window_len)
    throw ShapeMismatch("domain shift: train window_len " +
                        std::to_string(train_cfg.window_len) +
                        " vs eval window_len " +
                        std::to_string(eval_cfg.window_len));

  DatasetSplits a_splits = build_dataset(train_cfg).first;
  TrainOptions opt;
  opt.lr = train_cfg.lr;
  opt.batch_size = train_cfg.batch_size;
  opt.max_epochs = train_cfg.max_epochs;
  opt.patience = train_cfg.patience;
  Rng rng(derive_seed(train_cfg.seed, seed_domain::init));
  TrainResult tr =
      train(train_cfg.model, a_splits.train, a_splits.val, opt, rng);

  const double window_s = train_cfg.window_len / train_cfg.dvl.rate_hz;
  DomainShiftResult out;
  out.in_domain = eval_network(tr.params, a_splits.test, window_s);
  const DatasetSplits b_splits = build_dataset(eval_cfg).first;
  out.shifted = eval_network(tr.params, b_splits.test, window_s);
  out.gap_rmse_deg = out.shifted.rmse_deg - out.in_domain.rmse_deg;
  out.history = std::move(tr.history);
  return out;
}

std::string domain_shift_csv(const ExperimentConfig& train_cfg,
                             const ExperimentConfig& eval_cfg,
                             const DomainShiftResult& r) {
  std::string out = "# train_config " + train_cfg.to_json().dump() + "\n";
  out += "# eval_config " + eval_cfg.to_json().dump() + "\n";
  out += "role,";
  out += EvalReport::csv_header();
  out += "\n";
  out += "in_domain," + r.in_domain.csv_row();
  out += "shifted," + r.shifted.csv_row();
  out += csv_row({"gap", "", "", "", fmt_num(r.gap_rmse_deg), "", ""});
  return out;
}

namespace {

std::vector<double> tie_average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman_rho(const std::vector<double>& x,
                    const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw LengthMismatch("spearman: need two equal-length series of >= 2");
  const std::vector<double> rx = tie_average_ranks(x);
  const std::vector<double> ry = tie_average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace insdvl
