// Command-line front end: every subcommand reads an optional JSON config,
// applies flag overrides, and emits deterministic CSV (same seed, same
// bytes). Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "insdvl/bench.hpp"
#include "insdvl/config.hpp"
#include "insdvl/csv.hpp"
#include "insdvl/dataset.hpp"
#include "insdvl/dvl.hpp"
#include "insdvl/errors.hpp"
#include "insdvl/imu.hpp"
#include "insdvl/metrics.hpp"
#include "insdvl/nn/model.hpp"
#include "insdvl/nn/train.hpp"
#include "insdvl/random.hpp"
#include "insdvl/so3.hpp"
#include "insdvl/trajectory.hpp"
#include "insdvl/wahba.hpp"

namespace {

using insdvl::ExperimentConfig;

// Flag overrides shared by the config-driven subcommands. Only one
// subcommand parses per invocation, so a single instance serves all.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> traj;
  std::optional<std::string> imu_grade;
  std::optional<std::string> mode;
  std::optional<double> duration_s;
  std::optional<double> speed_mps;
  std::optional<double> range_deg;
  std::optional<int> trials;
  std::optional<int> grid_levels;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> window_len;
  std::vector<double> windows_s;
  std::vector<std::string> methods;
  std::optional<std::string> model_dir;
  std::optional<std::string> preset;
  std::optional<double> lr;
  std::optional<std::uint32_t> batch_size;
  std::optional<std::uint32_t> max_epochs;
  std::optional<std::uint32_t> patience;
};

void add_common_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "experiment config JSON file")
      ->check(CLI::ExistingFile);
  sub->add_option("--traj", o.traj, "trajectory preset")
      ->check(CLI::IsMember({"turn", "turn-ideal", "straight"}));
  sub->add_option("--imu", o.imu_grade, "IMU grade preset")
      ->check(CLI::IsMember({"navigation", "tactical"}));
  sub->add_option("--seed", o.seed, "master RNG seed");
  sub->add_option("--trials", o.trials, "Monte-Carlo trials")
      ->check(CLI::PositiveNumber);
  sub->add_option("--duration", o.duration_s, "trajectory duration [s]")
      ->check(CLI::PositiveNumber);
  sub->add_option("--speed", o.speed_mps, "vehicle speed [m/s]")
      ->check(CLI::PositiveNumber);
  sub->add_option("--mode", o.mode, "alignment population")
      ->check(CLI::IsMember({"grid", "random"}));
  sub->add_option("--range", o.range_deg, "alignment range, per axis [deg]");
  sub->add_option("--grid-levels", o.grid_levels, "grid levels per axis")
      ->check(CLI::PositiveNumber);
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig cfg;
  if (o.config_path) {
    std::ifstream in(*o.config_path);
    if (!in) throw insdvl::IoError("cannot open config " + *o.config_path);
    cfg = ExperimentConfig::from_json(nlohmann::json::parse(in));
  }
  if (o.traj) cfg.trajectory = *o.traj;
  if (o.imu_grade) {
    cfg.imu_grade = *o.imu_grade;
    cfg.imu = (*o.imu_grade == "tactical") ? insdvl::imu_tactical()
                                           : insdvl::imu_navigation();
    cfg.imu.rate_hz = cfg.imu_rate_hz;
  }
  if (o.duration_s) cfg.duration_s = *o.duration_s;
  if (o.speed_mps) cfg.speed_mps = *o.speed_mps;
  if (o.range_deg) cfg.range_deg = *o.range_deg;
  if (o.trials) cfg.trials = *o.trials;
  if (o.grid_levels) cfg.grid_levels = *o.grid_levels;
  if (o.seed) cfg.seed = *o.seed;
  if (o.mode) cfg.alignment_mode = *o.mode;
  if (!o.windows_s.empty()) cfg.windows_s = o.windows_s;
  if (!o.methods.empty()) cfg.methods = o.methods;
  if (o.model_dir) cfg.model_dir = *o.model_dir;
  if (o.preset) {
    cfg.model_preset = *o.preset;
    if (*o.preset == "paper") cfg.model = insdvl::ModelConfig::paper();
    else if (*o.preset == "tiny") cfg.model = insdvl::ModelConfig::tiny();
    else cfg.model = insdvl::ModelConfig::desk();
  }
  if (o.window_len) cfg.window_len = *o.window_len;
  cfg.model.window_len = static_cast<int>(cfg.window_len);
  if (o.lr) cfg.lr = *o.lr;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.max_epochs) cfg.max_epochs = *o.max_epochs;
  if (o.patience) cfg.patience = *o.patience;
  cfg.validate();
  return cfg;
}

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw insdvl::IoError("cannot open output file " + out_path);
  f << text;
  f.flush();
  if (!f) throw insdvl::IoError("failed writing " + out_path);
}

std::string config_comment(const ExperimentConfig& cfg) {
  return "# config " + cfg.to_json().dump() + "\n";
}

int cmd_simulate(const Overrides& o, const std::string& what,
                 const std::vector<double>& alignment_deg,
                 const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(o);
  const insdvl::Trajectory traj = cfg.build_trajectory();
  std::string body;
  if (what == "traj") {
    body = insdvl::trajectory_csv(traj);
  } else if (what == "dvl") {
    const insdvl::EulerAngles a = insdvl::EulerAngles::from_deg(
        alignment_deg[0], alignment_deg[1], alignment_deg[2]);
    insdvl::Rng rng(
        insdvl::derive_seed(cfg.seed, insdvl::seed_domain::dvl, 0));
    body = insdvl::dvl_series_csv(insdvl::simulate_dvl(traj, a, cfg.dvl, rng));
  } else {
    insdvl::Rng rng(
        insdvl::derive_seed(cfg.seed, insdvl::seed_domain::imu, 0));
    const insdvl::ImuSeries imu = insdvl::imu_corrupt(traj, cfg.imu, rng);
    const insdvl::InsVelocitySeries ins = insdvl::mechanize(
        imu, traj.samples.front().v_n, traj.samples.front().R_nb);
    body = insdvl::ins_velocity_csv(ins);
  }
  write_output(out_path, config_comment(cfg) + body);
  return 0;
}

int cmd_gen_dataset(const Overrides& o, const std::string& out_dir) {
  const ExperimentConfig cfg = resolve_config(o);
  const auto [splits, manifest] = insdvl::build_dataset(cfg);
  insdvl::save_dataset(splits, manifest, out_dir);
  std::cout << "wrote " << out_dir << ": train=" << splits.train.size()
            << " val=" << splits.val.size()
            << " test=" << splits.test.size() << "\n";
  return 0;
}

int cmd_svd(const Overrides& o, const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(o);
  const std::vector<insdvl::BenchRow> rows =
      insdvl::run_window_comparison(cfg);
  write_output(out_path, insdvl::window_comparison_csv(cfg, rows));
  return 0;
}

int cmd_train(const Overrides& o, const std::string& data_dir,
              const std::string& out_dir) {
  ExperimentConfig cfg = resolve_config(o);
  insdvl::DatasetSplits splits;
  if (!data_dir.empty()) {
    auto loaded = insdvl::load_dataset(data_dir);
    splits = std::move(loaded.first);
    cfg.window_len = loaded.second.window_len;
    cfg.model.window_len = static_cast<int>(cfg.window_len);
  } else {
    splits = insdvl::build_dataset(cfg).first;
  }
  insdvl::TrainOptions opt;
  opt.lr = cfg.lr;
  opt.batch_size = cfg.batch_size;
  opt.max_epochs = cfg.max_epochs;
  opt.patience = cfg.patience;
  insdvl::Rng rng(
      insdvl::derive_seed(cfg.seed, insdvl::seed_domain::init));
  const insdvl::TrainResult result =
      insdvl::train(cfg.model, splits.train, splits.val, opt, rng);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string ckpt =
      out_dir + "/w" + std::to_string(cfg.window_len) + ".ckpt";
  insdvl::save_checkpoint(result.params, ckpt);
  write_output(out_dir + "/history.csv",
               config_comment(cfg) + insdvl::history_csv(result.history));
  std::cout << "wrote " << ckpt << " best_epoch=" << result.best_epoch
            << " best_val_loss=" << insdvl::fmt_num(result.best_val_loss)
            << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& split, bool as_json,
             const std::string& out_path) {
  const insdvl::ModelParams params = insdvl::load_checkpoint(model_path);
  const auto [splits, manifest] = insdvl::load_dataset(data_dir);
  const insdvl::WindowDataset* ds = &splits.test;
  if (split == "train") ds = &splits.train;
  if (split == "val") ds = &splits.val;
  if (params.config.window_len != static_cast<int>(ds->window_len))
    throw insdvl::ShapeMismatch(
        "checkpoint window_len " + std::to_string(params.config.window_len) +
        " does not match dataset window_len " +
        std::to_string(ds->window_len));
  const double window_s = manifest.dvl_rate_hz > 0.0
                              ? ds->window_len / manifest.dvl_rate_hz
                              : 0.0;
  const insdvl::EvalReport report =
      insdvl::eval_network(params, *ds, window_s);
  if (as_json) {
    write_output(out_path, report.json() + "\n");
  } else {
    write_output(out_path, "# config " + manifest.creation.dump() + "\n" +
                               insdvl::EvalReport::csv_header() + "\n" +
                               report.csv_row());
  }
  return 0;
}

int cmd_bias_sweep(const Overrides& o, const std::vector<double>& accel,
                   const std::vector<double>& gyro,
                   const std::string& out_path) {
  ExperimentConfig cfg = resolve_config(o);
  // Long windows by default: short-window fits saturate at high bias and
  // flatten the sensitivity the sweep is meant to expose.
  if (o.windows_s.empty() && !o.config_path) cfg.windows_s = {50, 75, 100};
  const std::vector<insdvl::BiasSweepCell> cells =
      insdvl::run_bias_sweep(cfg, accel, gyro);
  write_output(out_path, insdvl::bias_sweep_csv(cfg, cells));
  return 0;
}

int cmd_domain_shift(const std::string& train_path,
                     const std::string& eval_path,
                     const std::optional<std::uint64_t>& seed,
                     const std::string& out_path) {
  auto load = [](const std::string& p) {
    std::ifstream in(p);
    if (!in) throw insdvl::IoError("cannot open config " + p);
    return ExperimentConfig::from_json(nlohmann::json::parse(in));
  };
  ExperimentConfig train_cfg = load(train_path);
  ExperimentConfig eval_cfg = load(eval_path);
  if (seed) {
    train_cfg.seed = *seed;
    eval_cfg.seed = *seed;
  }
  const insdvl::DomainShiftResult r =
      insdvl::run_domain_shift(train_cfg, eval_cfg);
  write_output(out_path, insdvl::domain_shift_csv(train_cfg, eval_cfg, r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"INS/DVL alignment: simulation, SVD baseline, CNN regressor"};
  app.require_subcommand(1);

  Overrides o;
  std::string out_path;
  std::string what = "traj";
  std::vector<double> alignment_deg = {0.0, 0.0, 0.0};
  std::string data_dir, out_dir, model_path;
  std::string split = "test";
  bool as_json = false;
  std::vector<double> accel_mg = {0.1, 1.0, 5.0, 10.0};
  std::vector<double> gyro_deg_h = {1.0, 10.0, 25.0};
  std::string train_config_path, eval_config_path;

  CLI::App* sim = app.add_subcommand(
      "simulate", "emit trajectory, DVL, or INS velocity CSV");
  add_common_flags(sim, o);
  sim->add_option("--what", what, "stream to emit")
      ->check(CLI::IsMember({"traj", "dvl", "ins"}));
  sim->add_option("--alignment", alignment_deg,
                  "DVL mounting angles roll,pitch,yaw [deg]")
      ->delimiter(',')
      ->expected(3);
  sim->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* gen = app.add_subcommand(
      "gen-dataset", "build and save a windowed training dataset");
  add_common_flags(gen, o);
  gen->add_option("--window-len", o.window_len, "window length [epochs]")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", out_dir, "output dataset directory")->required();

  CLI::App* svd = app.add_subcommand(
      "svd", "Monte-Carlo window comparison of alignment methods");
  add_common_flags(svd, o);
  svd->add_option("--window", o.windows_s,
                  "window lengths [s], comma separated")
      ->delimiter(',');
  svd->add_option("--methods", o.methods, "methods to run")
      ->delimiter(',');
  svd->add_option("--model-dir", o.model_dir,
                  "checkpoint directory for the network method");
  svd->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* train = app.add_subcommand(
      "train", "train the alignment regressor, save checkpoint + history");
  add_common_flags(train, o);
  train->add_option("--data", data_dir, "pre-built dataset directory")
      ->check(CLI::ExistingDirectory);
  train->add_option("--window-len", o.window_len, "window length [epochs]")
      ->check(CLI::PositiveNumber);
  train->add_option("--preset", o.preset, "model size preset")
      ->check(CLI::IsMember({"paper", "desk", "tiny"}));
  train->add_option("--lr", o.lr, "Adam learning rate");
  train->add_option("--batch", o.batch_size, "batch size")
      ->check(CLI::PositiveNumber);
  train->add_option("--epochs", o.max_epochs, "max epochs")
      ->check(CLI::PositiveNumber);
  train->add_option("--patience", o.patience, "early-stopping patience")
      ->check(CLI::PositiveNumber);
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* ev = app.add_subcommand(
      "eval", "evaluate a saved checkpoint on a saved dataset split");
  ev->add_option("--model", model_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--data", data_dir, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  ev->add_option("--split", split, "dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}));
  ev->add_flag("--json", as_json, "emit a JSON summary instead of CSV");
  ev->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* sweep = app.add_subcommand(
      "bias-sweep", "min-RMSE over windows across an IMU bias grid");
  add_common_flags(sweep, o);
  sweep->add_option("--accel", accel_mg, "accel bias grid [mg]")
      ->delimiter(',');
  sweep->add_option("--gyro", gyro_deg_h, "gyro bias grid [deg/h]")
      ->delimiter(',');
  sweep->add_option("--window", o.windows_s,
                    "window lengths [s], comma separated (default 50,75,100)")
      ->delimiter(',');
  sweep->add_option("--out", out_path, "output file (default stdout)");

  CLI::App* shift = app.add_subcommand(
      "domain-shift", "train under one config, evaluate under another");
  shift->add_option("--train-config", train_config_path, "train config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  shift->add_option("--eval-config", eval_config_path, "eval config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  shift->add_option("--seed", o.seed, "seed override for both configs");
  shift->add_option("--out", out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, what, alignment_deg, out_path);
    if (gen->parsed()) return cmd_gen_dataset(o, out_dir);
    if (svd->parsed()) return cmd_svd(o, out_path);
    if (train->parsed()) return cmd_train(o, data_dir, out_dir);
    if (ev->parsed()) return cmd_eval(model_path, data_dir, split, as_json,
                                      out_path);
    if (sweep->parsed()) return cmd_bias_sweep(o, accel_mg, gyro_deg_h,
                                               out_path);
    if (shift->parsed()) return cmd_domain_shift(
        train_config_path, eval_config_path, o.seed, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
