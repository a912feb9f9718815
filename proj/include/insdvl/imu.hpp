#pragma once

#include <string>
#include <vector>

#include "insdvl/random.hpp"
#include "insdvl/trajectory.hpp"

namespace insdvl {

enum class BiasSign {
  kRandomPerRun,  // per-run random +/- on each axis, magnitude fixed
  kAllPositive    // deterministic, for reproducible unit checks
};

/// Sensor-grade parameterization. Magnitudes use the datasheet units:
/// accel bias in mg, gyro bias in deg/hour, accel noise density in
/// mg/sqrt(Hz), gyro noise density in deg/sqrt(hour).
struct ImuSpec {
  double rate_hz = 100.0;
  double accel_bias_mg = 0.0;
  double gyro_bias_deg_h = 0.0;
  double accel_density_mg_sqrt_hz = 0.0;
  double gyro_density_deg_sqrt_h = 0.0;
  BiasSign bias_sign = BiasSign::kRandomPerRun;

  /// Discrete per-sample noise sigma, m/s^2: density*g/1000*sqrt(rate).
  double accel_sigma() const;
  /// Discrete per-sample noise sigma, rad/s: density*(pi/180)/60*sqrt(rate).
  double gyro_sigma() const;
  /// Bias magnitudes in SI units (m/s^2, rad/s).
  double accel_bias_si() const;
  double gyro_bias_si() const;
};

struct ImuSeries {
  double rate_hz = 0.0;
  std::vector<double> t;
  std::vector<Eigen::Vector3d> f_b;
  std::vector<Eigen::Vector3d> w_b;
};

struct InsVelocitySeries {
  double rate_hz = 0.0;
  std::vector<double> t;
  std::vector<Eigen::Vector3d> v_b;
};

/// Applies f~ = f + b_a + sigma_a*n, w~ = w + b_g + sigma_g*n at the IMU
/// rate (scale factors are identity; the error model carries none).
/// Bias vectors are constant per run: one magnitude on every axis, sign
/// pattern drawn once per call under kRandomPerRun.
ImuSeries imu_corrupt(const Trajectory& traj, const ImuSpec& spec, Rng& rng);

/// Strapdown mechanization: per step R <- R*exp(hat(w*dt)),
/// v_n <- v_n + dt*(R*f + g_n), emitting v_b = R^T v_n at every epoch.
/// Initial state is taken as given (ground truth in this artifact).
InsVelocitySeries mechanize(const ImuSeries& imu,
                            const Eigen::Vector3d& init_v_n,
                            const Eigen::Matrix3d& init_R_nb);

/// Monte-Carlo RMS of ||v_b_mechanized - v_b_gt|| per epoch over n_trials
/// fresh corruption draws.
std::vector<double> velocity_error_growth(const ImuSpec& spec,
                                          const Trajectory& traj,
                                          int n_trials, Rng& rng);

/// Columns: t, vx, vy, vz (body frame, m/s).
std::string ins_velocity_csv(const InsVelocitySeries& s);

}  // namespace insdvl
