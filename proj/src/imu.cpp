#include "insdvl/imu.hpp"

#include <cmath>

#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"

namespace insdvl {

double ImuSpec::accel_sigma() const {
  return accel_density_mg_sqrt_hz * kGravity / 1000.0 * std::sqrt(rate_hz);
}

double ImuSpec::gyro_sigma() const {
  return gyro_density_deg_sqrt_h * (kPi / 180.0) / 60.0 * std::sqrt(rate_hz);
}

double ImuSpec::accel_bias_si() const {
  return accel_bias_mg * kGravity / 1000.0;
}

double ImuSpec::gyro_bias_si() const {
  return gyro_bias_deg_h * kPi / 180.0 / 3600.0;
}

namespace {

Eigen::Vector3d draw_bias(double magnitude, BiasSign mode, Rng& rng) {
  Eigen::Vector3d b(magnitude, magnitude, magnitude);
  if (mode == BiasSign::kRandomPerRun) {
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < 3; ++i) {
      if (coin(rng) == 0) b[i] = -b[i];
    }
  }
  return b;
}

}  // namespace

ImuSeries imu_corrupt(const Trajectory& traj, const ImuSpec& spec, Rng& rng) {
  if (spec.rate_hz > traj.rate_hz) {
    throw LengthMismatch("imu rate exceeds trajectory rate");
  }
  ImuSeries out;
  out.rate_hz = spec.rate_hz;
  const int step =
      static_cast<int>(std::llround(traj.rate_hz / spec.rate_hz));
  const Eigen::Vector3d b_a = draw_bias(spec.accel_bias_si(), spec.bias_sign, rng);
  const Eigen::Vector3d b_g = draw_bias(spec.gyro_bias_si(), spec.bias_sign, rng);
  const double s_a = spec.accel_sigma();
  const double s_g = spec.gyro_sigma();
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = static_cast<int>(traj.samples.size());
  for (int k = 0; k < n; k += step) {
    const TrajectorySample& s = traj.samples[k];
    Eigen::Vector3d nf = Eigen::Vector3d::Zero();
    Eigen::Vector3d nw = Eigen::Vector3d::Zero();
    if (s_a > 0.0 || s_g > 0.0) {
      for (int i = 0; i < 3; ++i) nf[i] = s_a * gauss(rng);
      for (int i = 0; i < 3; ++i) nw[i] = s_g * gauss(rng);
    }
    out.t.push_back(s.t);
    out.f_b.push_back(s.f_b + b_a + nf);
    out.w_b.push_back(s.w_b + b_g + nw);
  }
  return out;
}

InsVelocitySeries mechanize(const ImuSeries& imu,
                            const Eigen::Vector3d& init_v_n,
                            const Eigen::Matrix3d& init_R_nb) {
  InsVelocitySeries out;
  out.rate_hz = imu.rate_hz;
  out.t = imu.t;
  const std::size_t n = imu.t.size();
  out.v_b.resize(n);
  const double dt = 1.0 / imu.rate_hz;
  const Eigen::Vector3d g_n(0.0, 0.0, kGravity);
  Eigen::Matrix3d R = init_R_nb;
  Eigen::Vector3d v_n = init_v_n;
  for (std::size_t k = 0; k < n; ++k) {
    out.v_b[k] = R.transpose() * v_n;
    v_n += dt * (R * imu.f_b[k] + g_n);
    R = R * so3_exp(imu.w_b[k] * dt);
  }
  return out;
}

std::vector<double> velocity_error_growth(const ImuSpec& spec,
                                          const Trajectory& traj,
                                          int n_trials, Rng& rng) {
  const std::vector<Eigen::Vector3d> v_b_gt = body_velocity_gt(traj);
  std::vector<double> acc;
  std::size_t n_epochs = 0;
  for (int trial = 0; trial < n_trials; ++trial) {
    ImuSeries imu = imu_corrupt(traj, spec, rng);
    InsVelocitySeries ins = mechanize(imu, traj.samples.front().v_n,
                                      traj.samples.front().R_nb);
    const int step =
        static_cast<int>(std::llround(traj.rate_hz / spec.rate_hz));
    if (trial == 0) {
      n_epochs = ins.v_b.size();
      acc.assign(n_epochs, 0.0);
    }
    for (std::size_t k = 0; k < n_epochs; ++k) {
      const double e = (ins.v_b[k] - v_b_gt[k * step]).norm();
      acc[k] += e * e;
    }
  }
  for (double& a : acc) a = std::sqrt(a / n_trials);
  return acc;
}

std::string ins_velocity_csv(const InsVelocitySeries& s) {
  std::string out = "t,vx,vy,vz\n";
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    out += csv_row({fmt_num(s.t[k]), fmt_num(s.v_b[k].x()),
                    fmt_num(s.v_b[k].y()), fmt_num(s.v_b[k].z())});
  }
  return out;
}

}  // namespace insdvl
