#include "insdvl/trajectory.hpp"

#include <cmath>

#include "insdvl/csv.hpp"

namespace insdvl {

namespace {

int sample_count(double duration_s, double rate_hz) {
  return static_cast<int>(std::llround(duration_s * rate_hz)) + 1;
}

Eigen::Matrix3d rz(double psi) {
  return euler_to_matrix({0.0, 0.0, psi});
}

}  // namespace

Trajectory gen_straight(double duration_s, double speed_mps,
                        double heading_rad, double rate_hz) {
  Trajectory traj;
  traj.rate_hz = rate_hz;
  const int n = sample_count(duration_s, rate_hz);
  traj.samples.resize(n);
  const Eigen::Matrix3d R = rz(heading_rad);
  const Eigen::Vector3d v_n =
      speed_mps * Eigen::Vector3d(std::cos(heading_rad),
                                  std::sin(heading_rad), 0.0);
  for (int k = 0; k < n; ++k) {
    TrajectorySample& s = traj.samples[k];
    s.t = k / rate_hz;
    s.p_n = v_n * s.t;
    s.v_n = v_n;
    s.R_nb = R;
    s.f_b = Eigen::Vector3d(0.0, 0.0, -kGravity);
    s.w_b = Eigen::Vector3d::Zero();
  }
  return traj;
}

Trajectory gen_turn(double duration_s, double speed_mps,
                    double yaw_rate_rad_s, double rate_hz) {
  Trajectory traj;
  traj.rate_hz = rate_hz;
  const int n = sample_count(duration_s, rate_hz);
  traj.samples.resize(n);
  const double w = yaw_rate_rad_s;
  const Eigen::Vector3d f_b(0.0, speed_mps * w, -kGravity);
  for (int k = 0; k < n; ++k) {
    TrajectorySample& s = traj.samples[k];
    s.t = k / rate_hz;
    const double psi = w * s.t;
    s.R_nb = rz(psi);
    s.v_n = speed_mps * Eigen::Vector3d(std::cos(psi), std::sin(psi), 0.0);
    // Integral of v_n from 0, a circle of radius speed/w.
    s.p_n = (speed_mps / w) *
            Eigen::Vector3d(std::sin(psi), 1.0 - std::cos(psi), 0.0);
    s.f_b = f_b;
    s.w_b = Eigen::Vector3d(0.0, 0.0, w);
  }
  return traj;
}

namespace {

// value and derivative of amp*sin(2 pi t/T + phase)*smoothstep(t/gate)
void gated_sine(double t, double amp, double period, double phase,
                double gate, double& y, double& ydot) {
  const double om = 2.0 * kPi / period;
  const double s = std::sin(om * t + phase);
  const double c = std::cos(om * t + phase);
  double w = 1.0, wdot = 0.0;
  if (gate > 0.0 && t < gate) {
    const double u = t / gate;
    w = u * u * (3.0 - 2.0 * u);
    wdot = 6.0 * u * (1.0 - u) / gate;
  }
  y = amp * s * w;
  ydot = amp * (om * c * w + s * wdot);
}

}  // namespace

Trajectory gen_turn_excited(double duration_s, double speed_mps,
                            double yaw_rate_rad_s, double rate_hz,
                            const TurnExcitation& ex) {
  Trajectory traj;
  traj.rate_hz = rate_hz;
  const int n = sample_count(duration_s, rate_hz);
  traj.samples.resize(n);
  const double w = yaw_rate_rad_s;
  const Eigen::Vector3d g_b(0.0, 0.0, -kGravity);  // -R^T g_n for level R

  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_prev = Eigen::Vector3d::Zero();
  const double dt = 1.0 / rate_hz;
  for (int k = 0; k < n; ++k) {
    TrajectorySample& s = traj.samples[k];
    s.t = k / rate_hz;
    const double t = s.t;
    double b1, b1dot, b2, b2dot, c, cdot;
    gated_sine(t, ex.slip_amp_rad, ex.slip_period_s, ex.slip_phase_rad,
               ex.gate_s, b1, b1dot);
    gated_sine(t, ex.slip2_amp_rad, ex.slip2_period_s, ex.slip2_phase_rad,
               ex.gate_s, b2, b2dot);
    gated_sine(t, ex.heave_amp_rad, ex.heave_period_s, ex.heave_phase_rad,
               ex.gate_s, c, cdot);
    const double b = b1 + b2, bdot = b1dot + b2dot;

    const Eigen::Vector3d v_b =
        speed_mps * Eigen::Vector3d(std::cos(b) * std::cos(c),
                                    std::sin(b) * std::cos(c), std::sin(c));
    const Eigen::Vector3d vdot_b =
        speed_mps *
        Eigen::Vector3d(
            -bdot * std::sin(b) * std::cos(c) - cdot * std::cos(b) * std::sin(c),
            bdot * std::cos(b) * std::cos(c) - cdot * std::sin(b) * std::sin(c),
            cdot * std::cos(c));

    const double psi = w * t;
    s.R_nb = rz(psi);
    s.v_n = s.R_nb * v_b;
    s.w_b = Eigen::Vector3d(0.0, 0.0, w);
    // f_b = R^T(a_n - g_n) with a_n = R(hat(w_b) v_b + vdot_b).
    s.f_b = s.w_b.cross(v_b) + vdot_b + g_b;

    // Position by trapezoid; it feeds only the CSV export, not the
    // estimators, so second-order accuracy is enough.
    if (k > 0) p += 0.5 * dt * (v_prev + s.v_n);
    s.p_n = p;
    v_prev = s.v_n;
  }
  return traj;
}

std::vector<Eigen::Vector3d> body_velocity_gt(const Trajectory& traj) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(traj.samples.size());
  for (const TrajectorySample& s : traj.samples) {
    out.push_back(s.R_nb.transpose() * s.v_n);
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out =
      "t,p_n_x,p_n_y,p_n_z,v_n_x,v_n_y,v_n_z,roll_deg,pitch_deg,yaw_deg,"
      "f_b_x,f_b_y,f_b_z,w_b_x,w_b_y,w_b_z\n";
  for (const TrajectorySample& s : traj.samples) {
    const EulerAngles e = matrix_to_euler(s.R_nb);
    std::vector<std::string> cells;
    cells.push_back(fmt_num(s.t));
    for (int i = 0; i < 3; ++i) cells.push_back(fmt_num(s.p_n[i]));
    for (int i = 0; i < 3; ++i) cells.push_back(fmt_num(s.v_n[i]));
    const Eigen::Vector3d e_deg = e.vec_deg();
    for (int i = 0; i < 3; ++i) cells.push_back(fmt_num(e_deg[i]));
    for (int i = 0; i < 3; ++i) cells.push_back(fmt_num(s.f_b[i]));
    for (int i = 0; i < 3; ++i) cells.push_back(fmt_num(s.w_b[i]));
    out += csv_row(cells);
  }
  return out;
}

}  // namespace insdvl
