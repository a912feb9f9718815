#pragma once

#include <string>
#include <vector>

#include "insdvl/so3.hpp"

namespace insdvl {

/// Ground-truth kinematic state plus ideal inertial readings at one instant.
/// f_b = R_nb^T (a_n - g_n) with g_n = (0,0,+g) in NED.
struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector3d p_n = Eigen::Vector3d::Zero();
  Eigen::Vector3d v_n = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R_nb = Eigen::Matrix3d::Identity();
  Eigen::Vector3d f_b = Eigen::Vector3d::Zero();
  Eigen::Vector3d w_b = Eigen::Vector3d::Zero();
};

struct Trajectory {
  double rate_hz = 0.0;
  std::vector<TrajectorySample> samples;

  double duration_s() const {
    return samples.empty() ? 0.0 : samples.back().t;
  }
};

inline constexpr double kGravity = 9.80665;  // m/s^2, NED +down

/// Level flight at constant speed and heading. w_b = 0, f_b = (0,0,-g).
Trajectory gen_straight(double duration_s, double speed_mps,
                        double heading_rad, double rate_hz);

/// Level coordinated turn: psi(t) = yaw_rate * t, velocity along body x,
/// circle of radius speed/|yaw_rate|. w_b = (0,0,yaw_rate),
/// f_b = (0, speed*yaw_rate, -g), all exact closed forms.
Trajectory gen_turn(double duration_s, double speed_mps,
                    double yaw_rate_rad_s, double rate_hz);

/// Sideslip/heave weave superimposed on a turn. An ideal coordinated turn
/// keeps the body-frame velocity pinned to (speed,0,0), which leaves the
/// paired-velocity rotation fit rank-1 (the twist about the velocity axis
/// drops out). Vehicles with hydrodynamics do not fly that way: holding a
/// turn excites a persistent sideslip weave. This generator reproduces that
/// excitation with closed-form kinematics.
///
/// The sideslip carries two tones. Their periods divide the analysis
/// windows, which keeps each tone zero-mean per window so the noise-free
/// fit stays clean under the first-order velocity integrator; the phases
/// control how strongly inertial bias ramps project onto the weave (the
/// cos component of a tone is what a ramp cannot mimic over a half-period
/// window). The heave channel exists for experiments but defaults off: a
/// vertical weave feeds its own rate back through the integrator's step
/// bias and contaminates the noise-free fit at the millidegree level.
struct TurnExcitation {
  double slip_amp_rad = 0.0;      // fast sideslip tone amplitude
  double slip_period_s = 10.0;
  double slip_phase_rad = 0.0;
  double slip2_amp_rad = 0.0;     // slow sideslip tone amplitude
  double slip2_period_s = 50.0;
  double slip2_phase_rad = 0.0;
  double heave_amp_rad = 0.0;     // vertical flight-path angle amplitude
  double heave_period_s = 10.0;
  double heave_phase_rad = 0.0;
  double gate_s = 0.0;            // smoothstep ramp-in of the envelope
};

/// Turn with time-varying body velocity direction:
///   v_b = speed * (cos b cos c, sin b cos c, sin c),
///   b(t) = [s1 sin(2 pi t/T1 + p1) + s2 sin(2 pi t/T2 + p2)] * w(t),
///   c(t) = heave_amp * sin(2 pi t/Tc + pc) * w(t),
/// where w(t) is a smoothstep envelope over [0, gate_s] so the excitation
/// rates start at exactly zero. Attitude is still the level turn,
/// w_b = (0,0,yaw_rate). f_b is exact; position is integrated numerically
/// (it feeds only exports, not the estimators).
Trajectory gen_turn_excited(double duration_s, double speed_mps,
                            double yaw_rate_rad_s, double rate_hz,
                            const TurnExcitation& ex);

/// v_b(t) = R_nb(t)^T v_n(t), one row per sample.
std::vector<Eigen::Vector3d> body_velocity_gt(const Trajectory& traj);

/// Columns: t, p_n(3), v_n(3), euler(3, degrees), f_b(3), w_b(3).
std::string trajectory_csv(const Trajectory& traj);

}  // namespace insdvl
