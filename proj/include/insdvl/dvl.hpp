#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "insdvl/random.hpp"
#include "insdvl/trajectory.hpp"

namespace insdvl {

/// Beam-level error parameterization. Scale/bias are scalars common to the
/// four beams; optional per-beam overrides exist for robustness studies.
struct DvlSpec {
  double rate_hz = 5.0;
  double noise_sigma = 0.0;      // m/s, per beam
  double bias = 0.0;             // m/s, per beam
  double scale_factor = 0.0;     // dimensionless fraction
  double beam_pitch_alpha = deg2rad(20.0);
  std::optional<std::array<double, 4>> per_beam_bias;
  std::optional<std::array<double, 4>> per_beam_scale;
};

/// Rows are unit beam directions (cos psi_i sin a, sin psi_i sin a, cos a)
/// with psi_i = (i-1)*pi/2 + pi/4.
Eigen::Matrix<double, 4, 3> beam_matrix(double alpha_rad);

/// beams = H * v_d.
Eigen::Vector4d dvl_forward(const Eigen::Vector3d& v_d,
                            const Eigen::Matrix<double, 4, 3>& H);

/// beams*(1+s) + b + sigma*n, n iid standard normal per beam.
Eigen::Vector4d dvl_corrupt(const Eigen::Vector4d& beams, const DvlSpec& spec,
                            Rng& rng);

/// Least-squares velocity (H^T H)^{-1} H^T beams. Throws SingularGeometry
/// when cond(H^T H) > 1e12.
Eigen::Vector3d dvl_solve(const Eigen::Vector4d& beams,
                          const Eigen::Matrix<double, 4, 3>& H);

struct DvlSeries {
  double rate_hz = 0.0;
  std::vector<double> t;
  std::vector<Eigen::Vector3d> v_d;
};

/// Full forward chain at the DVL rate (nearest trajectory sample): the
/// ground-truth body velocity is expressed in the DVL frame through
/// body_to_dvl, pushed through the beams, corrupted, and solved back.
/// For a label attitude a (DVL-to-body, the module-wide convention) pass
/// body_to_dvl = euler_to_matrix(a).transpose(); the overload does so.
DvlSeries simulate_dvl(const Trajectory& traj,
                       const Eigen::Matrix3d& body_to_dvl,
                       const DvlSpec& spec, Rng& rng);
DvlSeries simulate_dvl(const Trajectory& traj, const EulerAngles& alignment,
                       const DvlSpec& spec, Rng& rng);

/// Columns: t, vx, vy, vz (DVL frame, m/s).
std::string dvl_series_csv(const DvlSeries& s);

}  // namespace insdvl
