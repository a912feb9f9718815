#pragma once

#include <Eigen/Dense>
#include <vector>

#include "insdvl/random.hpp"

namespace insdvl {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Roll/pitch/yaw in radians. Convention is intrinsic ZYX (yaw-pitch-roll),
/// R = Rz(yaw) * Ry(pitch) * Rx(roll), the aerospace standard for NED frames.
/// The same convention is used everywhere: label generation, the SVD
/// baseline, network outputs and metrics.
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;

  static EulerAngles from_deg(double roll_deg, double pitch_deg,
                              double yaw_deg) {
    return {deg2rad(roll_deg), deg2rad(pitch_deg), deg2rad(yaw_deg)};
  }
  Eigen::Vector3d vec() const { return {roll, pitch, yaw}; }
  Eigen::Vector3d vec_deg() const {
    return {rad2deg(roll), rad2deg(pitch), rad2deg(yaw)};
  }
};

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Eigen::Matrix3d euler_to_matrix(const EulerAngles& e);

/// Inverse of euler_to_matrix. Throws GimbalLock when |R(2,0)| >= 1 - 1e-9.
EulerAngles matrix_to_euler(const Eigen::Matrix3d& R);

/// Skew-symmetric cross-product matrix: hat(w) * v == w x v.
Eigen::Matrix3d hat(const Eigen::Vector3d& w);

/// Rodrigues formula, exp(hat(phi)).
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);

/// Log map SO(3) -> so(3); returned vector has norm equal to the geodesic
/// rotation angle (<= pi). Uses a Taylor branch near 0 and axis extraction
/// from the diagonal near pi.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);

/// Geodesic angle between two rotations, radians.
double geodesic_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb);

/// Orthonormality + det defect, Frobenius norm of (R^T R - I) plus |det - 1|.
double rotation_defect(const Eigen::Matrix3d& R);

/// Each angle uniform in [0, range_deg] degrees, returned in radians.
EulerAngles sample_alignment(double range_deg, Rng& rng);

/// Cartesian grid of levels^3 Euler triples evenly spaced over
/// [0, range_deg] per axis, lexicographic in (roll, pitch, yaw) with yaw
/// varying fastest. levels == 1 yields the single triple (0,0,0).
std::vector<EulerAngles> grid_alignments(int levels_per_axis, double range_deg);

}  // namespace insdvl
