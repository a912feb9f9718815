#include "insdvl/so3.hpp"

#include <algorithm>
#include <cmath>

#include "insdvl/errors.hpp"

namespace insdvl {

Eigen::Matrix3d euler_to_matrix(const EulerAngles& e) {
  const double cr = std::cos(e.roll), sr = std::sin(e.roll);
  const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
  Eigen::Matrix3d R;
  R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return R;
}

EulerAngles matrix_to_euler(const Eigen::Matrix3d& R) {
  if (std::abs(R(2, 0)) >= 1.0 - 1e-9) {
    throw GimbalLock("matrix_to_euler: |pitch| at 90 deg, Euler angles undefined");
  }
  EulerAngles e;
  e.pitch = std::asin(-R(2, 0));
  e.roll = std::atan2(R(2, 1), R(2, 2));
  e.yaw = std::atan2(R(1, 0), R(0, 0));
  return e;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d S;
  S << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return S;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  if (theta < 1e-12) {
    return Eigen::Matrix3d::Identity() + hat(phi);
  }
  const Eigen::Matrix3d K = hat(phi / theta);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * K +
         (1.0 - std::cos(theta)) * K * K;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const double tr = R.trace();
  const double cos_theta = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0),
                          R(1, 0) - R(0, 1));
  if (theta < 1e-7) {
    // 0.5 * theta/sin(theta) ~ 0.5 * (1 + theta^2/6)
    return 0.5 * (1.0 + theta * theta / 6.0) * v;
  }
  if (theta > kPi - 1e-6) {
    // Axis from the dominant diagonal of (R + I)/2 = aa^T near theta = pi.
    const Eigen::Matrix3d A = 0.5 * (R + Eigen::Matrix3d::Identity());
    int k = 0;
    A.diagonal().maxCoeff(&k);
    Eigen::Vector3d axis;
    axis[k] = std::sqrt(std::max(A(k, k), 0.0));
    for (int i = 0; i < 3; ++i) {
      if (i != k) axis[i] = A(k, i) / axis[k];
    }
    axis.normalize();
    // Pick the sign consistent with the off-diagonal part (zero at exactly pi).
    if (axis.dot(v) < 0.0) axis = -axis;
    return theta * axis;
  }
  return 0.5 * theta / std::sin(theta) * v;
}

double geodesic_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
  return so3_log(Ra.transpose() * Rb).norm();
}

double rotation_defect(const Eigen::Matrix3d& R) {
  const Eigen::Matrix3d D = R.transpose() * R - Eigen::Matrix3d::Identity();
  return D.norm() + std::abs(R.determinant() - 1.0);
}

EulerAngles sample_alignment(double range_deg, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, range_deg);
  const double r = u(rng), p = u(rng), y = u(rng);
  return EulerAngles::from_deg(r, p, y);
}

std::vector<EulerAngles> grid_alignments(int levels_per_axis,
                                         double range_deg) {
  const int n = levels_per_axis;
  std::vector<double> levels(n, 0.0);
  for (int i = 0; i < n; ++i) {
    levels[i] = (n == 1) ? 0.0 : range_deg * i / (n - 1);
  }
  std::vector<EulerAngles> out;
  out.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out.push_back(EulerAngles::from_deg(levels[i], levels[j], levels[k]));
  return out;
}

}  // namespace insdvl
