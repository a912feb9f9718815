#include "insdvl/wahba.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "insdvl/errors.hpp"

namespace insdvl {

AlignmentEstimate svd_align(const PairedVelocityWindow& w) {
  const std::size_t n = w.size();
  if (n < 3 || w.v_d.size() != n) {
    throw LengthMismatch("paired window needs at least 3 equal-length rows");
  }
  Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    B += w.v_b[i] * w.v_d[i].transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (sv(1) < 1e-12 * sv(0) && sv(2) < 1e-12 * sv(0)) {
    throw DegenerateWindow(
        "velocity window spans fewer than two directions; the rotation "
        "about the data axis is unobservable");
  }
  const Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (U * V.transpose()).determinant());
  AlignmentEstimate est;
  est.R_hat = U * d.asDiagonal() * V.transpose();
  double cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cost += (w.v_b[i] - est.R_hat * w.v_d[i]).squaredNorm();
  }
  est.residual_cost = cost / static_cast<double>(n);
  return est;
}

PairedVelocityWindow pair_streams(const DvlSeries& dvl,
                                  const InsVelocitySeries& ins) {
  if (ins.t.empty()) throw LengthMismatch("empty INS stream");
  PairedVelocityWindow w;
  w.t = dvl.t;
  w.v_d = dvl.v_d;
  w.v_b.reserve(dvl.t.size());
  const int last = static_cast<int>(ins.t.size()) - 1;
  for (double t : dvl.t) {
    int idx = static_cast<int>(std::llround(t * ins.rate_hz));
    if (idx < 0) idx = 0;
    if (idx > last) idx = last;
    w.v_b.push_back(ins.v_b[idx]);
  }
  return w;
}

PairedVelocityWindow slice_window(const PairedVelocityWindow& w,
                                  double window_s) {
  const std::size_t n = w.size();
  if (n == 0) throw TooShort("empty paired stream");
  std::size_t count = 0;
  while (count < n && w.t[count] <= window_s + 1e-9) ++count;
  if (count < n && count == 0) throw TooShort("window precedes first epoch");
  if (w.t.back() + 1e-9 < window_s) {
    throw TooShort("paired stream shorter than the requested window");
  }
  PairedVelocityWindow out;
  out.t.assign(w.t.begin(), w.t.begin() + count);
  out.v_b.assign(w.v_b.begin(), w.v_b.begin() + count);
  out.v_d.assign(w.v_d.begin(), w.v_d.begin() + count);
  return out;
}

TrajectoryAlignmentResult svd_align_trajectory(
    const Trajectory& traj, const EulerAngles& alignment_gt,
    const DvlSpec& dvl_spec, const ImuSpec& imu_spec, double window_s,
    Rng& rng) {
  DvlSeries dvl = simulate_dvl(traj, alignment_gt, dvl_spec, rng);
  ImuSeries imu = imu_corrupt(traj, imu_spec, rng);
  InsVelocitySeries ins = mechanize(imu, traj.samples.front().v_n,
                                    traj.samples.front().R_nb);
  PairedVelocityWindow paired = pair_streams(dvl, ins);
  TrajectoryAlignmentResult res;
  res.estimate = svd_align(slice_window(paired, window_s));
  res.alignment_gt = alignment_gt;
  res.alignment_hat = matrix_to_euler(res.estimate.R_hat);
  res.geodesic_error_rad =
      geodesic_angle(euler_to_matrix(alignment_gt), res.estimate.R_hat);
  return res;
}

}  // namespace insdvl
