#pragma once

#include <vector>

#include "insdvl/dvl.hpp"
#include "insdvl/imu.hpp"
#include "insdvl/so3.hpp"

namespace insdvl {

/// Paired body/DVL-frame velocities at common epochs.
struct PairedVelocityWindow {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> v_b;
  std::vector<Eigen::Vector3d> v_d;

  std::size_t size() const { return v_b.size(); }
};

struct AlignmentEstimate {
  Eigen::Matrix3d R_hat = Eigen::Matrix3d::Identity();  // maps v_d to v_b
  double residual_cost = 0.0;  // (1/N) sum ||v_b - R v_d||^2, (m/s)^2
};

/// Orthogonal-Procrustes fit of the rotation R minimizing
/// (1/N) sum ||v_b_i - R v_d_i||^2 over SO(3), via SVD of the 3x3
/// cross-covariance B = sum v_b_i v_d_i^T with the determinant-corrected
/// reconstruction. No centroid subtraction: the cost has no translation
/// term, so constant offsets (e.g. DVL bias) deliberately enter the fit.
/// Throws DegenerateWindow when the two smallest singular values of B are
/// both below 1e-12 of the largest (data spans fewer than two directions,
/// leaving the twist about the data axis free).
AlignmentEstimate svd_align(const PairedVelocityWindow& w);

/// For each DVL epoch takes the temporally nearest INS epoch's v_b.
PairedVelocityWindow pair_streams(const DvlSeries& dvl,
                                  const InsVelocitySeries& ins);

/// First window_s seconds of the paired streams (from t = 0 inclusive).
/// Throws TooShort when the pairing holds fewer epochs.
PairedVelocityWindow slice_window(const PairedVelocityWindow& w,
                                  double window_s);

struct TrajectoryAlignmentResult {
  AlignmentEstimate estimate;
  EulerAngles alignment_gt;
  EulerAngles alignment_hat;
  double geodesic_error_rad = 0.0;
};

/// End-to-end single trial: simulate DVL under alignment_gt, corrupt and
/// mechanize the INS stream, pair, slice the first window_s seconds, fit.
TrajectoryAlignmentResult svd_align_trajectory(
    const Trajectory& traj, const EulerAngles& alignment_gt,
    const DvlSpec& dvl_spec, const ImuSpec& imu_spec, double window_s,
    Rng& rng);

}  // namespace insdvl
