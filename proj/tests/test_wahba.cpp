#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "insdvl/bench.hpp"
#include "insdvl/errors.hpp"
#include "insdvl/random.hpp"
#include "insdvl/so3.hpp"
#include "insdvl/wahba.hpp"

using namespace insdvl;

namespace {

// Deterministic generic vectors, no two collinear.
std::vector<Eigen::Vector3d> generic_vectors(int n) {
  std::vector<Eigen::Vector3d> v;
  Rng rng(1234);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < n; ++i) v.emplace_back(u(rng), u(rng), u(rng));
  return v;
}

PairedVelocityWindow make_window(const std::vector<Eigen::Vector3d>& v_b,
                                 const Eigen::Matrix3d& R_b_from_d) {
  PairedVelocityWindow w;
  for (std::size_t i = 0; i < v_b.size(); ++i) {
    w.t.push_back(0.2 * static_cast<double>(i));
    w.v_b.push_back(v_b[i]);
    w.v_d.push_back(R_b_from_d.transpose() * v_b[i]);
  }
  return w;
}

}  // namespace

TEST_CASE("identical sets give the identity") {
  const auto w = make_window(generic_vectors(10), Eigen::Matrix3d::Identity());
  const AlignmentEstimate est = svd_align(w);
  CHECK((est.R_hat - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(est.residual_cost < 1e-18);
}

TEST_CASE("exact rotation recovery") {
  const Eigen::Matrix3d R = euler_to_matrix(EulerAngles::from_deg(3, 2, 4));
  const auto w = make_window(generic_vectors(10), R);
  const AlignmentEstimate est = svd_align(w);
  CHECK(geodesic_angle(est.R_hat, R) < 1e-9);
  CHECK(est.residual_cost < 1e-18);
}

TEST_CASE("residual cost equals the mean squared residual") {
  const Eigen::Matrix3d R = euler_to_matrix(EulerAngles::from_deg(3, 2, 4));
  auto w = make_window(generic_vectors(12), R);
  // Perturb one side so the fit is inexact.
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.v_b[i] += 0.01 * Eigen::Vector3d(std::sin(3.0 * i), std::cos(2.0 * i),
                                       std::sin(1.0 + i));
  }
  const AlignmentEstimate est = svd_align(w);
  double want = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    want += (w.v_b[i] - est.R_hat * w.v_d[i]).squaredNorm();
  }
  want /= static_cast<double>(w.size());
  CHECK(est.residual_cost == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rank-1 data is degenerate") {
  std::vector<Eigen::Vector3d> rows(10, Eigen::Vector3d(2, 0, 0));
  const auto w = make_window(rows, Eigen::Matrix3d::Identity());
  CHECK_THROWS_AS(svd_align(w), DegenerateWindow);
}

TEST_CASE("coplanar data still pins the rotation") {
  // Planar weave: directions vary in the xy plane only, rank-2 covariance.
  // One vanishing singular value must not trip the degeneracy guard.
  std::vector<Eigen::Vector3d> rows;
  for (int i = 0; i < 8; ++i) {
    const double b = 0.05 * std::sin(0.7 * i + 0.3);
    rows.emplace_back(2 * std::cos(b), 2 * std::sin(b), 0.0);
  }
  const Eigen::Matrix3d R = euler_to_matrix(EulerAngles::from_deg(2, 1, 3));
  const AlignmentEstimate est = svd_align(make_window(rows, R));
  CHECK(geodesic_angle(est.R_hat, R) < 1e-9);
}

TEST_CASE("reflection branch returns a proper rotation") {
  // v_d mirrors v_b through the xy plane, driving det(B) negative.
  PairedVelocityWindow w;
  for (const Eigen::Vector3d& v : generic_vectors(10)) {
    w.t.push_back(0.2 * w.t.size());
    w.v_b.push_back(v);
    w.v_d.emplace_back(v.x(), v.y(), -v.z());
  }
  const AlignmentEstimate est = svd_align(w);
  CHECK(rotation_defect(est.R_hat) < 1e-9);
  CHECK(est.R_hat.determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("rotation and scale invariance") {
  const Eigen::Matrix3d R = euler_to_matrix(EulerAngles::from_deg(3, 2, 4));
  auto w = make_window(generic_vectors(10), R);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.v_b[i] += 0.01 * Eigen::Vector3d(std::sin(3.0 * i), std::cos(2.0 * i),
                                       std::sin(1.0 + i));
  }
  const AlignmentEstimate base = svd_align(w);

  // Common left rotation of the body side maps the estimate to Q * R_hat.
  const Eigen::Matrix3d Q = euler_to_matrix({0.5, -0.3, 1.2});
  PairedVelocityWindow wq = w;
  for (auto& v : wq.v_b) v = Q * v;
  const AlignmentEstimate rot = svd_align(wq);
  CHECK(geodesic_angle(rot.R_hat, Q * base.R_hat) < 1e-9);

  PairedVelocityWindow ws = w;
  const double lambda = 3.7;
  for (auto& v : ws.v_b) v *= lambda;
  for (auto& v : ws.v_d) v *= lambda;
  const AlignmentEstimate scl = svd_align(ws);
  CHECK((scl.R_hat - base.R_hat).norm() < 1e-12);
  CHECK(scl.residual_cost ==
        doctest::Approx(lambda * lambda * base.residual_cost).epsilon(1e-9));
}

TEST_CASE("paired epochs use the nearest INS sample") {
  DvlSeries dvl;
  dvl.rate_hz = 3.0;
  InsVelocitySeries ins;
  ins.rate_hz = 100.0;
  for (int i = 0; i <= 1000; ++i) {
    ins.t.push_back(i * 0.01);
    ins.v_b.emplace_back(static_cast<double>(i), 0, 0);
  }
  for (int k = 0; k <= 29; ++k) {
    dvl.t.push_back(k / 3.0);
    dvl.v_d.emplace_back(0, 0, 0);
  }
  const PairedVelocityWindow w = pair_streams(dvl, ins);
  REQUIRE(w.size() == dvl.t.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    // v_b encodes the picked index; it must be the temporally nearest epoch.
    const double picked_t = w.v_b[i].x() * 0.01;
    CHECK(std::abs(picked_t - w.t[i]) <= 0.005 + 1e-12);
  }
}

TEST_CASE("window slicing bounds") {
  DvlSeries dvl;
  dvl.rate_hz = 5.0;
  InsVelocitySeries ins;
  ins.rate_hz = 5.0;
  for (int i = 0; i < 10; ++i) {
    dvl.t.push_back(i * 0.2);
    dvl.v_d.emplace_back(1, 0, 0);
    ins.t.push_back(i * 0.2);
    ins.v_b.emplace_back(1, 0, 0);
  }
  const PairedVelocityWindow w = pair_streams(dvl, ins);
  CHECK(slice_window(w, 1.0).size() == 6);  // t in [0, 1] inclusive
  CHECK_THROWS_AS(slice_window(w, 50.0), TooShort);
}

TEST_CASE("noise-free trajectory alignment is exact to the budget") {
  const Trajectory traj = gen_turn_excited(200, 2.0, deg2rad(0.9), 100,
                                           turn_excitation_default());
  DvlSpec clean;
  ImuSpec ideal;
  ideal.rate_hz = 100;
  const EulerAngles gt = EulerAngles::from_deg(2, 1, 4);
  for (double window_s : {5.0, 25.0, 100.0}) {
    Rng rng(77);
    const TrajectoryAlignmentResult r =
        svd_align_trajectory(traj, gt, clean, ideal, window_s, rng);
    CHECK(rad2deg(r.geodesic_error_rad) < 0.01);
  }
}

TEST_CASE("constant-velocity window propagates the degeneracy") {
  const Trajectory traj = gen_straight(60, 2.0, 0.0, 100);
  DvlSpec clean;
  ImuSpec ideal;
  ideal.rate_hz = 100;
  Rng rng(9);
  CHECK_THROWS_AS(svd_align_trajectory(traj, EulerAngles::from_deg(1, 1, 1),
                                       clean, ideal, 25.0, rng),
                  DegenerateWindow);
}

TEST_CASE("median geodesic error degrades monotonically with bias") {
  const Trajectory traj = gen_turn_excited(200, 2.0, deg2rad(0.9), 100,
                                           turn_excitation_default());
  DvlSpec dvl;
  dvl.noise_sigma = 0.008;
  dvl.bias = 0.001;
  dvl.scale_factor = 0.005;
  const EulerAngles gt = EulerAngles::from_deg(2, 1, 3);
  const std::vector<double> accel = {0.1, 1, 5, 10};
  const std::vector<double> gyro = {1, 10, 25};
  // Long windows: the short-window fit saturates at the high-bias corner
  // and stops resolving the gyro axis.
  const std::vector<double> windows = {50, 75, 100};
  const int n_trials = 50;

  std::vector<double> cell(accel.size() * gyro.size(), 0.0);
  for (std::size_t ia = 0; ia < accel.size(); ++ia) {
    for (std::size_t ig = 0; ig < gyro.size(); ++ig) {
      ImuSpec imu;
      imu.rate_hz = 100;
      imu.accel_bias_mg = accel[ia];
      imu.gyro_bias_deg_h = gyro[ig];
      imu.accel_density_mg_sqrt_hz = 0.001;
      imu.gyro_density_deg_sqrt_h = 0.01;
      double best = 0.0;
      for (std::size_t iw = 0; iw < windows.size(); ++iw) {
        std::vector<double> errs;
        for (int t = 0; t < n_trials; ++t) {
          // Seeds ignore the cell so that cell ordering reflects the bias
          // magnitudes, not Monte-Carlo luck (common random numbers).
          Rng rng(derive_seed(555, seed_domain::trial,
                              static_cast<std::uint64_t>(t) * 8 + iw));
          errs.push_back(svd_align_trajectory(traj, gt, dvl, imu, windows[iw],
                                              rng)
                             .geodesic_error_rad);
        }
        std::nth_element(errs.begin(), errs.begin() + n_trials / 2, errs.end());
        const double med = errs[n_trials / 2];
        if (iw == 0 || med < best) best = med;
      }
      cell[ia * gyro.size() + ig] = best;
    }
  }

  std::vector<double> accel_marginal(accel.size(), 0.0);
  std::vector<double> gyro_marginal(gyro.size(), 0.0);
  for (std::size_t ia = 0; ia < accel.size(); ++ia) {
    for (std::size_t ig = 0; ig < gyro.size(); ++ig) {
      accel_marginal[ia] += cell[ia * gyro.size() + ig] / gyro.size();
      gyro_marginal[ig] += cell[ia * gyro.size() + ig] / accel.size();
    }
  }
  CHECK(spearman_rho(accel, accel_marginal) >= 0.9);
  CHECK(spearman_rho(gyro, gyro_marginal) >= 0.9);
}
