#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <random>

#include "insdvl/errors.hpp"
#include "insdvl/so3.hpp"

using namespace insdvl;

namespace {

// Independent quaternion oracle for rotation angles. Hamilton convention,
// w first; composition order matches R = Rz * Ry * Rx.
using Quat = std::array<double, 4>;

Quat quat_mul(const Quat& a, const Quat& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

Quat axis_quat(int axis, double angle) {
  Quat q{std::cos(angle / 2), 0, 0, 0};
  q[1 + axis] = std::sin(angle / 2);
  return q;
}

double quat_angle(const EulerAngles& e) {
  Quat q = quat_mul(axis_quat(2, e.yaw),
                    quat_mul(axis_quat(1, e.pitch), axis_quat(0, e.roll)));
  const double s = std::sqrt(q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  return 2.0 * std::atan2(s, std::abs(q[0]));
}

}  // namespace

TEST_CASE("euler_to_matrix hand values") {
  CHECK(euler_to_matrix({0, 0, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-15));

  Eigen::Matrix3d rz90;
  rz90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((euler_to_matrix({0, 0, kPi / 2}) - rz90).norm() < 1e-15);
}

TEST_CASE("euler roundtrip") {
  const EulerAngles e = EulerAngles::from_deg(1, 2, 3);
  const EulerAngles back = matrix_to_euler(euler_to_matrix(e));
  CHECK(std::abs(back.roll - e.roll) < 1e-12);
  CHECK(std::abs(back.pitch - e.pitch) < 1e-12);
  CHECK(std::abs(back.yaw - e.yaw) < 1e-12);

  const EulerAngles f = EulerAngles::from_deg(5, 5, 5);
  const EulerAngles fb = matrix_to_euler(euler_to_matrix(f));
  CHECK(std::abs(fb.roll - f.roll) < 1e-12);
  CHECK(std::abs(fb.pitch - f.pitch) < 1e-12);
  CHECK(std::abs(fb.yaw - f.yaw) < 1e-12);
}

TEST_CASE("matrix_to_euler identity and gimbal lock") {
  const EulerAngles z = matrix_to_euler(Eigen::Matrix3d::Identity());
  CHECK(z.roll == 0.0);
  CHECK(z.pitch == 0.0);
  CHECK(z.yaw == 0.0);

  // Pitch +90 degrees drives R(2,0) to -1, the singular configuration.
  const Eigen::Matrix3d lock = euler_to_matrix({0, kPi / 2, 0});
  CHECK(lock(2, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(matrix_to_euler(lock), GimbalLock);
}

TEST_CASE("hat map") {
  Eigen::Matrix3d hz;
  hz << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK(hat({0, 0, 1}) == hz);
  CHECK(hat({0, 0, 0}).isZero(0.0));

  const Eigen::Vector3d w(1, 2, 3);
  CHECK((hat(w) * w).isZero(0.0));
  CHECK((hat(w) + hat(w).transpose()).isZero(0.0));
}

TEST_CASE("so3_log hand values and quaternion oracle") {
  CHECK(so3_log(Eigen::Matrix3d::Identity()).isZero(0.0));
  CHECK((so3_log(euler_to_matrix({0, 0, 0.3})) - Eigen::Vector3d(0, 0, 0.3))
            .norm() < 1e-12);

  const EulerAngles e = EulerAngles::from_deg(1, 1, 1);
  const double oracle = quat_angle(e);
  CHECK(so3_log(euler_to_matrix(e)).norm() ==
        doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("log/exp roundtrip up to 3 rad") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> mag(0, 3.0);
  for (int i = 0; i < 500; ++i) {
    Eigen::Vector3d axis(u(gen), u(gen), u(gen));
    if (axis.norm() < 1e-6) continue;
    const Eigen::Vector3d phi = axis.normalized() * mag(gen);
    const Eigen::Matrix3d R = so3_exp(phi);
    CHECK(rotation_defect(R) < 1e-9);
    CHECK((so3_exp(so3_log(R)) - R).norm() < 1e-9);
  }
}

TEST_CASE("euler_to_matrix stays in SO(3) over the full grid") {
  for (const EulerAngles& e : grid_alignments(17, 5.0)) {
    CHECK(rotation_defect(euler_to_matrix(e)) < 1e-9);
  }
}

TEST_CASE("euler roundtrip over the regular pitch range") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ang(-kPi + 0.01, kPi - 0.01);
  std::uniform_real_distribution<double> pit(-kPi / 2 + 0.05, kPi / 2 - 0.05);
  for (int i = 0; i < 1000; ++i) {
    const EulerAngles e{ang(gen), pit(gen), ang(gen)};
    const EulerAngles b = matrix_to_euler(euler_to_matrix(e));
    CHECK(std::abs(b.roll - e.roll) < 1e-9);
    CHECK(std::abs(b.pitch - e.pitch) < 1e-9);
    CHECK(std::abs(b.yaw - e.yaw) < 1e-9);
  }
}

TEST_CASE("geodesic_angle basics") {
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  CHECK(geodesic_angle(I, I) == doctest::Approx(0.0));
  CHECK(geodesic_angle(I, euler_to_matrix({0, 0, 0.2})) ==
        doctest::Approx(0.2).epsilon(1e-12));
  // Bi-invariance: a common left factor cancels.
  const Eigen::Matrix3d Q = euler_to_matrix({0.4, -0.2, 1.1});
  const Eigen::Matrix3d A = euler_to_matrix({0.05, 0.02, -0.03});
  const Eigen::Matrix3d B = euler_to_matrix({0.01, -0.04, 0.06});
  CHECK(geodesic_angle(Q * A, Q * B) ==
        doctest::Approx(geodesic_angle(A, B)).epsilon(1e-12));
}

TEST_CASE("sample_alignment range and determinism") {
  Rng r0(123);
  const EulerAngles z = sample_alignment(0.0, r0);
  CHECK(z.roll == 0.0);
  CHECK(z.pitch == 0.0);
  CHECK(z.yaw == 0.0);

  Rng ra(99), rb(99);
  const EulerAngles a = sample_alignment(5.0, ra);
  const EulerAngles b = sample_alignment(5.0, rb);
  CHECK(a.roll == b.roll);
  CHECK(a.pitch == b.pitch);
  CHECK(a.yaw == b.yaw);

  Rng rc(1);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const int n = 10000;
  for (int i = 0; i < n; ++i) mean += sample_alignment(5.0, rc).vec_deg();
  mean /= n;
  for (int axis = 0; axis < 3; ++axis) {
    CHECK(mean(axis) > 2.3);
    CHECK(mean(axis) < 2.7);
  }
}

TEST_CASE("grid_alignments counts and corners") {
  CHECK(grid_alignments(17, 5.0).size() == 4913);

  const auto one = grid_alignments(1, 5.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].roll == 0.0);
  CHECK(one[0].pitch == 0.0);
  CHECK(one[0].yaw == 0.0);

  const auto corners = grid_alignments(2, 5.0);
  REQUIRE(corners.size() == 8);
  const double hi = deg2rad(5.0);
  for (const EulerAngles& e : corners) {
    for (double v : {e.roll, e.pitch, e.yaw}) {
      CHECK((v == 0.0 || v == doctest::Approx(hi).epsilon(1e-15)));
    }
  }
  // Lexicographic in (roll, pitch, yaw), yaw fastest.
  CHECK(corners[1].roll == 0.0);
  CHECK(corners[1].pitch == 0.0);
  CHECK(corners[1].yaw == doctest::Approx(hi).epsilon(1e-15));
}
