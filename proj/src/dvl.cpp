#include "insdvl/dvl.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"

namespace insdvl {

Eigen::Matrix<double, 4, 3> beam_matrix(double alpha_rad) {
  Eigen::Matrix<double, 4, 3> H;
  for (int i = 0; i < 4; ++i) {
    const double psi = i * (kPi / 2.0) + kPi / 4.0;
    H(i, 0) = std::cos(psi) * std::sin(alpha_rad);
    H(i, 1) = std::sin(psi) * std::sin(alpha_rad);
    H(i, 2) = std::cos(alpha_rad);
  }
  return H;
}

Eigen::Vector4d dvl_forward(const Eigen::Vector3d& v_d,
                            const Eigen::Matrix<double, 4, 3>& H) {
  return H * v_d;
}

Eigen::Vector4d dvl_corrupt(const Eigen::Vector4d& beams, const DvlSpec& spec,
                            Rng& rng) {
  Eigen::Vector4d out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 4; ++i) {
    const double s =
        spec.per_beam_scale ? (*spec.per_beam_scale)[i] : spec.scale_factor;
    const double b = spec.per_beam_bias ? (*spec.per_beam_bias)[i] : spec.bias;
    const double n = spec.noise_sigma > 0.0 ? spec.noise_sigma * gauss(rng) : 0.0;
    out[i] = beams[i] * (1.0 + s) + b + n;
  }
  return out;
}

Eigen::Vector3d dvl_solve(const Eigen::Vector4d& beams,
                          const Eigen::Matrix<double, 4, 3>& H) {
  const Eigen::Matrix3d HtH = H.transpose() * H;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(HtH);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > 1e12) {
    throw SingularGeometry("beam geometry does not determine a 3D velocity");
  }
  return HtH.ldlt().solve(H.transpose() * beams);
}

DvlSeries simulate_dvl(const Trajectory& traj,
                       const Eigen::Matrix3d& body_to_dvl,
                       const DvlSpec& spec, Rng& rng) {
  if (spec.rate_hz > traj.rate_hz) {
    throw LengthMismatch("dvl rate exceeds trajectory rate");
  }
  const Eigen::Matrix<double, 4, 3> H = beam_matrix(spec.beam_pitch_alpha);
  DvlSeries out;
  out.rate_hz = spec.rate_hz;
  const int n_epochs =
      static_cast<int>(std::floor(traj.duration_s() * spec.rate_hz)) + 1;
  out.t.reserve(n_epochs);
  out.v_d.reserve(n_epochs);
  const int last = static_cast<int>(traj.samples.size()) - 1;
  for (int k = 0; k < n_epochs; ++k) {
    const double t = k / spec.rate_hz;
    int idx = static_cast<int>(std::llround(t * traj.rate_hz));
    if (idx > last) idx = last;
    const TrajectorySample& s = traj.samples[idx];
    const Eigen::Vector3d v_b = s.R_nb.transpose() * s.v_n;
    const Eigen::Vector3d v_d_true = body_to_dvl * v_b;
    const Eigen::Vector4d beams = dvl_corrupt(dvl_forward(v_d_true, H), spec, rng);
    out.t.push_back(t);
    out.v_d.push_back(dvl_solve(beams, H));
  }
  return out;
}

DvlSeries simulate_dvl(const Trajectory& traj, const EulerAngles& alignment,
                       const DvlSpec& spec, Rng& rng) {
  return simulate_dvl(traj, euler_to_matrix(alignment).transpose().eval(),
                      spec, rng);
}

std::string dvl_series_csv(const DvlSeries& s) {
  std::string out = "t,vx,vy,vz\n";
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    out += csv_row({fmt_num(s.t[k]), fmt_num(s.v_d[k].x()),
                    fmt_num(s.v_d[k].y()), fmt_num(s.v_d[k].z())});
  }
  return out;
}

}  // namespace insdvl
