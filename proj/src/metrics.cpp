#include "insdvl/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "insdvl/csv.hpp"
#include "insdvl/errors.hpp"

namespace insdvl {

namespace {

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw LengthMismatch("truth and estimate counts differ");
  if (a == 0) throw LengthMismatch("empty evaluation set");
}

std::vector<Eigen::Matrix3d> to_matrices(const std::vector<EulerAngles>& e) {
  std::vector<Eigen::Matrix3d> out;
  out.reserve(e.size());
  for (const EulerAngles& a : e) out.push_back(euler_to_matrix(a));
  return out;
}

}  // namespace

double rmse_deg(const std::vector<EulerAngles>& truth,
                const std::vector<EulerAngles>& est) {
  check_sizes(truth.size(), est.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Eigen::Vector3d d = truth[i].vec_deg() - est[i].vec_deg();
    ss += d.squaredNorm();
  }
  return std::sqrt(ss / static_cast<double>(truth.size()));
}

double aoe_deg(const std::vector<Eigen::Matrix3d>& truth,
               const std::vector<Eigen::Matrix3d>& est) {
  check_sizes(truth.size(), est.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double ang = geodesic_angle(truth[i], est[i]);
    ss += ang * ang;
  }
  return rad2deg(std::sqrt(ss / static_cast<double>(truth.size())));
}

double aoe_deg(const std::vector<EulerAngles>& truth,
               const std::vector<EulerAngles>& est) {
  return aoe_deg(to_matrices(truth), to_matrices(est));
}

double max_geodesic_error_deg(const std::vector<Eigen::Matrix3d>& truth,
                              const std::vector<Eigen::Matrix3d>& est) {
  check_sizes(truth.size(), est.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    worst = std::max(worst, geodesic_angle(truth[i], est[i]));
  }
  return rad2deg(worst);
}

double max_geodesic_error_deg(const std::vector<EulerAngles>& truth,
                              const std::vector<EulerAngles>& est) {
  return max_geodesic_error_deg(to_matrices(truth), to_matrices(est));
}

std::string EvalReport::csv_header() {
  return "method,window_s,n_samples,rmse_deg,aoe_deg,max_err_deg";
}

std::string EvalReport::csv_row() const {
  return insdvl::csv_row({method, fmt_num(window_s), std::to_string(n_samples),
                          fmt_num(rmse_deg), fmt_num(aoe_deg),
                          fmt_num(max_err_deg)});
}

std::string EvalReport::json() const {
  nlohmann::json j;
  j["method"] = method;
  j["window_s"] = window_s;
  j["n_samples"] = n_samples;
  j["rmse_deg"] = rmse_deg;
  j["aoe_deg"] = aoe_deg;
  j["max_err_deg"] = max_err_deg;
  return j.dump(2);
}

}  // namespace insdvl
