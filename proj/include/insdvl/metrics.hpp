#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "insdvl/so3.hpp"

namespace insdvl {

// Root mean square of the per-axis angle residuals, in degrees. The sum of
// squares runs over all samples and all three axes but is divided by the
// sample count only, so a uniform 1 degree error on every axis reports
// sqrt(3) degrees.
double rmse_deg(const std::vector<EulerAngles>& truth,
                const std::vector<EulerAngles>& est);

// Root mean square geodesic angle between truth and estimate, in degrees.
double aoe_deg(const std::vector<Eigen::Matrix3d>& truth,
               const std::vector<Eigen::Matrix3d>& est);
double aoe_deg(const std::vector<EulerAngles>& truth,
               const std::vector<EulerAngles>& est);

// Largest single geodesic angle, in degrees.
double max_geodesic_error_deg(const std::vector<Eigen::Matrix3d>& truth,
                              const std::vector<Eigen::Matrix3d>& est);
double max_geodesic_error_deg(const std::vector<EulerAngles>& truth,
                              const std::vector<EulerAngles>& est);

struct EvalReport {
  std::string method;
  double window_s = 0.0;
  std::size_t n_samples = 0;
  double rmse_deg = 0.0;
  double aoe_deg = 0.0;
  double max_err_deg = 0.0;

  std::string csv_row() const;
  std::string json() const;
  static std::string csv_header();
};

}  // namespace insdvl
