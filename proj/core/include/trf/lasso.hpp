#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trf/datacore.hpp"
#include "trf/matrix.hpp"

namespace trf::targeting {

/// Design with every column centered and scaled to unit (population)
/// standard deviation, so sum_i z_ij^2 = n. Zero-variance columns are flagged
/// and excluded from the fit.
struct StandardizedDesign {
  Matrix z;
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<bool> constant;
  std::vector<double> y_centered;
  double y_mean = 0.0;

  static StandardizedDesign make(const Matrix& X, std::span<const double> y);
  std::size_t n() const noexcept { return y_centered.size(); }
  std::size_t p() const noexcept { return z.cols(); }
};

struct LassoOptions {
  double tol = 1e-12;  // on the largest standardized coefficient change per sweep
  std::size_t max_iter = 100000;
};

struct LassoFit {
  double intercept = 0.0;
  std::vector<double> coefficients;  // original predictor scale
  std::vector<double> standardized;  // standardized predictor scale
  double lambda = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> constant_columns;

  std::size_t support_size() const noexcept;
};

/// Smallest penalty at which every coefficient is zero for the objective
///   sum_i (y_i - a - b'z_i)^2 + lambda * ||b||_1,
/// namely 2 * max_j |<z_j, y - mean(y)>|.
double lambda_max(const StandardizedDesign& design);

/// Cyclic coordinate descent on the objective above (no 1/(2n) factor), over
/// standardized predictors. Non-convergence is reported in the result, not
/// thrown. `warm_start`, if non-empty, holds standardized starting values.
LassoFit lasso_fit(const StandardizedDesign& design, double lambda, const LassoOptions& options = {},
                   std::span<const double> warm_start = {});
LassoFit lasso_fit(const Matrix& X, std::span<const double> y, double lambda,
                   const LassoOptions& options = {});
LassoFit lasso_fit(const data::Dataset& dataset, double lambda, const LassoOptions& options = {});

/// Largest violation of the subgradient optimality conditions, in units of
/// the per-observation gradient: for active j, |<z_j,r>/n - lambda/(2n)·sign(b_j)|,
/// for zero j, max(0, |<z_j,r>|/n - lambda/(2n)).
double kkt_residual(const StandardizedDesign& design, const LassoFit& fit);

}  // namespace trf::targeting
