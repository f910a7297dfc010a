#include "trf/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trf::targeting {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

StandardizedDesign StandardizedDesign::make(const Matrix& X, std::span<const double> y) {
  const std::size_t n = y.size();
  if (X.rows() != n) throw std::invalid_argument("lasso: design rows differ from response length");
  if (n < 2) throw std::invalid_argument("lasso: need at least two observations");

  StandardizedDesign d;
  d.z = Matrix(n, X.cols());
  d.center.resize(X.cols());
  d.scale.resize(X.cols());
  d.constant.resize(X.cols());
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto x = X.col(j);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= dn;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / dn);
    d.center[j] = mean;
    const double spread = std::ranges::max(x) - std::ranges::min(x);
    d.constant[j] = spread == 0.0 || sd <= 1e-14 * std::max(1.0, std::abs(mean));
    d.scale[j] = d.constant[j] ? 1.0 : sd;
    auto zc = d.z.col(j);
    for (std::size_t i = 0; i < n; ++i) zc[i] = d.constant[j] ? 0.0 : (x[i] - mean) / sd;
  }
  d.y_mean = 0.0;
  for (double v : y) d.y_mean += v;
  d.y_mean /= dn;
  d.y_centered.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y_centered[i] = y[i] - d.y_mean;
  return d;
}

std::size_t LassoFit::support_size() const noexcept {
  return static_cast<std::size_t>(std::ranges::count_if(standardized, [](double b) { return b != 0.0; }));
}

double lambda_max(const StandardizedDesign& design) {
  double m = 0.0;
  for (std::size_t j = 0; j < design.p(); ++j) {
    if (!design.constant[j]) m = std::max(m, std::abs(dot(design.z.col(j), design.y_centered)));
  }
  return 2.0 * m;
}

LassoFit lasso_fit(const StandardizedDesign& design, double lambda, const LassoOptions& options,
                   std::span<const double> warm_start) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lasso_fit: lambda must be nonnegative");
  const std::size_t n = design.n();
  const std::size_t p = design.p();
  const double dn = static_cast<double>(n);
  const double half_lambda = 0.5 * lambda;

  LassoFit fit;
  fit.lambda = lambda;
  fit.standardized.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    if (design.constant[j]) fit.constant_columns.push_back(j);
  }
  if (!warm_start.empty()) {
    if (warm_start.size() != p) throw std::invalid_argument("lasso_fit: warm start size mismatch");
    for (std::size_t j = 0; j < p; ++j) fit.standardized[j] = design.constant[j] ? 0.0 : warm_start[j];
  }

  std::vector<double> r = design.y_centered;
  for (std::size_t j = 0; j < p; ++j) {
    if (fit.standardized[j] == 0.0) continue;
    const auto z = design.z.col(j);
    for (std::size_t i = 0; i < n; ++i) r[i] -= z[i] * fit.standardized[j];
  }

  auto& beta = fit.standardized;
  auto update = [&](std::size_t j) {
    const auto z = design.z.col(j);
    const double old = beta[j];
    // Minimizes sum (r_i + z_ij*old - z_ij*b)^2 + lambda|b| with sum z_ij^2 = n.
    const double rho = dot(z, r) + dn * old;
    const double fresh = soft_threshold(rho, half_lambda) / dn;
    if (fresh != old) {
      const double delta = fresh - old;
      for (std::size_t i = 0; i < n; ++i) r[i] -= z[i] * delta;
      beta[j] = fresh;
    }
    return std::abs(fresh - old);
  };

  std::vector<std::size_t> active;
  while (fit.iterations < options.max_iter) {
    double change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!design.constant[j]) change = std::max(change, update(j));
    }
    ++fit.iterations;
    if (change < options.tol) {
      fit.converged = true;
      break;
    }
    active.clear();
    for (std::size_t j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    while (fit.iterations < options.max_iter) {
      double inner = 0.0;
      for (auto j : active) inner = std::max(inner, update(j));
      ++fit.iterations;
      if (inner < options.tol) break;
    }
  }

  fit.coefficients.resize(p);
  fit.intercept = design.y_mean;
  for (std::size_t j = 0; j < p; ++j) {
    fit.coefficients[j] = beta[j] / design.scale[j];
    fit.intercept -= fit.coefficients[j] * design.center[j];
  }
  return fit;
}

LassoFit lasso_fit(const Matrix& X, std::span<const double> y, double lambda, const LassoOptions& options) {
  return lasso_fit(StandardizedDesign::make(X, y), lambda, options);
}

LassoFit lasso_fit(const data::Dataset& dataset, double lambda, const LassoOptions& options) {
  return lasso_fit(dataset.features, dataset.response, lambda, options);
}

double kkt_residual(const StandardizedDesign& design, const LassoFit& fit) {
  const std::size_t n = design.n();
  const double dn = static_cast<double>(n);
  std::vector<double> r = design.y_centered;
  for (std::size_t j = 0; j < design.p(); ++j) {
    const auto z = design.z.col(j);
    for (std::size_t i = 0; i < n; ++i) r[i] -= z[i] * fit.standardized[j];
  }
  const double threshold = fit.lambda / (2.0 * dn);
  double worst = 0.0;
  for (std::size_t j = 0; j < design.p(); ++j) {
    if (design.constant[j]) continue;
    const double g = dot(design.z.col(j), r) / dn;
    const double b = fit.standardized[j];
    const double v = b != 0.0 ? std::abs(g - std::copysign(threshold, b)) : std::max(0.0, std::abs(g) - threshold);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace trf::targeting
