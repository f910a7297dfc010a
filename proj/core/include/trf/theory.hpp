#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trf::theory {

/// Probability that at least one of the `s` strong directions among `a`
/// candidates lands in a uniformly drawn M_try of size `m`:
///   1 - C(a - s, m) / C(a, m),  with C(a - s, m) = 0 when m > a - s.
/// Exact rational arithmetic for a <= 60, log-gamma above.
double upper_bound_split_prob(std::size_t a, std::size_t s, std::size_t m);

/// Same quantity for the whole predictor set (p, s, m).
double rho(std::size_t p, std::size_t s, std::size_t m);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const noexcept { return hi - lo; }
};

/// Maximal population impurity decrease of a linear f restricted to a node:
/// max over i in `strong_in_mtry` of beta_i^2 * Leb(A_i)^2 / 16, or 0 when no
/// strong direction is available.
double cstar_linear(const std::vector<double>& beta, const std::vector<Interval>& node_intervals,
                    const std::vector<std::size_t>& strong_in_mtry);

/// A function on [0, 1] along one strong direction.
struct ScalarFn1D {
  std::string name;
  std::function<double(double)> g;
  /// Interior points where g or a derivative jumps; quadrature splits there.
  std::vector<double> breakpoints;
  /// Optional exact antiderivative of g, enabling closed-form L*.
  std::function<double(double)> antiderivative;
  /// Var(g(U)) for U uniform on [0, 1], when known analytically.
  std::optional<double> variance;
};

/// g(x) = beta * x. beta = sqrt(12) gives unit variance.
ScalarFn1D linear_fn(double beta = 3.4641016151377544);
/// g(x) = sqrt(2) * sin(alpha * x).
ScalarFn1D sine_fn(double alpha);
/// g(x) = sqrt(180) * (x - 1/2)^2.
ScalarFn1D quadratic_fn();
/// Gyorfi's four-piece polynomial, divided by its standard deviation.
ScalarFn1D piecewise15_fn();
ScalarFn1D constant_fn(double c);

/// Standard deviation of the unnormalized four-piece polynomial under U[0, 1].
double piecewise15_raw_sd();

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Integral of g over [a, b] by adaptive Gauss-Kronrod, split at breakpoints.
/// Throws IntegrationError when the error estimate exceeds `tol`.
double integrate(const ScalarFn1D& fn, double a, double b, double tol = 1e-9);

/// L*(tau) = Var(g(U)) - tau Var(g(U) | U <= tau) - (1 - tau) Var(g(U) | U > tau)
///         = mL^2 / tau + mR^2 / (1 - tau) - (mL + mR)^2,
/// mL and mR being the integrals of g on [0, tau] and (tau, 1].
double population_criterion(const ScalarFn1D& fn, double tau);

/// Same value from the antiderivative; throws std::invalid_argument if the
/// function carries none.
double population_criterion_exact(const ScalarFn1D& fn, double tau);

struct CstarResult {
  double value = 0.0;
  double argmax = 0.5;
};

/// Maximum of L* over a uniform tau grid, refined by golden-section search
/// around the best grid point.
CstarResult cstar_numeric_detail(const ScalarFn1D& fn, std::size_t grid_size = 10000);
double cstar_numeric(const ScalarFn1D& fn, std::size_t grid_size = 10000);

/// Upper bound 4 / (alpha - 2) on C* for the sine function.
double sine_bound(double alpha);

/// Largest power of two <= x and smallest power of two >= x, for x >= 1.
double floor_pow2(double x);
double ceil_pow2(double x);

/// Same roundings applied to the exact rational num / den >= 1.
std::size_t floor_pow2(std::size_t num, std::size_t den);
std::size_t ceil_pow2(std::size_t num, std::size_t den);

/// MSE of the L-leaf targeted tree built with best-first growth on a linear f
/// with slope beta1: beta1^2 (7 v - 3 L) / (48 v^3) where v = floor_pow2(L).
double mse_targeted(std::size_t L, double beta1);

/// The indicator sequence of the L - 1 splits of a tree (true = strong).
struct SplitSequence {
  std::vector<bool> z;
  std::size_t n_strong = 0;
  std::size_t first_weak = 1;    // 1-based; 1 when there is none
  std::size_t first_strong = 1;  // 1-based; 1 when there is none

  static SplitSequence from_indicators(std::vector<bool> z);
};

enum class FirstIndex { weak, strong };

struct PmfEntry {
  std::size_t n = 0;
  std::size_t k = 0;
  double probability = 0.0;
};

/// Joint law of (N, first weak index) or (N, first strong index) for L - 1
/// i.i.d. Bernoulli(rho) indicators. Entries are sorted by (n, k) and cover
/// the full support.
std::vector<PmfEntry> pmf_joint(std::size_t L, double rho, FirstIndex which);

struct MseBounds {
  double upper = 0.0;
  double lower = 0.0;
};

/// Bounds on the MSE of an ordinary L-leaf tree whose splits are strong with
/// probability rho each.
MseBounds mse_bounds_ordinary(std::size_t L, double rho, double beta1);

/// Noise variance giving the requested SNR when Var(f(X)) = 1.
double snr_to_sigma2(double snr);

/// Rows of (L, rho, upper, lower, targeted) over a rho grid, for plotting.
struct BoundsRow {
  std::size_t L = 0;
  double rho = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double targeted = 0.0;
};

std::vector<BoundsRow> bounds_table(const std::vector<std::size_t>& leaf_counts, const std::vector<double>& rhos,
                                    double beta1);
void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundsRow>& rows);

/// Named functions accepted by the tools: linear, quadratic, piecewise15,
/// sine:<alpha> (alpha may be written as a multiple of pi, e.g. sine:4pi).
ScalarFn1D fn_from_name(const std::string& name);

/// Parses a positive frequency such as "12.5", "4pi" or "pi".
double parse_frequency(const std::string& text);

}  // namespace trf::theory
