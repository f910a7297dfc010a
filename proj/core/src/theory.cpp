#include "trf/theory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "trf/format.hpp"

namespace trf::theory {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int binomial_exact(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  cpp_int c = 1;
  for (std::size_t i = 0; i < k; ++i) {
    c *= n - i;
    c /= i + 1;
  }
  return c;
}

double log_binomial(std::size_t n, std::size_t k) {
  return boost::math::lgamma(static_cast<double>(n) + 1.0) - boost::math::lgamma(static_cast<double>(k) + 1.0) -
         boost::math::lgamma(static_cast<double>(n - k) + 1.0);
}

double binomial_pmf(std::size_t k, std::size_t n, double p) {
  if (k > n) return 0.0;
  const double c = static_cast<double>(binomial_exact(n, k));
  return c * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(n - k));
}

constexpr double kSqrt2 = std::numbers::sqrt2;

// The four pieces of Gyorfi's polynomial and their antiderivatives, before
// normalization.
double piecewise_raw(double x) {
  if (x < 0.25) return (2.0 * x + 1.0) * (2.0 * x + 1.0) / 2.0;
  if (x < 0.5) return x + 0.375;
  if (x < 0.75) return -5.0 * (2.0 * x - 1.2) * (2.0 * x - 1.2) + 43.0 / 40.0;
  return 2.0 * x - 0.875;
}

double piecewise_raw_antiderivative(double x) {
  auto f1 = [](double t) { return 2.0 * t * t * t / 3.0 + t * t + 0.5 * t; };
  auto f2 = [](double t) { return t * t / 2.0 + 0.375 * t; };
  auto f3 = [](double t) { return -20.0 * t * t * t / 3.0 + 12.0 * t * t - 6.125 * t; };
  auto f4 = [](double t) { return t * t - 0.875 * t; };
  const double c1 = f1(0.25) - f1(0.0);
  const double c2 = c1 + f2(0.5) - f2(0.25);
  const double c3 = c2 + f3(0.75) - f3(0.5);
  if (x < 0.25) return f1(x) - f1(0.0);
  if (x < 0.5) return c1 + f2(x) - f2(0.25);
  if (x < 0.75) return c2 + f3(x) - f3(0.5);
  return c3 + f4(x) - f4(0.75);
}

double golden_max(const std::function<double(double)>& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double criterion_from_masses(double mL, double mR, double tau) {
  const double v = mL * mL / tau + mR * mR / (1.0 - tau) - (mL + mR) * (mL + mR);
  return std::max(v, 0.0);
}

}  // namespace

double upper_bound_split_prob(std::size_t a, std::size_t s, std::size_t m) {
  if (s > a) throw std::invalid_argument("upper_bound_split_prob: s exceeds a");
  if (m < 1 || m > a) throw std::invalid_argument("upper_bound_split_prob: m must lie in [1, a]");
  if (m > a - s) return 1.0;
  if (s == 0) return 0.0;
  if (a <= 60) {
    const cpp_rational miss(binomial_exact(a - s, m), binomial_exact(a, m));
    return (cpp_rational(1) - miss).convert_to<double>();
  }
  return -std::expm1(log_binomial(a - s, m) - log_binomial(a, m));
}

double rho(std::size_t p, std::size_t s, std::size_t m) { return upper_bound_split_prob(p, s, m); }

double cstar_linear(const std::vector<double>& beta, const std::vector<Interval>& node_intervals,
                    const std::vector<std::size_t>& strong_in_mtry) {
  double best = 0.0;
  for (auto i : strong_in_mtry) {
    if (i >= beta.size() || i >= node_intervals.size())
      throw std::invalid_argument("cstar_linear: direction out of range");
    const auto& iv = node_intervals[i];
    if (iv.lo < 0.0 || iv.hi > 1.0 || iv.lo > iv.hi) throw std::invalid_argument("cstar_linear: interval outside [0, 1]");
    const double len = iv.length();
    best = std::max(best, beta[i] * beta[i] * len * len / 16.0);
  }
  return best;
}

ScalarFn1D linear_fn(double beta) {
  ScalarFn1D f;
  f.name = "linear";
  f.g = [beta](double x) { return beta * x; };
  f.antiderivative = [beta](double x) { return beta * x * x / 2.0; };
  f.variance = beta * beta / 12.0;
  return f;
}

ScalarFn1D sine_fn(double alpha) {
  ScalarFn1D f;
  f.name = "sine:" + format_double(alpha);
  f.g = [alpha](double x) { return kSqrt2 * std::sin(alpha * x); };
  f.antiderivative = [alpha](double x) { return kSqrt2 * (1.0 - std::cos(alpha * x)) / alpha; };
  const double mean = kSqrt2 * (1.0 - std::cos(alpha)) / alpha;
  const double second = 1.0 - std::sin(2.0 * alpha) / (2.0 * alpha);
  f.variance = second - mean * mean;
  // Quadrature splits at half-periods so each piece has one sign.
  const double half_period = std::numbers::pi / alpha;
  for (double t = half_period; t < 1.0 - 1e-12; t += half_period) f.breakpoints.push_back(t);
  return f;
}

ScalarFn1D quadratic_fn() {
  const double c = std::sqrt(180.0);
  ScalarFn1D f;
  f.name = "quadratic";
  f.g = [c](double x) { return c * (x - 0.5) * (x - 0.5); };
  f.antiderivative = [c](double x) { return c * ((x - 0.5) * (x - 0.5) * (x - 0.5) + 0.125) / 3.0; };
  f.variance = 1.0;
  return f;
}

double piecewise15_raw_sd() {
  static const double sd = [] {
    ScalarFn1D raw;
    raw.g = piecewise_raw;
    raw.breakpoints = {0.25, 0.5, 0.75};
    ScalarFn1D sq = raw;
    sq.g = [](double x) { return piecewise_raw(x) * piecewise_raw(x); };
    const double m1 = integrate(raw, 0.0, 1.0);
    const double m2 = integrate(sq, 0.0, 1.0);
    return std::sqrt(m2 - m1 * m1);
  }();
  return sd;
}

ScalarFn1D piecewise15_fn() {
  const double sd = piecewise15_raw_sd();
  ScalarFn1D f;
  f.name = "piecewise15";
  f.g = [sd](double x) { return piecewise_raw(x) / sd; };
  f.antiderivative = [sd](double x) { return piecewise_raw_antiderivative(x) / sd; };
  f.breakpoints = {0.25, 0.5, 0.75};
  f.variance = 1.0;
  return f;
}

ScalarFn1D constant_fn(double c) {
  ScalarFn1D f;
  f.name = "constant";
  f.g = [c](double) { return c; };
  f.antiderivative = [c](double x) { return c * x; };
  f.variance = 0.0;
  return f;
}

double integrate(const ScalarFn1D& fn, double a, double b, double tol) {
  if (!(a <= b)) throw std::invalid_argument("integrate: empty interval");
  std::vector<double> cuts{a};
  for (double t : fn.breakpoints) {
    if (t > a && t < b) cuts.push_back(t);
  }
  cuts.push_back(b);
  std::ranges::sort(cuts);
  double total = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double err = 0.0;
    // Boost's tolerance is relative to the L1 norm; asking for much more
    // than 1e-11 only exhausts the recursion depth on round-off.
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fn.g, cuts[i], cuts[i + 1], 10, 1e-11,
                                                                          &err);
    worst += std::abs(err);
  }
  if (worst > tol) throw IntegrationError("quadrature of " + fn.name + " did not reach the requested accuracy", worst);
  return total;
}

double population_criterion(const ScalarFn1D& fn, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("population_criterion: tau must lie in (0, 1)");
  return criterion_from_masses(integrate(fn, 0.0, tau), integrate(fn, tau, 1.0), tau);
}

double population_criterion_exact(const ScalarFn1D& fn, double tau) {
  if (!fn.antiderivative) throw std::invalid_argument("population_criterion_exact: no antiderivative for " + fn.name);
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("population_criterion_exact: tau must lie in (0, 1)");
  const double G0 = fn.antiderivative(0.0);
  const double Gt = fn.antiderivative(tau);
  const double G1 = fn.antiderivative(1.0);
  return criterion_from_masses(Gt - G0, G1 - Gt, tau);
}

CstarResult cstar_numeric_detail(const ScalarFn1D& fn, std::size_t grid_size) {
  if (grid_size < 1000) throw std::invalid_argument("cstar_numeric: grid size must be at least 1000");
  // Masses on the grid cells, accumulated left to right.
  const double h = 1.0 / static_cast<double>(grid_size);
  std::vector<double> cumulative(grid_size + 1, 0.0);
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double lo = static_cast<double>(k) * h;
    const double hi = k + 1 == grid_size ? 1.0 : static_cast<double>(k + 1) * h;
    cumulative[k + 1] = cumulative[k] + integrate(fn, lo, hi);
  }
  const double total = cumulative[grid_size];
  std::size_t best_k = 1;
  double best = -1.0;
  for (std::size_t k = 1; k < grid_size; ++k) {
    const double tau = static_cast<double>(k) * h;
    const double v = criterion_from_masses(cumulative[k], total - cumulative[k], tau);
    if (v > best) {
      best = v;
      best_k = k;
    }
  }
  const double lo = static_cast<double>(best_k - 1) * h;
  const double hi = static_cast<double>(best_k + 1) * h;
  auto crit = [&](double t) {
    return t <= 0.0 || t >= 1.0 ? 0.0 : population_criterion(fn, t);
  };
  const double t = golden_max(crit, lo, hi, 1e-10);
  CstarResult result{crit(t), t};
  if (result.value < best) result = {best, static_cast<double>(best_k) * h};
  return result;
}

double cstar_numeric(const ScalarFn1D& fn, std::size_t grid_size) {
  return cstar_numeric_detail(fn, grid_size).value;
}

double sine_bound(double alpha) {
  if (!(alpha > 2.0)) throw std::invalid_argument("sine_bound: alpha must exceed 2");
  return 4.0 / (alpha - 2.0);
}

double floor_pow2(double x) {
  if (!(x >= 1.0) || !std::isfinite(x)) throw std::invalid_argument("floor_pow2: x must be >= 1");
  int e = 0;
  std::frexp(x, &e);  // x = f * 2^e with f in [0.5, 1)
  return std::ldexp(1.0, e - 1);
}

double ceil_pow2(double x) {
  if (!(x >= 1.0) || !std::isfinite(x)) throw std::invalid_argument("ceil_pow2: x must be >= 1");
  int e = 0;
  const double f = std::frexp(x, &e);
  return f == 0.5 ? x : std::ldexp(1.0, e);
}

std::size_t floor_pow2(std::size_t num, std::size_t den) {
  if (den == 0 || num < den) throw std::invalid_argument("floor_pow2: ratio must be >= 1");
  std::size_t v = 1;
  while (2 * v * den <= num) v *= 2;
  return v;
}

std::size_t ceil_pow2(std::size_t num, std::size_t den) {
  if (den == 0 || num < den) throw std::invalid_argument("ceil_pow2: ratio must be >= 1");
  std::size_t v = 1;
  while (v * den < num) v *= 2;
  return v;
}

double mse_targeted(std::size_t L, double beta1) {
  if (L < 1) throw std::invalid_argument("mse_targeted: L must be >= 1");
  const double v = floor_pow2(static_cast<double>(L));
  const double l = static_cast<double>(L);
  return beta1 * beta1 * (7.0 * v - 3.0 * l) / (48.0 * v * v * v);
}

SplitSequence SplitSequence::from_indicators(std::vector<bool> z) {
  SplitSequence s;
  s.z = std::move(z);
  bool seen_weak = false;
  bool seen_strong = false;
  for (std::size_t k = 0; k < s.z.size(); ++k) {
    if (s.z[k]) {
      ++s.n_strong;
      if (!seen_strong) s.first_strong = k + 1;
      seen_strong = true;
    } else {
      if (!seen_weak) s.first_weak = k + 1;
      seen_weak = true;
    }
  }
  return s;
}

std::vector<PmfEntry> pmf_joint(std::size_t L, double r, FirstIndex which) {
  if (L < 2) throw std::invalid_argument("pmf_joint: L must be >= 2");
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("pmf_joint: rho must lie in [0, 1]");
  const std::size_t splits = L - 1;
  const double q = 1.0 - r;
  std::vector<PmfEntry> out;
  out.push_back({0, 1, std::pow(q, static_cast<double>(splits))});
  for (std::size_t n = 1; n < splits; ++n) {
    if (which == FirstIndex::weak) {
      // k - 1 leading strong splits, a weak split at k, then n - k + 1
      // strong ones among the remaining L - 1 - k.
      for (std::size_t k = 1; k <= n + 1; ++k) {
        const double p = std::pow(r, static_cast<double>(k - 1)) * q * binomial_pmf(n + 1 - k, splits - k, r);
        out.push_back({n, k, p});
      }
    } else {
      for (std::size_t k = 1; k <= splits + 1 - n; ++k) {
        const double p = r * std::pow(q, static_cast<double>(k - 1)) * binomial_pmf(n - 1, splits - k, r);
        out.push_back({n, k, p});
      }
    }
  }
  out.push_back({splits, 1, std::pow(r, static_cast<double>(splits))});
  return out;
}

MseBounds mse_bounds_ordinary(std::size_t L, double r, double beta1) {
  if (L < 2) throw std::invalid_argument("mse_bounds_ordinary: L must be >= 2");
  MseBounds b;
  for (const auto& e : pmf_joint(L, r, FirstIndex::weak)) {
    if (e.probability == 0.0) continue;
    // k + (n - k + 1) / (k (L - n)) as a single fraction.
    const std::size_t den = e.k * (L - e.n);
    const std::size_t num = e.k * den + (e.n + 1 - e.k);
    b.upper += e.probability * mse_targeted(floor_pow2(num, den), beta1);
  }
  for (const auto& e : pmf_joint(L, r, FirstIndex::strong)) {
    if (e.probability == 0.0) continue;
    b.lower += e.probability * mse_targeted(ceil_pow2(e.k + e.n, e.k), beta1);
  }
  return b;
}

double snr_to_sigma2(double snr) {
  if (!(snr > 0.0 && snr <= 1.0)) throw std::invalid_argument("snr_to_sigma2: snr must lie in (0, 1]");
  return (1.0 - snr) / snr;
}

std::vector<BoundsRow> bounds_table(const std::vector<std::size_t>& leaf_counts, const std::vector<double>& rhos,
                                    double beta1) {
  std::vector<BoundsRow> rows;
  for (auto L : leaf_counts) {
    for (double r : rhos) {
      const auto b = mse_bounds_ordinary(L, r, beta1);
      rows.push_back({L, r, b.upper, b.lower, mse_targeted(L, beta1)});
    }
  }
  return rows;
}

void write_bounds_csv(const std::filesystem::path& path, const std::vector<BoundsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "L,rho,upper,lower,targeted\n";
  for (const auto& r : rows) {
    out << r.L << ',' << format_double(r.rho) << ',' << format_double(r.upper) << ',' << format_double(r.lower) << ','
        << format_double(r.targeted) << '\n';
  }
}

double parse_frequency(const std::string& text) {
  std::string arg = text;
  double scale = 1.0;
  if (arg.size() >= 2 && arg.compare(arg.size() - 2, 2, "pi") == 0) {
    scale = std::numbers::pi;
    arg.resize(arg.size() - 2);
    if (arg.empty()) arg = "1";
  }
  double value = 0.0;
  const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), value);
  if (ec != std::errc{} || end != arg.data() + arg.size() || !(value > 0.0))
    throw std::invalid_argument("bad frequency: " + text);
  return value * scale;
}

ScalarFn1D fn_from_name(const std::string& name) {
  if (name == "linear") return linear_fn();
  if (name == "quadratic") return quadratic_fn();
  if (name == "piecewise15" || name == "piecewise") return piecewise15_fn();
  if (name.rfind("sine:", 0) == 0) return sine_fn(parse_frequency(name.substr(5)));
  throw std::invalid_argument("unknown function: " + name);
}

}  // namespace trf::theory
