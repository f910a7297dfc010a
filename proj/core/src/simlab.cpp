#include "trf/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "trf/cart.hpp"
#include "trf/format.hpp"
#include "trf/parallel.hpp"
#include "trf/rng.hpp"

namespace trf::sim {
namespace {

double raw_component(const Dgp& dgp, double x) {
  switch (dgp.kind) {
    case DgpKind::linear: return std::sqrt(12.0 / static_cast<double>(dgp.strong)) * x;
    case DgpKind::sine: return std::sqrt(2.0) * std::sin(dgp.alpha * x);
    case DgpKind::quadratic: return std::sqrt(180.0) * (x - 0.5) * (x - 0.5);
    case DgpKind::piecewise15: break;
  }
  static const auto piecewise = theory::piecewise15_fn();
  return piecewise.g(x);
}

// L_n(feature, tau) for every distinct observed tau except the largest, in
// ascending order of tau.
struct Scan {
  std::vector<double> tau;
  std::vector<double> decrease;
};

Scan root_scan(const data::Dataset& ds, std::size_t feature) {
  const std::size_t n = ds.n();
  const auto col = ds.features.col(feature);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return col[a] < col[b] || (col[a] == col[b] && a < b); });
  double mean = 0.0;
  for (double y : ds.response) mean += y;
  mean /= static_cast<double>(n);
  double total = 0.0;
  for (double y : ds.response) total += y - mean;
  const double base = total * total / static_cast<double>(n);

  Scan s;
  double left = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    left += ds.response[order[k]] - mean;
    if (col[order[k]] == col[order[k + 1]]) continue;
    const double nl = static_cast<double>(k + 1);
    const double nr = static_cast<double>(n - k - 1);
    const double right = total - left;
    const double dec = std::max(0.0, left * left / nl + right * right / nr - base) / static_cast<double>(n);
    s.tau.push_back(col[order[k]]);
    s.decrease.push_back(dec);
  }
  return s;
}

struct RootOutcome {
  bool strong = false;
  bool tie = false;
};

RootOutcome root_split(const Dgp& dgp, const data::Dataset& ds) {
  std::vector<std::size_t> rows(ds.n());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  double best = -1.0;
  std::size_t best_feature = 0;
  std::size_t at_best = 0;
  for (std::size_t f = 0; f < ds.p(); ++f) {
    const std::size_t one[] = {f};
    const auto split = cart::best_split(ds, rows, one, ds.n());
    const double dec = split ? split->impurity_decrease : 0.0;
    if (dec > best) {
      best = dec;
      best_feature = f;
      at_best = 1;
    } else if (dec == best) {
      ++at_best;
    }
  }
  return {best > 0.0 && best_feature < dgp.strong, at_best > 1};
}

double binomial_se(double p, std::size_t reps) { return std::sqrt(p * (1.0 - p) / static_cast<double>(reps)); }

}  // namespace

void Dgp::validate() const {
  if (p < 1) throw std::invalid_argument("dgp: p must be >= 1");
  if (strong < 1 || strong > p) throw std::invalid_argument("dgp: strong count must lie in [1, p]");
  if (strong > 1 && kind != DgpKind::linear) throw std::invalid_argument("dgp: only the linear kind has several strong predictors");
  if (!(snr > 0.0 && snr <= 1.0)) throw std::invalid_argument("dgp: snr must lie in (0, 1]");
  if (kind == DgpKind::sine && !(alpha > 0.0)) throw std::invalid_argument("dgp: sine frequency must be positive");
}

double Dgp::f(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < strong; ++j) v += raw_component(*this, x[j]);
  return v;
}

theory::ScalarFn1D Dgp::component() const {
  switch (kind) {
    case DgpKind::linear: return theory::linear_fn(std::sqrt(12.0 / static_cast<double>(strong)));
    case DgpKind::sine: return theory::sine_fn(alpha);
    case DgpKind::quadratic: return theory::quadratic_fn();
    case DgpKind::piecewise15: return theory::piecewise15_fn();
  }
  return theory::linear_fn();
}

std::string Dgp::kind_label() const {
  switch (kind) {
    case DgpKind::linear: return "linear";
    case DgpKind::sine: return "sine:" + format_double(alpha);
    case DgpKind::quadratic: return "quadratic";
    case DgpKind::piecewise15: return "piecewise15";
  }
  return "linear";
}

Dgp dgp_from_label(const std::string& label, std::size_t p, double snr, std::size_t strong) {
  Dgp d;
  d.p = p;
  d.snr = snr;
  d.strong = strong;
  if (label == "linear") d.kind = DgpKind::linear;
  else if (label == "quadratic") d.kind = DgpKind::quadratic;
  else if (label == "piecewise15" || label == "piecewise") d.kind = DgpKind::piecewise15;
  else if (label.rfind("sine:", 0) == 0) {
    d.kind = DgpKind::sine;
    d.alpha = theory::parse_frequency(label.substr(5));
  } else {
    throw std::invalid_argument("unknown dgp kind: " + label);
  }
  d.validate();
  return d;
}

data::Dataset sample(const Dgp& dgp, std::size_t n, std::uint64_t seed) {
  dgp.validate();
  if (n < 2) throw std::invalid_argument("sample: n must be >= 2");
  Rng rng(seed);
  data::Dataset ds;
  ds.features = Matrix(n, dgp.p);
  ds.response.resize(n);
  for (std::size_t j = 0; j < dgp.p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  const double sigma = std::sqrt(dgp.sigma2());
  std::vector<double> x(dgp.p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dgp.p; ++j) {
      x[j] = rng.uniform();
      ds.features(i, j) = x[j];
    }
    const double noise = rng.normal();
    ds.response[i] = dgp.f(x) + sigma * noise;
  }
  return ds;
}

RhoEstimate estimate_split_prob(const Dgp& dgp, std::size_t n, std::size_t reps, std::uint64_t seed,
                                unsigned threads) {
  dgp.validate();
  if (reps < 1) throw std::invalid_argument("estimate_split_prob: reps must be >= 1");
  std::vector<RootOutcome> outcomes(reps);
  parallel_for(reps, threads, [&](std::size_t r) { outcomes[r] = root_split(dgp, sample(dgp, n, derive_seed(seed, r))); });

  RhoEstimate est;
  est.dgp = dgp;
  est.n = n;
  est.seed = seed;
  est.reps = reps;
  std::size_t hits = 0;
  for (const auto& o : outcomes) {
    hits += o.strong ? 1 : 0;
    est.ties += o.tie ? 1 : 0;
  }
  est.estimate = static_cast<double>(hits) / static_cast<double>(reps);
  est.standard_error = binomial_se(est.estimate, reps);
  est.tie_rate = static_cast<double>(est.ties) / static_cast<double>(reps);
  return est;
}

double estimate_delta(const Dgp& dgp, const data::Dataset& ds, std::span<const std::size_t> directions) {
  const auto strong_fn = dgp.component();
  const bool exact = static_cast<bool>(strong_fn.antiderivative);
  double sup = 0.0;
  for (auto i : directions) {
    if (i >= ds.p()) throw std::out_of_range("estimate_delta: direction out of range");
    const auto scan = root_scan(ds, i);
    const bool strong = i < dgp.strong;
    for (std::size_t k = 0; k < scan.tau.size(); ++k) {
      double target = 0.0;
      if (strong) {
        const double t = scan.tau[k];
        target = exact ? theory::population_criterion_exact(strong_fn, t) : theory::population_criterion(strong_fn, t);
      }
      sup = std::max(sup, std::abs(scan.decrease[k] - target));
    }
  }
  return sup;
}

double estimate_delta(const Dgp& dgp, std::size_t n, std::span<const std::size_t> directions, std::uint64_t seed) {
  return estimate_delta(dgp, sample(dgp, n, seed), directions);
}

Sandwich estimate_sandwich(const Dgp& dgp, std::size_t n, std::size_t reps, std::uint64_t seed, unsigned threads) {
  dgp.validate();
  Sandwich out;
  out.cstar = theory::cstar_numeric(dgp.component());
  out.upper = theory::upper_bound_split_prob(dgp.p, dgp.strong, dgp.p);
  std::vector<std::size_t> all(dgp.p);
  std::iota(all.begin(), all.end(), std::size_t{0});

  std::vector<RootOutcome> outcomes(reps);
  std::vector<char> inside(reps, 0);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto ds = sample(dgp, n, derive_seed(seed, r));
    outcomes[r] = root_split(dgp, ds);
    inside[r] = 2.0 * estimate_delta(dgp, ds, all) < out.cstar ? 1 : 0;
  });

  std::size_t hits = 0;
  std::size_t lower_hits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    hits += outcomes[r].strong ? 1 : 0;
    out.rho.ties += outcomes[r].tie ? 1 : 0;
    lower_hits += static_cast<std::size_t>(inside[r]);
  }
  out.rho.dgp = dgp;
  out.rho.n = n;
  out.rho.seed = seed;
  out.rho.reps = reps;
  out.rho.estimate = static_cast<double>(hits) / static_cast<double>(reps);
  out.rho.standard_error = binomial_se(out.rho.estimate, reps);
  out.rho.tie_rate = static_cast<double>(out.rho.ties) / static_cast<double>(reps);
  out.lower = static_cast<double>(lower_hits) / static_cast<double>(reps);
  out.lower_se = binomial_se(out.lower, reps);
  return out;
}

std::vector<GridCell> read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("grid file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "kind,p,n,snr") throw std::runtime_error("grid file header must be kind,p,n,snr");
  std::vector<GridCell> grid;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    GridCell c;
    std::string p, n, snr;
    if (!std::getline(ss, c.kind, ',') || !std::getline(ss, p, ',') || !std::getline(ss, n, ',') ||
        !std::getline(ss, snr)) {
      throw std::runtime_error("grid file line " + std::to_string(line_no) + ": expected 4 fields");
    }
    try {
      c.p = std::stoul(p);
      c.n = std::stoul(n);
      c.snr = std::stod(snr);
    } catch (const std::exception&) {
      throw std::runtime_error("grid file line " + std::to_string(line_no) + ": bad number");
    }
    grid.push_back(c);
  }
  return grid;
}

std::vector<RhoEstimate> sweep(const std::vector<GridCell>& grid, std::size_t reps, std::uint64_t seed,
                               unsigned threads) {
  std::vector<RhoEstimate> out;
  out.reserve(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto dgp = dgp_from_label(grid[c].kind, grid[c].p, grid[c].snr);
    out.push_back(estimate_split_prob(dgp, grid[c].n, reps, derive_seed(seed, c), threads));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<RhoEstimate>& rows) {
  out << "kind,p,n,snr,reps,rho_hat,se,tie_rate,seed\n";
  for (const auto& r : rows) {
    out << r.dgp.kind_label() << ',' << r.dgp.p << ',' << r.n << ',' << format_double(r.dgp.snr) << ',' << r.reps
        << ',' << format_double(r.estimate) << ',' << format_double(r.standard_error) << ','
        << format_double(r.tie_rate) << ',' << r.seed << '\n';
  }
}

}  // namespace trf::sim
