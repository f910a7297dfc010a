#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trf/datacore.hpp"
#include "trf/theory.hpp"

namespace trf::sim {

enum class DgpKind { linear, sine, quadratic, piecewise15 };

/// Synthetic regression design with X uniform on [0, 1]^p, Var(f(X)) = 1 and
/// Gaussian noise sized to the requested SNR. The strong predictors are the
/// first `strong` columns; only the linear kind supports more than one, with
/// equal slopes sqrt(12 / strong).
struct Dgp {
  DgpKind kind = DgpKind::linear;
  std::size_t p = 8;
  std::size_t strong = 1;
  double snr = 0.5;
  double alpha = 12.566370614359172;  // sine frequency, 4 pi by default

  void validate() const;
  double f(std::span<const double> x) const;
  double sigma2() const { return theory::snr_to_sigma2(snr); }
  /// The regression function along one strong direction.
  theory::ScalarFn1D component() const;
  /// "linear", "quadratic", "piecewise15" or "sine:<alpha>".
  std::string kind_label() const;
};

/// Parses the kind labels above; sine accepts e.g. "sine:16pi" and "sine:50.26".
Dgp dgp_from_label(const std::string& label, std::size_t p, double snr, std::size_t strong = 1);

data::Dataset sample(const Dgp& dgp, std::size_t n, std::uint64_t seed);

struct RhoEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
  std::size_t ties = 0;
  double tie_rate = 0.0;
  Dgp dgp;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo frequency with which the root split of a CART tree that sees
/// all p directions lands on a strong predictor. Replication r uses the
/// sample drawn with derive_seed(seed, r). Exact argmax ties across
/// directions go to the lower index and are counted.
RhoEstimate estimate_split_prob(const Dgp& dgp, std::size_t n, std::size_t reps, std::uint64_t seed,
                                unsigned threads = 0);

/// sup over i in `directions` and observed thresholds of |L_n(i, tau) - L*(i, tau)|
/// at the root node, on one sample of size n. L* is zero for weak directions.
double estimate_delta(const Dgp& dgp, std::size_t n, std::span<const std::size_t> directions, std::uint64_t seed);
double estimate_delta(const Dgp& dgp, const data::Dataset& sample, std::span<const std::size_t> directions);

struct Sandwich {
  RhoEstimate rho;
  double lower = 0.0;  // frequency of 2 delta_n < C*
  double lower_se = 0.0;
  double upper = 1.0;  // hypergeometric bound with m = p
  double cstar = 0.0;
};

/// Runs the split-probability experiment and, on the same samples, the
/// frequency of the event 2 delta_n([p]) < C* that implies a strong split.
Sandwich estimate_sandwich(const Dgp& dgp, std::size_t n, std::size_t reps, std::uint64_t seed, unsigned threads = 0);

struct GridCell {
  std::string kind;  // label accepted by dgp_from_label
  std::size_t p = 8;
  std::size_t n = 100;
  double snr = 0.5;
};

/// Reads a CSV with header kind,p,n,snr.
std::vector<GridCell> read_grid(const std::filesystem::path& path);

/// One estimate per cell; cell c uses seed derive_seed(seed, c).
std::vector<RhoEstimate> sweep(const std::vector<GridCell>& grid, std::size_t reps, std::uint64_t seed,
                               unsigned threads = 0);

/// Columns kind,p,n,snr,reps,rho_hat,se,tie_rate,seed.
void write_sweep_csv(std::ostream& out, const std::vector<RhoEstimate>& rows);

}  // namespace trf::sim
