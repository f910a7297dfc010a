#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trf/datacore.hpp"
#include "trf/forest.hpp"
#include "trf/targeting.hpp"

namespace trf::eval {

struct Method {
  enum class Kind { rf, trf };
  Kind kind = Kind::rf;
  std::size_t s_prime = 0;
  targeting::Expansion expansion = targeting::Expansion::none;

  static Method rf() { return {}; }
  static Method trf(std::size_t s_prime, targeting::Expansion e = targeting::Expansion::none) {
    return {Kind::trf, s_prime, e};
  }
  /// "rf", "trf:<s'>" or "trf:<s'>:<expansion>".
  std::string tag() const;
};

Method method_from_string(const std::string& text);
/// Comma-separated list of method tags.
std::vector<Method> methods_from_string(const std::string& text);

struct ForecastRecord {
  std::size_t window = 0;
  std::size_t train_end = 0;
  std::size_t target_time = 0;  // 1-based row
  std::string time_label;       // time index of the target row, if any
  std::string method;
  std::size_t s_prime = 0;  // predictors the forest saw
  double actual = 0.0;
  double forecast = 0.0;
  double squared_error = 0.0;
};

struct ForecastReport {
  std::vector<std::string> methods;
  std::vector<ForecastRecord> records;  // window-major, methods in input order

  std::size_t window_count() const noexcept { return methods.empty() ? 0 : records.size() / methods.size(); }
  /// Squared errors of one method in window order.
  std::vector<double> squared_errors(const std::string& method) const;
  /// Time labels of the target rows in window order.
  std::vector<std::string> target_labels() const;
};

/// Fits every method on rows 1..train_end of each window and forecasts the
/// target row. All methods of window w share the forest seed
/// derive_seed(config.seed, w); TRF re-selects its predictors in each window.
ForecastReport run_forecast_experiment(const data::Dataset& dataset, const data::WindowPlan& plan,
                                       const std::vector<Method>& methods, const forest::ForestConfig& config,
                                       const targeting::SelectOptions& select = {});

/// Mean squared error of `a` over the masked windows divided by that of `b`.
/// Throws std::invalid_argument for unknown methods, a mask of the wrong
/// length or an empty mask, and std::domain_error for a zero denominator.
double mse_ratio(const ForecastReport& report, const std::string& a, const std::string& b,
                 const std::optional<std::vector<bool>>& mask = std::nullopt);

/// time_index -> regime label, from a CSV with header time_index,label.
std::map<std::string, std::string> load_regimes(const std::filesystem::path& path);
std::vector<bool> regime_mask(const ForecastReport& report, const std::map<std::string, std::string>& regimes,
                              const std::string& label);

struct DmResult {
  double statistic = 0.0;
  double p_value = 0.5;  // one-sided, H1: a is more accurate than b
  std::size_t horizon = 1;
  double mean_differential = 0.0;
  double hac_variance = 0.0;
};

/// Diebold-Mariano test on per-period losses (already squared errors) with
/// d_t = loss_b - loss_a and a Bartlett HAC variance truncated at lag h - 1.
/// A non-positive variance gives statistic 0 and p-value 0.5.
DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, std::size_t h);

struct ErrorDiagnostics {
  double tree_mse = 0.0;
  double tree_correlation = 0.0;
  double forest_mse = 0.0;
};

/// Strength and correlation of tree errors e_bt = y_t - f_b(x_t), with
/// observations in rows and trees in columns of `predictions`.
ErrorDiagnostics error_diagnostics(const Matrix& predictions, std::span<const double> actual);

struct DiagnosticsRecord {
  std::size_t s_prime = 0;
  double tree_mse = 0.0;
  double tree_correlation = 0.0;
  double forest_mse = 0.0;
};

struct DiagnosticsCurve {
  std::vector<DiagnosticsRecord> records;
};

/// For each s' in the grid, selects predictors on the training rows, grows
/// the forest on them and measures tree errors on the test rows.
DiagnosticsCurve tree_diagnostics(const data::Dataset& dataset, std::span<const std::size_t> train_rows,
                                  std::span<const std::size_t> test_rows, std::span<const std::size_t> s_prime_grid,
                                  const forest::ForestConfig& config, const targeting::SelectOptions& select = {},
                                  targeting::Expansion expansion = targeting::Expansion::none);

struct HoldoutResult {
  std::string method;
  double mse = 0.0;
  std::vector<double> predictions;
};

/// Fits each method on `train` with the same forest seed and scores on `test`.
std::vector<HoldoutResult> evaluate_holdout(const data::Dataset& train, const data::Dataset& test,
                                            const std::vector<Method>& methods, const forest::ForestConfig& config,
                                            const targeting::SelectOptions& select = {});

/// Spearman rank correlation with average ranks for ties; 0 when either
/// input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

void write_report_csv(std::ostream& out, const ForecastReport& report);
void write_diagnostics_csv(std::ostream& out, const DiagnosticsCurve& curve);
std::string to_json(const DmResult& result, int indent = -1);

}  // namespace trf::eval
