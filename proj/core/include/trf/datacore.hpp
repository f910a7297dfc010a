#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trf/matrix.hpp"

namespace trf::data {

/// A sample of n observations: predictors in columns plus one response.
struct Dataset {
  Matrix features;
  std::vector<std::string> feature_names;
  std::vector<double> response;
  /// Period labels, one per row, or empty when the source had none.
  std::vector<std::string> time_index;

  std::size_t n() const noexcept { return response.size(); }
  std::size_t p() const noexcept { return features.cols(); }

  /// Throws std::invalid_argument if shapes disagree, names repeat, or any
  /// value is NaN.
  void validate() const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_cols(std::span<const std::size_t> cols) const;
  /// Rows [first, last) in order.
  Dataset slice(std::size_t first, std::size_t last) const;
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
};

/// Reads a comma-separated file whose first row is a header. Rows with an
/// empty or non-numeric cell in any used column are dropped and counted.
/// `time_column`, when given, is kept verbatim as the time index and is not
/// parsed as a number. Numbers are parsed independently of the C locale.
LoadResult load_csv(const std::filesystem::path& path, const std::string& response_column,
                    const std::optional<std::string>& time_column = std::nullopt);

/// Column-major CSV writer shared by the tools.
void write_csv(const std::filesystem::path& path, const Dataset& dataset,
               const std::string& response_name = "y");

/// McCracken-Ng style stationarity transforms.
enum class TransformCode : int {
  level = 1,
  diff = 2,
  diff2 = 3,
  log = 4,
  diff_log = 5,
  diff2_log = 6,
  diff_pct_change = 7,  // Δ(x_t / x_{t-1} - 1)
};

TransformCode transform_code_from_int(int code);
/// Number of leading observations a transform consumes (0, 1 or 2).
std::size_t transform_order(TransformCode code) noexcept;

/// Output has length series.size() - transform_order(code); element k
/// corresponds to input index k + order.
std::vector<double> apply_transform(std::span<const double> series, TransformCode code);

/// Reads a transform spec CSV with header (series_name, code).
std::vector<std::pair<std::string, TransformCode>> load_transform_spec(
    const std::filesystem::path& path);

/// Transforms the named predictor columns in place and drops the leading rows
/// consumed by the largest differencing order so all columns stay aligned.
/// Columns not mentioned are left as levels.
Dataset transform_dataset(const Dataset& dataset,
                          std::span<const std::pair<std::string, TransformCode>> spec);

enum class TargetKind { log_diff, second_log_diff_cum, excess };

/// Forecast target aligned at its origination period: values[k] is the
/// target originated at period first_origin + k.
struct TargetSeries {
  std::vector<double> values;
  std::size_t first_origin = 0;
};

/// log_diff:            Y_t = log Z_{t+h} - log Z_t
/// second_log_diff_cum: Y_t = sum_{j=1..h} Δ² log Z_{t+j}
///                          = Δlog Z_{t+h} - Δlog Z_t   (first origin t = 1)
/// excess:              Y_t = (log P_{t+h} - log P_t) - sum_{j=1..h} rf_{t+j},
///                      `series` is the price index P and `risk_free` holds the
///                      per-period continuously compounded rate.
TargetSeries build_target(std::span<const double> series, std::size_t h, TargetKind kind,
                          std::span<const double> risk_free = {});

struct Window {
  std::size_t train_end = 0;    // rows 1..train_end are used for fitting
  std::size_t target_time = 0;  // the row forecast, train_end + h
};

/// Expanding-window schedule over 1-based row positions.
///
/// Rows are indexed by forecast origin: row t holds the predictors observed at
/// t and the target realized at t + h. The h-row gap between train_end and
/// target_time means every training target is realized by the forecast
/// origin, so no window sees data from its own future.
struct WindowPlan {
  std::size_t initial_length = 0;
  std::size_t horizon = 0;
  std::vector<Window> windows;
};

WindowPlan expanding_windows(std::size_t n_total, std::size_t initial_length, std::size_t h);

}  // namespace trf::data
