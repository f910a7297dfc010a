#include "trf/datacore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "trf/format.hpp"

namespace trf::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; "" inside
// quotes is a literal quote. Records spanning lines are not supported.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != response.size() && !(features.cols() == 0 && features.rows() == 0)) {
    throw std::invalid_argument("Dataset: feature rows differ from response length");
  }
  if (feature_names.size() != features.cols()) {
    throw std::invalid_argument("Dataset: feature_names length differs from column count");
  }
  std::set<std::string> seen;
  for (const auto& name : feature_names) {
    if (!seen.insert(name).second) throw std::invalid_argument("Dataset: duplicate feature name " + name);
  }
  if (!time_index.empty() && time_index.size() != response.size()) {
    throw std::invalid_argument("Dataset: time_index length differs from response length");
  }
  for (double y : response) {
    if (std::isnan(y)) throw std::invalid_argument("Dataset: NaN in response");
  }
  for (std::size_t c = 0; c < features.cols(); ++c) {
    for (double x : features.col(c)) {
      if (std::isnan(x)) throw std::invalid_argument("Dataset: NaN in features");
    }
  }
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.feature_names = feature_names;
  out.response.reserve(rows.size());
  for (auto r : rows) out.response.push_back(response.at(r));
  if (!time_index.empty()) {
    for (auto r : rows) out.time_index.push_back(time_index.at(r));
  }
  return out;
}

Dataset Dataset::select_cols(std::span<const std::size_t> cols) const {
  Dataset out;
  out.features = features.select_cols(cols);
  for (auto c : cols) out.feature_names.push_back(feature_names.at(c));
  out.response = response;
  out.time_index = time_index;
  return out;
}

Dataset Dataset::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > n()) throw std::out_of_range("Dataset::slice");
  std::vector<std::size_t> rows(last - first);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = first + i;
  return select_rows(rows);
}

LoadResult load_csv(const std::filesystem::path& path, const std::string& response_column,
                    const std::optional<std::string>& time_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const auto header = split_record(line);

  std::optional<std::size_t> response_idx;
  std::optional<std::size_t> time_idx;
  std::vector<std::size_t> feature_idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == response_column) {
      response_idx = i;
    } else if (time_column && header[i] == *time_column) {
      time_idx = i;
    } else {
      feature_idx.push_back(i);
    }
  }
  if (!response_idx) throw std::invalid_argument(path.string() + ": missing column " + response_column);
  if (time_column && !time_idx) throw std::invalid_argument(path.string() + ": missing column " + *time_column);

  LoadResult result;
  Dataset& ds = result.dataset;
  for (auto i : feature_idx) ds.feature_names.push_back(header[i]);

  std::vector<std::vector<double>> columns(feature_idx.size());
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_record(line);
    bool ok = fields.size() == header.size();
    std::optional<double> y;
    if (ok) {
      y = parse_number(fields[*response_idx]);
      ok = y.has_value();
    }
    std::vector<double> row(feature_idx.size());
    for (std::size_t j = 0; ok && j < feature_idx.size(); ++j) {
      auto v = parse_number(fields[feature_idx[j]]);
      if (!v) ok = false;
      else row[j] = *v;
    }
    if (!ok) {
      ++result.dropped_rows;
      continue;
    }
    ds.response.push_back(*y);
    for (std::size_t j = 0; j < row.size(); ++j) columns[j].push_back(row[j]);
    if (time_idx) ds.time_index.push_back(fields[*time_idx]);
  }
  if (ds.response.empty()) throw std::runtime_error(path.string() + ": no usable rows");

  ds.features = Matrix(ds.response.size(), 0);
  for (const auto& c : columns) ds.features.append_col(c);
  if (columns.empty()) ds.features = Matrix(ds.response.size(), 0);
  ds.validate();
  return result;
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset,
               const std::string& response_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const bool has_time = !dataset.time_index.empty();
  if (has_time) out << "time,";
  for (const auto& name : dataset.feature_names) out << name << ',';
  out << response_name << '\n';
  for (std::size_t r = 0; r < dataset.n(); ++r) {
    if (has_time) out << dataset.time_index[r] << ',';
    for (std::size_t c = 0; c < dataset.p(); ++c) out << format_double(dataset.features(r, c)) << ',';
    out << format_double(dataset.response[r]) << '\n';
  }
}

TransformCode transform_code_from_int(int code) {
  if (code < 1 || code > 7) throw std::invalid_argument("transform code must be in 1..7");
  return static_cast<TransformCode>(code);
}

std::size_t transform_order(TransformCode code) noexcept {
  switch (code) {
    case TransformCode::level:
    case TransformCode::log:
      return 0;
    case TransformCode::diff:
    case TransformCode::diff_log:
      return 1;
    case TransformCode::diff2:
    case TransformCode::diff2_log:
    case TransformCode::diff_pct_change:
      return 2;
  }
  return 0;
}

std::vector<double> apply_transform(std::span<const double> series, TransformCode code) {
  const std::size_t order = transform_order(code);
  if (series.size() < order + 1) throw std::invalid_argument("apply_transform: series too short");

  const bool uses_log = code == TransformCode::log || code == TransformCode::diff_log ||
                        code == TransformCode::diff2_log;
  std::vector<double> x(series.begin(), series.end());
  if (uses_log) {
    for (double& v : x) {
      if (!(v > 0.0)) throw std::invalid_argument("apply_transform: non-positive value under log code");
      v = std::log(v);
    }
  }
  auto difference = [](const std::vector<double>& v) {
    std::vector<double> d(v.size() - 1);
    for (std::size_t i = 1; i < v.size(); ++i) d[i - 1] = v[i] - v[i - 1];
    return d;
  };

  switch (code) {
    case TransformCode::level:
    case TransformCode::log:
      return x;
    case TransformCode::diff:
    case TransformCode::diff_log:
      return difference(x);
    case TransformCode::diff2:
    case TransformCode::diff2_log:
      return difference(difference(x));
    case TransformCode::diff_pct_change: {
      std::vector<double> pct(x.size() - 1);
      for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i - 1] == 0.0) throw std::invalid_argument("apply_transform: zero value under code 7");
        pct[i - 1] = x[i] / x[i - 1] - 1.0;
      }
      return difference(pct);
    }
  }
  throw std::invalid_argument("apply_transform: unknown code");
}

std::vector<std::pair<std::string, TransformCode>> load_transform_spec(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header row");
  const auto header = split_record(line);
  if (header.size() < 2 || header[0] != "series_name" || header[1] != "code") {
    throw std::invalid_argument(path.string() + ": expected header series_name,code");
  }
  std::vector<std::pair<std::string, TransformCode>> spec;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_record(line);
    auto code = fields.size() >= 2 ? parse_number(fields[1]) : std::nullopt;
    if (!code || *code != std::floor(*code)) {
      throw std::invalid_argument(path.string() + ": bad transform row: " + line);
    }
    spec.emplace_back(fields[0], transform_code_from_int(static_cast<int>(*code)));
  }
  return spec;
}

Dataset transform_dataset(const Dataset& dataset,
                          std::span<const std::pair<std::string, TransformCode>> spec) {
  std::unordered_map<std::string, TransformCode> codes;
  std::size_t max_order = 0;
  for (const auto& [name, code] : spec) {
    if (std::ranges::find(dataset.feature_names, name) == dataset.feature_names.end()) {
      throw std::invalid_argument("transform_dataset: unknown series " + name);
    }
    codes[name] = code;
    max_order = std::max(max_order, transform_order(code));
  }
  if (dataset.n() <= max_order) throw std::invalid_argument("transform_dataset: series too short");

  const std::size_t n_out = dataset.n() - max_order;
  Dataset out;
  out.feature_names = dataset.feature_names;
  out.features = Matrix(n_out, 0);
  for (std::size_t c = 0; c < dataset.p(); ++c) {
    auto it = codes.find(dataset.feature_names[c]);
    std::vector<double> col = it == codes.end()
                                  ? std::vector<double>(dataset.features.col(c).begin(),
                                                        dataset.features.col(c).end())
                                  : apply_transform(dataset.features.col(c), it->second);
    // Align on the last n_out observations.
    out.features.append_col(std::span<const double>(col).last(n_out));
  }
  out.response.assign(dataset.response.end() - static_cast<std::ptrdiff_t>(n_out), dataset.response.end());
  if (!dataset.time_index.empty()) {
    out.time_index.assign(dataset.time_index.end() - static_cast<std::ptrdiff_t>(n_out),
                          dataset.time_index.end());
  }
  return out;
}

TargetSeries build_target(std::span<const double> series, std::size_t h, TargetKind kind,
                          std::span<const double> risk_free) {
  const std::size_t n = series.size();
  if (h == 0) throw std::invalid_argument("build_target: h must be positive");
  if (h >= n) throw std::invalid_argument("build_target: h must be smaller than the series length");

  std::vector<double> logz(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (!(series[t] > 0.0)) throw std::invalid_argument("build_target: non-positive value under log target");
    logz[t] = std::log(series[t]);
  }

  TargetSeries out;
  switch (kind) {
    case TargetKind::log_diff:
      out.values.resize(n - h);
      for (std::size_t t = 0; t + h < n; ++t) out.values[t] = logz[t + h] - logz[t];
      break;
    case TargetKind::second_log_diff_cum:
      if (h + 1 >= n) throw std::invalid_argument("build_target: series too short for second differences");
      out.first_origin = 1;
      for (std::size_t t = 1; t + h < n; ++t) {
        out.values.push_back((logz[t + h] - logz[t + h - 1]) - (logz[t] - logz[t - 1]));
      }
      break;
    case TargetKind::excess:
      if (risk_free.size() != n) throw std::invalid_argument("build_target: risk-free series length differs");
      out.values.resize(n - h);
      for (std::size_t t = 0; t + h < n; ++t) {
        double rf = 0.0;
        for (std::size_t j = 1; j <= h; ++j) rf += risk_free[t + j];
        out.values[t] = (logz[t + h] - logz[t]) - rf;
      }
      break;
  }
  return out;
}

WindowPlan expanding_windows(std::size_t n_total, std::size_t initial_length, std::size_t h) {
  if (h == 0 || initial_length == 0) {
    throw std::invalid_argument("expanding_windows: initial length and horizon must be positive");
  }
  if (initial_length + h > n_total) {
    throw std::invalid_argument("expanding_windows: initial_length + h exceeds the sample");
  }
  WindowPlan plan{initial_length, h, {}};
  for (std::size_t end = initial_length; end + h <= n_total; ++end) plan.windows.push_back({end, end + h});
  return plan;
}

}  // namespace trf::data
