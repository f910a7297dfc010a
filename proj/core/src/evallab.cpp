#include "trf/evallab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "trf/format.hpp"
#include "trf/parallel.hpp"
#include "trf/rng.hpp"

namespace trf::eval {
namespace {

struct Fitted {
  std::vector<std::size_t> columns;  // empty: all columns
  forest::ForestModel forest;

  double predict(std::span<const double> x) const {
    if (columns.empty()) return forest.predict(x);
    std::vector<double> sub;
    sub.reserve(columns.size());
    for (auto j : columns) sub.push_back(x[j]);
    return forest.predict(sub);
  }
};

Fitted fit_method(const data::Dataset& train, const Method& m, const forest::ForestConfig& config,
                  const targeting::SelectOptions& select) {
  if (m.kind == Method::Kind::rf) return {{}, forest::fit_forest(train, config)};
  auto model = targeting::fit_trf(train, m.s_prime, m.expansion, config, select);
  return {std::move(model.selection.indices), std::move(model.forest)};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

std::string Method::tag() const {
  if (kind == Kind::rf) return "rf";
  std::string t = "trf:" + std::to_string(s_prime);
  if (expansion != targeting::Expansion::none) t += ":" + targeting::to_string(expansion);
  return t;
}

Method method_from_string(const std::string& text) {
  if (text == "rf") return Method::rf();
  if (text.rfind("trf:", 0) != 0) throw std::invalid_argument("unknown method: " + text);
  const std::string rest = text.substr(4);
  const auto colon = rest.find(':');
  const std::string count = rest.substr(0, colon);
  std::size_t used = 0;
  unsigned long s = 0;
  try {
    s = std::stoul(count, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != count.size() || s == 0) throw std::invalid_argument("bad s' in method: " + text);
  const auto expansion =
      colon == std::string::npos ? targeting::Expansion::none : targeting::expansion_from_string(rest.substr(colon + 1));
  return Method::trf(s, expansion);
}

std::vector<Method> methods_from_string(const std::string& text) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(method_from_string(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

std::vector<double> ForecastReport::squared_errors(const std::string& method) const {
  const auto it = std::ranges::find(methods, method);
  if (it == methods.end()) throw std::invalid_argument("method not in report: " + method);
  const auto offset = static_cast<std::size_t>(it - methods.begin());
  std::vector<double> out;
  for (std::size_t i = offset; i < records.size(); i += methods.size()) out.push_back(records[i].squared_error);
  return out;
}

std::vector<std::string> ForecastReport::target_labels() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < records.size(); i += methods.size()) out.push_back(records[i].time_label);
  return out;
}

ForecastReport run_forecast_experiment(const data::Dataset& dataset, const data::WindowPlan& plan,
                                       const std::vector<Method>& methods, const forest::ForestConfig& config,
                                       const targeting::SelectOptions& select) {
  if (methods.empty()) throw std::invalid_argument("run_forecast_experiment: no methods");
  for (const auto& w : plan.windows) {
    if (w.train_end < 1 || w.target_time > dataset.n() || w.target_time < w.train_end + plan.horizon)
      throw std::invalid_argument("run_forecast_experiment: window does not fit the dataset");
  }
  ForecastReport report;
  for (const auto& m : methods) {
    const auto tag = m.tag();
    if (std::ranges::find(report.methods, tag) != report.methods.end())
      throw std::invalid_argument("duplicate method " + tag);
    report.methods.push_back(tag);
  }
  report.records.resize(plan.windows.size() * methods.size());

  forest::ForestConfig inner = config;
  inner.threads = 1;
  parallel_for(plan.windows.size(), config.threads, [&](std::size_t w) {
    const auto& win = plan.windows[w];
    const auto train = dataset.slice(0, win.train_end);
    const std::size_t row = win.target_time - 1;
    const auto x = dataset.features.row(row);
    forest::ForestConfig cfg = inner;
    cfg.seed = derive_seed(config.seed, w);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto fitted = fit_method(train, methods[k], cfg, select);
      ForecastRecord& r = report.records[w * methods.size() + k];
      r.window = w;
      r.train_end = win.train_end;
      r.target_time = win.target_time;
      r.time_label = dataset.time_index.empty() ? std::to_string(win.target_time) : dataset.time_index[row];
      r.method = report.methods[k];
      r.s_prime = fitted.columns.empty() ? dataset.p() : fitted.columns.size();
      r.actual = dataset.response[row];
      r.forecast = fitted.predict(x);
      r.squared_error = (r.actual - r.forecast) * (r.actual - r.forecast);
    }
  });
  return report;
}

double mse_ratio(const ForecastReport& report, const std::string& a, const std::string& b,
                 const std::optional<std::vector<bool>>& mask) {
  const auto ea = report.squared_errors(a);
  const auto eb = report.squared_errors(b);
  if (mask && mask->size() != ea.size())
    throw std::invalid_argument("mse_ratio: mask length " + std::to_string(mask->size()) + " differs from " +
                                std::to_string(ea.size()) + " windows");
  double sa = 0.0;
  double sb = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    sa += ea[i];
    sb += eb[i];
    ++used;
  }
  if (used == 0) throw std::invalid_argument("mse_ratio: mask selects no window");
  if (sb == 0.0) throw std::domain_error("mse_ratio: zero mean squared error for " + b);
  return sa / sb;
}

std::map<std::string, std::string> load_regimes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open regime file " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_index,label") throw std::runtime_error("regime file header must be time_index,label");
  std::map<std::string, std::string> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("regime file: malformed line '" + line + "'");
    out[line.substr(0, comma)] = line.substr(comma + 1);
  }
  return out;
}

std::vector<bool> regime_mask(const ForecastReport& report, const std::map<std::string, std::string>& regimes,
                              const std::string& label) {
  std::vector<bool> mask;
  for (const auto& t : report.target_labels()) {
    const auto it = regimes.find(t);
    mask.push_back(it != regimes.end() && it->second == label);
  }
  return mask;
}

DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, std::size_t h) {
  if (loss_a.size() != loss_b.size()) throw std::invalid_argument("dm_test: loss series differ in length");
  if (h < 1) throw std::invalid_argument("dm_test: horizon must be >= 1");
  const std::size_t T = loss_a.size();
  if (T < h + 2) throw std::invalid_argument("dm_test: need at least h + 2 observations");

  std::vector<double> d(T);
  for (std::size_t t = 0; t < T; ++t) d[t] = loss_b[t] - loss_a[t];
  const double dT = static_cast<double>(T);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= dT;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < T; ++t) s += (d[t] - mean) * (d[t - lag] - mean);
    return s / dT;
  };
  double var = autocov(0);
  for (std::size_t j = 1; j < h; ++j) {
    const double w = 1.0 - static_cast<double>(j) / static_cast<double>(h);
    var += 2.0 * w * autocov(j);
  }

  DmResult r;
  r.horizon = h;
  r.mean_differential = mean;
  r.hac_variance = var;
  if (!(var > 0.0)) return r;
  r.statistic = mean / std::sqrt(var / dT);
  r.p_value = 0.5 * std::erfc(r.statistic / std::numbers::sqrt2);
  return r;
}

ErrorDiagnostics error_diagnostics(const Matrix& predictions, std::span<const double> actual) {
  const std::size_t T = predictions.rows();
  const std::size_t B = predictions.cols();
  if (T == 0 || B == 0) throw std::invalid_argument("error_diagnostics: empty prediction matrix");
  if (actual.size() != T) throw std::invalid_argument("error_diagnostics: actual length mismatch");
  const double dT = static_cast<double>(T);
  const double dB = static_cast<double>(B);

  std::vector<double> row_sum(T, 0.0);
  std::vector<double> row_sq(T, 0.0);
  std::vector<double> kappa_diag(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const auto col = predictions.col(b);
    for (std::size_t t = 0; t < T; ++t) {
      const double e = actual[t] - col[t];
      row_sum[t] += e;
      row_sq[t] += e * e;
      kappa_diag[b] += e * e;
    }
  }
  ErrorDiagnostics out;
  double total_sq = 0.0;
  double pair_sum = 0.0;
  double forest_sq = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    total_sq += row_sq[t];
    // sum over b != b' of e_bt e_b't.
    pair_sum += row_sum[t] * row_sum[t] - row_sq[t];
    const double fe = row_sum[t] / dB;
    forest_sq += fe * fe;
  }
  out.tree_mse = total_sq / (dT * dB);
  out.forest_mse = forest_sq / dT;
  double mean_sd = 0.0;
  for (double k : kappa_diag) mean_sd += std::sqrt(k / dT);
  mean_sd /= dB;
  if (B < 2 || mean_sd == 0.0) {
    out.tree_correlation = 1.0;
    return out;
  }
  const double mean_cov = pair_sum / (dT * dB * (dB - 1.0));
  out.tree_correlation = mean_cov / (mean_sd * mean_sd);
  return out;
}

DiagnosticsCurve tree_diagnostics(const data::Dataset& dataset, std::span<const std::size_t> train_rows,
                                  std::span<const std::size_t> test_rows, std::span<const std::size_t> s_prime_grid,
                                  const forest::ForestConfig& config, const targeting::SelectOptions& select,
                                  targeting::Expansion expansion) {
  if (s_prime_grid.empty()) throw std::invalid_argument("tree_diagnostics: empty s' grid");
  if (test_rows.empty()) throw std::invalid_argument("tree_diagnostics: empty test set");
  if (train_rows.empty()) throw std::invalid_argument("tree_diagnostics: empty training set");
  std::vector<std::size_t> a(train_rows.begin(), train_rows.end());
  std::vector<std::size_t> b(test_rows.begin(), test_rows.end());
  std::ranges::sort(a);
  std::ranges::sort(b);
  std::vector<std::size_t> common;
  std::ranges::set_intersection(a, b, std::back_inserter(common));
  if (!common.empty()) throw std::invalid_argument("tree_diagnostics: training and test rows overlap");

  const auto train = dataset.select_rows(train_rows);
  const auto test = dataset.select_rows(test_rows);
  DiagnosticsCurve curve;
  curve.records.resize(s_prime_grid.size());
  forest::ForestConfig inner = config;
  inner.threads = 1;
  parallel_for(s_prime_grid.size(), config.threads, [&](std::size_t c) {
    const std::size_t s = s_prime_grid[c];
    const auto model = targeting::fit_trf(train, s, expansion, inner, select);
    const auto preds = forest::tree_predictions(model.forest, test.features.select_cols(model.selection.indices));
    const auto d = error_diagnostics(preds, test.response);
    curve.records[c] = {s, d.tree_mse, d.tree_correlation, d.forest_mse};
  });
  return curve;
}

std::vector<HoldoutResult> evaluate_holdout(const data::Dataset& train, const data::Dataset& test,
                                            const std::vector<Method>& methods, const forest::ForestConfig& config,
                                            const targeting::SelectOptions& select) {
  if (test.n() == 0) throw std::invalid_argument("evaluate_holdout: empty test set");
  if (test.p() != train.p()) throw std::invalid_argument("evaluate_holdout: train and test differ in predictors");
  std::vector<HoldoutResult> out;
  for (const auto& m : methods) {
    const auto fitted = fit_method(train, m, config, select);
    HoldoutResult r;
    r.method = m.tag();
    const auto X = fitted.columns.empty() ? test.features : test.features.select_cols(fitted.columns);
    r.predictions = fitted.forest.predict(X);
    double sse = 0.0;
    for (std::size_t i = 0; i < test.n(); ++i) {
      const double e = test.response[i] - r.predictions[i];
      sse += e * e;
    }
    r.mse = sse / static_cast<double>(test.n());
    out.push_back(std::move(r));
  }
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

void write_report_csv(std::ostream& out, const ForecastReport& report) {
  out << "window,train_end,target_time,time,method,s_prime,actual,forecast,squared_error\n";
  for (const auto& r : report.records) {
    out << r.window << ',' << r.train_end << ',' << r.target_time << ',' << r.time_label << ',' << r.method << ','
        << r.s_prime << ',' << format_double(r.actual) << ',' << format_double(r.forecast) << ','
        << format_double(r.squared_error) << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const DiagnosticsCurve& curve) {
  out << "s_prime,tree_mse,tree_correlation,forest_mse\n";
  for (const auto& r : curve.records) {
    out << r.s_prime << ',' << format_double(r.tree_mse) << ',' << format_double(r.tree_correlation) << ','
        << format_double(r.forest_mse) << '\n';
  }
}

}  // namespace trf::eval
