#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "table.hpp"
#include "trf/datacore.hpp"
#include "trf/evallab.hpp"
#include "trf/format.hpp"
#include "trf/forest.hpp"
#include "trf/simlab.hpp"
#include "trf/targeting.hpp"
#include "trf/theory.hpp"

namespace trf::cli {
namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::string config_path;
  unsigned threads = 0;
  std::string output_dir;
  std::string format = "csv";
};

struct ForestFlags {
  std::size_t trees = 500;
  long long max_depth = 3;  // negative: unlimited
  double mtry_fraction = 1.0 / 3.0;
  std::size_t min_leaf = 1;
  bool best_first = false;
  long long max_leaves = -1;  // negative: unlimited
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--trees", trees, "Trees per forest")->check(CLI::PositiveNumber);
    app->add_option("--max-depth", max_depth, "Maximum tree depth (negative for unlimited)");
    app->add_option("--mtry-fraction", mtry_fraction, "Fraction of predictors tried per node")
        ->check(CLI::Range(1e-9, 1.0));
    app->add_option("--min-leaf", min_leaf, "Minimum observations per leaf")->check(CLI::PositiveNumber);
    app->add_option("--max-leaves", max_leaves, "Maximum leaves per tree (negative for unlimited)");
    app->add_flag("--best-first", best_first, "Grow trees best-first instead of depth-first");
    app->add_option("--seed", seed, "Master seed")->required();
  }

  forest::ForestConfig config(unsigned threads) const {
    forest::ForestConfig c;
    c.n_trees = trees;
    c.seed = seed;
    c.threads = threads;
    c.tree.mtry = cart::Mtry::fraction(mtry_fraction);
    if (max_depth >= 0) c.tree.max_depth = static_cast<std::size_t>(max_depth);
    if (max_leaves >= 0) c.tree.max_leaf_nodes = static_cast<std::size_t>(max_leaves);
    c.tree.min_samples_leaf = min_leaf;
    c.tree.growth = best_first ? cart::Growth::best_first : cart::Growth::depth_first;
    return c;
  }

  ojson echo() const {
    return {{"trees", trees},
            {"max_depth", max_depth < 0 ? ojson(nullptr) : ojson(max_depth)},
            {"mtry_fraction", mtry_fraction},
            {"min_leaf", min_leaf},
            {"max_leaves", max_leaves < 0 ? ojson(nullptr) : ojson(max_leaves)},
            {"growth", best_first ? "best_first" : "depth_first"},
            {"seed", seed}};
  }
};

struct DataFlags {
  std::string csv;
  std::string response;
  std::string time_column;

  void add_to(CLI::App* app) {
    app->add_option("--csv", csv, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
    app->add_option("--response", response, "Name of the response column")->required();
    app->add_option("--time-column", time_column, "Column holding period labels");
  }

  data::Dataset load(std::ostream& err) const {
    auto loaded = data::load_csv(csv, response,
                                 time_column.empty() ? std::nullopt : std::optional<std::string>(time_column));
    if (loaded.dropped_rows > 0) err << "dropped " << loaded.dropped_rows << " rows with missing values\n";
    return std::move(loaded.dataset);
  }

  ojson echo() const {
    return {{"csv", csv}, {"response", response}, {"time_column", time_column.empty() ? ojson(nullptr) : ojson(time_column)}};
  }
};

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw CLI::ValidationError("bad count in list: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("empty list: " + text);
  return out;
}

/// Collects results either into files under the output directory or onto
/// the result stream, and echoes the resolved configuration.
class Emitter {
 public:
  Emitter(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  void text(const std::string& name, const std::string& body) {
    if (g_.output_dir.empty()) {
      out_ << body;
      return;
    }
    fs::create_directories(g_.output_dir);
    const fs::path path = fs::path(g_.output_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << body;
    err_ << "wrote " << path.string() << '\n';
  }

  void table(const std::string& stem, const Table& t) {
    std::ostringstream s;
    if (g_.format == "json") t.write_json(s);
    else t.write_csv(s);
    text(stem + (g_.format == "json" ? ".json" : ".csv"), s.str());
  }

  void config(const std::string& command, ojson payload) {
    ojson c;
    c["command"] = command;
    c["threads"] = g_.threads;
    c["output_dir"] = g_.output_dir.empty() ? ojson(nullptr) : ojson(g_.output_dir);
    c["format"] = g_.format;
    for (auto& [k, v] : payload.items()) c[k] = v;
    err_ << c.dump() << '\n';
    if (!g_.output_dir.empty()) {
      fs::create_directories(g_.output_dir);
      std::ofstream f(fs::path(g_.output_dir) / "config.json", std::ios::binary);
      f << c.dump(2) << '\n';
    }
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
};

/// Appends "--key value" for every key of a flat JSON config object whose
/// flag does not already appear on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw CLI::ValidationError("--config", "config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    if (flag == "--config") continue;
    const bool given = std::ranges::any_of(args, [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag);
      args.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag);
      args.push_back(value.dump());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(flag);
      args.push_back(joined);
    } else {
      throw CLI::ValidationError("--config", "unsupported value for key " + key);
    }
  }
  return args;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Targeted random forests: theory calculators, simulations and forecasting experiments", "trf"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Commands:\n"
      "  theory bounds | theory cstar | theory mse | theory table\n"
      "  sim rho\n"
      "  targets | fit | forecast | diagnose\n"
      "Run 'trf <command> --help' for the options of a command.");

  Globals g;
  if (const char* env = std::getenv("TRF_OUTPUT_DIR")) g.output_dir = env;
  app.add_option("--config", g.config_path, "JSON file of option values; command-line flags take precedence");
  app.add_option("--threads", g.threads, "Worker threads (0: all hardware threads)");
  app.add_option("--output-dir", g.output_dir, "Write results here instead of stdout (default: $TRF_OUTPUT_DIR)");
  app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}));

  Emitter emit(g, out, err);

  // theory
  auto* theory = app.add_subcommand("theory", "Closed-form bounds and numerical calculators");
  theory->require_subcommand(1);

  std::size_t b_a = 0, b_s = 0, b_m = 0;
  int b_digits = 3;
  auto* bounds = theory->add_subcommand("bounds", "Upper bound on the probability of a strong split");
  bounds->add_option("--a", b_a, "Candidate directions")->required();
  bounds->add_option("--s", b_s, "Strong directions among them")->required();
  bounds->add_option("--m", b_m, "Size of M_try")->required();
  bounds->add_option("--digits", b_digits, "Decimals printed")->check(CLI::Range(0, 17));
  bounds->callback([&] {
    emit.config("theory bounds", {{"a", b_a}, {"s", b_s}, {"m", b_m}, {"digits", b_digits}});
    emit.text("bounds.txt", format_fixed(theory::upper_bound_split_prob(b_a, b_s, b_m), b_digits) + "\n");
  });

  std::string c_dgp = "linear";
  std::size_t c_grid = 10000;
  int c_digits = 4;
  auto* cstar = theory->add_subcommand("cstar", "Maximal population impurity decrease of a named function");
  cstar->add_option("--dgp", c_dgp, "linear, quadratic, piecewise15 or sine:<alpha> (e.g. sine:4pi)")->required();
  cstar->add_option("--grid", c_grid, "Threshold grid size")->check(CLI::Range(1000, 10000000));
  cstar->add_option("--digits", c_digits, "Decimals printed")->check(CLI::Range(0, 17));
  cstar->callback([&] {
    emit.config("theory cstar", {{"dgp", c_dgp}, {"grid", c_grid}, {"digits", c_digits}});
    const auto fn = theory::fn_from_name(c_dgp);
    const auto r = theory::cstar_numeric_detail(fn, c_grid);
    emit.text("cstar.txt", format_fixed(r.value, c_digits) + "\n");
  });

  std::size_t m_L = 1;
  std::optional<double> m_rho;
  double m_beta1 = 3.4641016151377544;
  int m_digits = 3;
  auto* mse = theory->add_subcommand("mse", "MSE of the targeted tree, and bounds for an ordinary tree given rho");
  mse->add_option("--L", m_L, "Number of leaves")->required()->check(CLI::PositiveNumber);
  mse->add_option("--rho", m_rho, "Probability of a strong split; adds the ordinary-tree bounds")
      ->check(CLI::Range(0.0, 1.0));
  mse->add_option("--beta1", m_beta1, "Slope of the linear regression function");
  mse->add_option("--digits", m_digits, "Decimals printed")->check(CLI::Range(0, 17));
  mse->callback([&] {
    emit.config("theory mse", {{"L", m_L},
                               {"rho", m_rho ? ojson(*m_rho) : ojson(nullptr)},
                               {"beta1", m_beta1},
                               {"digits", m_digits}});
    const double targeted = theory::mse_targeted(m_L, m_beta1);
    if (!m_rho) {
      emit.text("mse.txt", format_fixed(targeted, m_digits) + "\n");
      return;
    }
    if (m_L < 2) throw std::invalid_argument("--rho needs --L >= 2");
    const auto b = theory::mse_bounds_ordinary(m_L, *m_rho, m_beta1);
    Table t({"L", "rho", "upper", "lower", "targeted"});
    t.add_row({static_cast<long long>(m_L), *m_rho, b.upper, b.lower, targeted});
    emit.table("mse", t);
  });

  std::string f_leaves = "4,8,12";
  std::size_t f_steps = 100;
  double f_beta1 = 3.4641016151377544;
  auto* fig = theory->add_subcommand("table", "Bounds over a rho grid for several leaf counts, for plotting");
  fig->add_option("--L", f_leaves, "Comma-separated leaf counts (each >= 2)");
  fig->add_option("--steps", f_steps, "Number of rho intervals on [0, 1]")->check(CLI::PositiveNumber);
  fig->add_option("--beta1", f_beta1, "Slope of the linear regression function");
  fig->callback([&] {
    const auto leaves = parse_counts(f_leaves);
    emit.config("theory table", {{"L", leaves}, {"steps", f_steps}, {"beta1", f_beta1}});
    std::vector<double> rhos;
    for (std::size_t k = 0; k <= f_steps; ++k) rhos.push_back(static_cast<double>(k) / static_cast<double>(f_steps));
    Table t({"L", "rho", "upper", "lower", "targeted"});
    for (const auto& r : theory::bounds_table(leaves, rhos, f_beta1))
      t.add_row({static_cast<long long>(r.L), r.rho, r.upper, r.lower, r.targeted});
    emit.table("bounds_table", t);
  });

  // sim
  auto* sim = app.add_subcommand("sim", "Monte Carlo experiments");
  sim->require_subcommand(1);
  std::string s_grid;
  std::size_t s_reps = 10000;
  std::uint64_t s_seed = 0;
  auto* simrho = sim->add_subcommand("rho", "Probability that the root split uses a strong predictor");
  simrho->add_option("--grid-file", s_grid, "CSV with header kind,p,n,snr")->required()->check(CLI::ExistingFile);
  simrho->add_option("--reps", s_reps, "Replications per cell")->check(CLI::PositiveNumber);
  simrho->add_option("--seed", s_seed, "Master seed")->required();
  simrho->callback([&] {
    emit.config("sim rho", {{"grid_file", s_grid}, {"reps", s_reps}, {"seed", s_seed}});
    const auto rows = sim::sweep(sim::read_grid(s_grid), s_reps, s_seed, g.threads);
    Table t({"kind", "p", "n", "snr", "reps", "rho_hat", "se", "tie_rate", "seed"});
    for (const auto& r : rows) {
      t.add_row({r.dgp.kind_label(), static_cast<long long>(r.dgp.p), static_cast<long long>(r.n), r.dgp.snr,
                 static_cast<long long>(r.reps), r.estimate, r.standard_error, r.tie_rate, std::to_string(r.seed)});
    }
    emit.table("rho", t);
  });

  // targets
  DataFlags t_data;
  std::size_t t_sprime = 0;
  std::string t_expand = "none";
  auto* targets = app.add_subcommand("targets", "LASSO selection of s' predictors");
  t_data.add_to(targets);
  targets->add_option("--sprime", t_sprime, "Number of predictors to keep")->required()->check(CLI::PositiveNumber);
  targets->add_option("--expand", t_expand, "Feature expansion")
      ->check(CLI::IsMember({"none", "powers_23", "powers_23_plus_interactions"}));
  targets->callback([&] {
    ojson c = t_data.echo();
    c["sprime"] = t_sprime;
    c["expand"] = t_expand;
    emit.config("targets", c);
    const auto ds = t_data.load(err);
    const auto result = targeting::select_targets(ds, t_sprime, targeting::expansion_from_string(t_expand));
    for (const auto& w : result.selection.warnings) err << "warning: " << w << '\n';
    if (g.format == "json") {
      emit.text("targets.json", targeting::to_json(result.selection, 2) + "\n");
    } else {
      Table t({"index", "name", "score"});
      for (std::size_t k = 0; k < result.selection.indices.size(); ++k)
        t.add_row({static_cast<long long>(result.selection.indices[k]), result.selection.names[k],
                   result.selection.scores[k]});
      emit.table("targets", t);
    }
  });

  // fit
  DataFlags fit_data;
  ForestFlags fit_forest;
  std::size_t fit_sprime = 0;
  std::string fit_expand = "none";
  auto* fit = app.add_subcommand("fit", "Fit a random forest, or a targeted one with --sprime");
  fit_data.add_to(fit);
  fit_forest.add_to(fit);
  fit->add_option("--sprime", fit_sprime, "Target this many predictors before growing the forest");
  fit->add_option("--expand", fit_expand, "Feature expansion used for targeting")
      ->check(CLI::IsMember({"none", "powers_23", "powers_23_plus_interactions"}));
  fit->callback([&] {
    ojson c = fit_data.echo();
    c["forest"] = fit_forest.echo();
    c["sprime"] = fit_sprime == 0 ? ojson(nullptr) : ojson(fit_sprime);
    c["expand"] = fit_expand;
    emit.config("fit", c);
    const auto ds = fit_data.load(err);
    const auto cfg = fit_forest.config(g.threads);
    std::string body;
    if (fit_sprime == 0) {
      body = "{\"selection\":null,\"forest\":" + forest::to_json(forest::fit_forest(ds, cfg)) + "}\n";
    } else {
      const auto model = targeting::fit_trf(ds, fit_sprime, targeting::expansion_from_string(fit_expand), cfg);
      for (const auto& w : model.selection.warnings) err << "warning: " << w << '\n';
      body = "{\"selection\":" + targeting::to_json(model.selection) + ",\"forest\":" + forest::to_json(model.forest) +
             "}\n";
    }
    emit.text("model.json", body);
  });

  // forecast
  DataFlags fc_data;
  ForestFlags fc_forest;
  std::size_t fc_h = 1;
  std::size_t fc_initial = 0;
  std::string fc_methods = "rf";
  std::string fc_target = "none";
  std::string fc_regimes;
  std::string fc_regime_label;
  auto* forecast = app.add_subcommand("forecast", "Expanding-window forecast comparison");
  forecast->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  fc_data.add_to(forecast);
  fc_forest.add_to(forecast);
  forecast->add_option("--h", fc_h, "Forecast horizon")->required()->check(CLI::PositiveNumber);
  forecast->add_option("--initial", fc_initial, "Rows in the first training window")
      ->required()
      ->check(CLI::PositiveNumber);
  forecast->add_option("--methods", fc_methods, "Comma-separated methods: rf, trf:<s'>[:<expansion>]");
  forecast->add_option("--target", fc_target,
                       "Build the h-step target from the response levels: none, log_diff or second_log_diff_cum")
      ->check(CLI::IsMember({"none", "log_diff", "second_log_diff_cum"}));
  forecast->add_option("--regimes", fc_regimes, "CSV with header time_index,label")->check(CLI::ExistingFile);
  forecast->add_option("--regime", fc_regime_label, "Regime label used for the masked MSE ratios");
  forecast->callback([&] {
    const auto methods = eval::methods_from_string(fc_methods);
    ojson c = fc_data.echo();
    c["forest"] = fc_forest.echo();
    c["h"] = fc_h;
    c["initial"] = fc_initial;
    ojson tags = ojson::array();
    for (const auto& m : methods) tags.push_back(m.tag());
    c["methods"] = tags;
    c["target"] = fc_target;
    c["regimes"] = fc_regimes.empty() ? ojson(nullptr) : ojson(fc_regimes);
    c["regime"] = fc_regime_label.empty() ? ojson(nullptr) : ojson(fc_regime_label);
    emit.config("forecast", c);

    auto ds = fc_data.load(err);
    if (fc_target != "none") {
      const auto kind =
          fc_target == "log_diff" ? data::TargetKind::log_diff : data::TargetKind::second_log_diff_cum;
      const auto target = data::build_target(ds.response, fc_h, kind);
      std::vector<std::size_t> rows(target.values.size());
      for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = target.first_origin + k;
      ds = ds.select_rows(rows);
      ds.response = target.values;
    }
    const auto plan = data::expanding_windows(ds.n(), fc_initial, fc_h);
    const auto report = eval::run_forecast_experiment(ds, plan, methods, fc_forest.config(g.threads));

    Table t({"window", "train_end", "target_time", "time", "method", "s_prime", "actual", "forecast", "squared_error"});
    for (const auto& r : report.records) {
      t.add_row({static_cast<long long>(r.window), static_cast<long long>(r.train_end),
                 static_cast<long long>(r.target_time), r.time_label, r.method, static_cast<long long>(r.s_prime),
                 r.actual, r.forecast, r.squared_error});
    }
    emit.table("forecast", t);

    // Every method against the first one.
    ojson summary;
    summary["baseline"] = report.methods.front();
    std::optional<std::vector<bool>> mask;
    if (!fc_regimes.empty() && !fc_regime_label.empty())
      mask = eval::regime_mask(report, eval::load_regimes(fc_regimes), fc_regime_label);
    ojson comparisons = ojson::array();
    const auto base = report.squared_errors(report.methods.front());
    for (std::size_t k = 1; k < report.methods.size(); ++k) {
      const auto& m = report.methods[k];
      ojson row{{"method", m}, {"mse_ratio", eval::mse_ratio(report, m, report.methods.front())}};
      if (mask) row["mse_ratio_regime"] = eval::mse_ratio(report, m, report.methods.front(), mask);
      const auto own = report.squared_errors(m);
      if (own.size() >= fc_h + 2) row["dm"] = ojson::parse(eval::to_json(eval::dm_test(own, base, fc_h)));
      comparisons.push_back(std::move(row));
    }
    summary["comparisons"] = std::move(comparisons);
    emit.text("forecast_summary.json", summary.dump(2) + "\n");
  });

  // diagnose
  DataFlags dg_data;
  ForestFlags dg_forest;
  std::string dg_grid;
  double dg_train_fraction = 0.5;
  std::string dg_expand = "none";
  auto* diagnose = app.add_subcommand("diagnose", "Tree error strength and correlation across s'");
  dg_data.add_to(diagnose);
  dg_forest.add_to(diagnose);
  diagnose->add_option("--sprime-grid", dg_grid, "Comma-separated s' values")->required();
  diagnose->add_option("--train-fraction", dg_train_fraction, "Leading share of rows used for training")
      ->check(CLI::Range(0.01, 0.99));
  diagnose->add_option("--expand", dg_expand, "Feature expansion used for targeting")
      ->check(CLI::IsMember({"none", "powers_23", "powers_23_plus_interactions"}));
  diagnose->callback([&] {
    const auto grid = parse_counts(dg_grid);
    ojson c = dg_data.echo();
    c["forest"] = dg_forest.echo();
    c["sprime_grid"] = grid;
    c["train_fraction"] = dg_train_fraction;
    c["expand"] = dg_expand;
    emit.config("diagnose", c);
    const auto ds = dg_data.load(err);
    const auto n_train = static_cast<std::size_t>(dg_train_fraction * static_cast<double>(ds.n()));
    if (n_train < 2 || n_train >= ds.n()) throw std::invalid_argument("train fraction leaves an empty split");
    std::vector<std::size_t> train(n_train), test(ds.n() - n_train);
    for (std::size_t i = 0; i < n_train; ++i) train[i] = i;
    for (std::size_t i = 0; i < test.size(); ++i) test[i] = n_train + i;
    const auto curve = eval::tree_diagnostics(ds, train, test, grid, dg_forest.config(g.threads), {},
                                              targeting::expansion_from_string(dg_expand));
    Table t({"s_prime", "tree_mse", "tree_correlation", "forest_mse"});
    for (const auto& r : curve.records)
      t.add_row({static_cast<long long>(r.s_prime), r.tree_mse, r.tree_correlation, r.forest_mse});
    emit.table("diagnostics", t);
  });

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) args = merge_config(args, args[i + 1]);
      else if (args[i].rfind("--config=", 0) == 0) args = merge_config(args, args[i].substr(9));
      else continue;
      break;
    }
    std::vector<const char*> cargv{argv[0]};
    for (const auto& a : args) cargv.push_back(a.c_str());
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);  // prints the help of the subcommand that asked for it
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Validation errors raised inside callbacks are usage errors too.
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace trf::cli
