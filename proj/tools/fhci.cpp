// Command-line front end: fit, interval, diagnose, simulate.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fhci/fhci.hpp"

namespace {

using namespace fhci;

struct Common {
  std::string data;
  std::string method;
  double alpha = 0.05;
  std::string output;
  std::size_t threads = 0;
};

FayHerriotDataset read_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  try {
    return csv::read_dataset(in);
  } catch (const NonPositiveSamplingVariance& e) {
    // Row k of the data sits on line k + 1 after the header.
    throw Error(ErrorCode::NonPositiveSamplingVariance,
                "line " + std::to_string(e.area() + 1) + ", column 3: D must be positive");
  }
}

void emit(const csv::Table& t, const std::string& path) {
  if (path.empty() || path == "-") {
    t.write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  t.write(out);
}

VarianceEstimator parse_estimator(const std::string& name) {
  for (const auto e : {VarianceEstimator::REML, VarianceEstimator::ANOVA,
                       VarianceEstimator::LiLahiri, VarianceEstimator::YL_GLS,
                       VarianceEstimator::YL_OLS}) {
    if (to_string(e) == name) return e;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

std::string num(double v) { return csv::format_number(v); }

int cmd_fit(const Common& c) {
  const auto data = read_input(c.data);
  const VarianceEstimator est = parse_estimator(c.method);
  require_alpha(c.alpha);
  const double z = normal::z_half(c.alpha);
  const BetaMethod bm = centre_beta_method(est);

  auto estimate = [&](std::size_t i) {
    if (est == VarianceEstimator::ANOVA) {
      VarianceEstimate v;
      v.A_hat = anova_estimate(data);
      v.converged = true;
      v.boundary = v.A_hat == 0.0;
      return v;
    }
    return estimate_variance(data, adjustment_for(est, i, z));
  };

  csv::Table t;
  t.header = {"area", "y", "D", "theta_eb", "B_hat", "A_hat", "se", "mse_hat"};
  std::optional<VarianceEstimate> shared;
  if (!area_specific(est)) shared = estimate(0);
  if (shared && shared->boundary) {
    std::cerr << "warning: A_hat = 0 (boundary); EB estimates equal the synthetic fit\n";
  }
  std::size_t uniqueness_warnings = 0;
  for (std::size_t i = 0; i < data.m(); ++i) {
    const VarianceEstimate v = shared ? *shared : estimate(i);
    if (!v.uniqueness_condition_met) ++uniqueness_warnings;
    const double A = v.A_hat;
    const auto fit = fit_regression(data, A, bm);
    const auto eb = eb_estimate(data, i, A, fit.beta_hat);
    std::string mse = "NA";
    if (est == VarianceEstimator::YL_GLS && A > 0.0) mse = num(mse_estimate(data, i, A, z).total);
    t.rows.push_back({data.ids()[i], num(data.y(i)), num(data.D(i)), num(eb.theta_eb),
                      num(eb.shrinkage), num(A), num(eb.sigma), mse});
  }
  if (uniqueness_warnings > 0) {
    std::cerr << "warning: uniqueness condition m > (4 + p)/(1 - q_i) fails for "
              << uniqueness_warnings << " area(s)\n";
  }
  emit(t, c.output);
  return 0;
}

int cmd_interval(const Common& c, std::size_t B, std::uint64_t seed) {
  const auto data = read_input(c.data);
  const IntervalMethod method = parse_interval_method(c.method);
  if (B < 1) throw Error(ErrorCode::InvalidArgument, "B must be at least 1");
  BootstrapOptions boot;
  boot.B = B;
  boot.seed = seed;
  boot.threads = c.threads;
  const auto res = intervals_for_all_areas(data, method, c.alpha, boot);
  csv::Table t;
  t.header = {"area", "lower", "upper", "length", "method"};
  for (const auto& r : res) {
    t.rows.push_back({r.area, num(r.lower), num(r.upper), num(r.length()), r.method});
  }
  emit(t, c.output);
  return 0;
}

int cmd_diagnose(const Common& c, std::optional<double> A_opt) {
  const auto data = read_input(c.data);
  const VarianceEstimator est = parse_estimator(c.method);
  if (est == VarianceEstimator::ANOVA) {
    throw Error(ErrorCode::InvalidArgument, "diagnose needs an adjustment-based method");
  }
  require_alpha(c.alpha);
  const double z = normal::z_half(c.alpha);
  double A = 0.0;
  if (A_opt) {
    A = *A_opt;
    if (!(A > 0.0)) throw Error(ErrorCode::InvalidArgument, "--A must be positive");
  } else {
    A = estimate_variance(data, AdjustmentFactor::reml()).A_hat;
    if (A == 0.0) {
      throw Error(ErrorCode::SingularAtZero, "REML estimate is 0; pass --A to evaluate the terms");
    }
  }
  csv::Table t;
  t.header = {"area", "a", "b", "predicted_coverage"};
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto ce = coverage_expansion(data, i, A, c.alpha, adjustment_for(est, i, z),
                                       centre_beta_method(est));
    t.rows.push_back({data.ids()[i], num(ce.a_i), num(ce.b_i), num(ce.predicted_coverage)});
  }
  emit(t, c.output);
  return 0;
}

struct SimulateArgs {
  std::string pattern;
  std::string config;
  std::optional<std::size_t> R, B;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string methods;
  std::string csv_path;
  std::string table_path;
  std::size_t threads = 0;
};

int cmd_simulate(const SimulateArgs& s) {
  SimulationDesign d = pattern_design('a');
  if (!s.config.empty()) {
    std::ifstream in(s.config);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + s.config);
    d = read_design_config(in, d);
  }
  if (!s.pattern.empty()) apply_setting(d, "pattern", s.pattern);
  if (s.R) d.R = *s.R;
  if (s.B) d.B = *s.B;
  if (s.seed) d.seed = *s.seed;
  if (s.alpha) d.alpha = *s.alpha;
  if (!s.methods.empty()) d.methods = parse_method_list(s.methods);
  if (s.threads > 0) d.threads = s.threads;
  if (d.R < 1 || d.B < 1) throw Error(ErrorCode::InvalidArgument, "R and B must be at least 1");

  const auto report = run_simulation(d);
  if (!s.csv_path.empty()) emit(report.to_table(), s.csv_path);
  if (!s.table_path.empty()) {
    std::ofstream out(s.table_path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + s.table_path);
    out << report.to_text();
  }
  if (s.csv_path.empty() && s.table_path.empty()) std::cout << report.to_text();
  if (s.csv_path == "-") std::cout << '\n' << report.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical Bayes confidence intervals for Fay-Herriot small-area models"};
  app.require_subcommand(1);

  Common common;
  std::size_t B = 1000;
  std::uint64_t seed = 1;
  std::optional<double> A_opt;
  SimulateArgs sim;

  auto* fit = app.add_subcommand("fit", "estimate A and per-area EB estimates");
  auto* interval = app.add_subcommand("interval", "per-area confidence intervals");
  auto* diagnose = app.add_subcommand("diagnose", "per-area coverage expansion terms");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study");

  for (auto* sub : {fit, interval, diagnose}) {
    sub->add_option("--data", common.data, "input CSV: area,y,D,x1,...")->required();
    sub->add_option("--method", common.method, "method name");
    sub->add_option("--alpha", common.alpha, "1 - confidence level")->capture_default_str();
    sub->add_option("--output,-o", common.output, "output CSV (default stdout)");
  }
  interval->add_option("--B", B, "bootstrap replicates")->capture_default_str();
  interval->add_option("--seed", seed, "random seed")->capture_default_str();
  interval->add_option("--threads", common.threads, "worker threads (default FH_THREADS or all)");
  diagnose->add_option("--A", A_opt, "evaluate at this A instead of the REML estimate");

  simulate->add_option("--pattern", sim.pattern, "a, b or lev-<q>-<D>");
  simulate->add_option("--config", sim.config, "key=value design file");
  simulate->add_option("--R", sim.R, "Monte Carlo replicates");
  simulate->add_option("--B", sim.B, "bootstrap replicates");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--alpha", sim.alpha, "1 - confidence level");
  simulate->add_option("--methods", sim.methods, "comma-separated interval methods");
  simulate->add_option("--csv", sim.csv_path, "write the CSV report here ('-' for stdout)");
  simulate->add_option("--table", sim.table_path, "write the text table here");
  simulate->add_option("--threads", sim.threads, "worker threads (default FH_THREADS or all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*fit) {
      if (common.method.empty()) common.method = "reml";
      return cmd_fit(common);
    }
    if (*interval) {
      if (common.method.empty()) common.method = "cox-yl-gls";
      return cmd_interval(common, B, seed);
    }
    if (*diagnose) {
      if (common.method.empty()) common.method = "yl-gls";
      return cmd_diagnose(common, A_opt);
    }
    return cmd_simulate(sim);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
