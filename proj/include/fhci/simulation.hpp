#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fhci/csv.hpp"
#include "fhci/intervals.hpp"
#include "fhci/parallel.hpp"
#include "fhci/rng.hpp"

namespace fhci {

/// A Monte Carlo design: fixed covariates and sampling variances, true
/// (beta, A), and a grouping of areas for reporting.
struct SimulationDesign {
  std::string name = "custom";
  Matrix X;
  Vector beta;
  double A = 1.0;
  Vector D;
  std::vector<std::string> group_labels;
  std::vector<std::size_t> group_of;  // group index of each area
  double alpha = 0.05;
  std::size_t R = 2000;
  std::size_t B = 500;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: FH_THREADS or hardware concurrency
  std::vector<IntervalMethod> methods{std::begin(kAllIntervalMethods),
                                      std::end(kAllIntervalMethods)};

  std::size_t m() const { return static_cast<std::size_t>(D.size()); }
};

/// Common mean (beta = 0), groups of `group_size` areas sharing each listed D.
inline SimulationDesign grouped_common_mean_design(const std::vector<double>& group_D,
                                                   std::size_t group_size, double A = 1.0) {
  SimulationDesign d;
  const std::size_t m = group_D.size() * group_size;
  d.X = intercept_design(m);
  d.beta = Vector::Zero(1);
  d.A = A;
  d.D.resize(static_cast<Eigen::Index>(m));
  for (std::size_t g = 0; g < group_D.size(); ++g) {
    d.group_labels.push_back(std::to_string(g + 1));
    for (std::size_t k = 0; k < group_size; ++k) {
      d.D(static_cast<Eigen::Index>(g * group_size + k)) = group_D[g];
      d.group_of.push_back(g);
    }
  }
  return d;
}

/// m = 15 common-mean designs: five groups of three areas.
///   pattern a: D = (0.7, 0.6, 0.5, 0.4, 0.3)
///   pattern b: D = (4.0, 0.6, 0.5, 0.4, 0.1)
inline SimulationDesign pattern_design(char pattern) {
  SimulationDesign d;
  if (pattern == 'a') {
    d = grouped_common_mean_design({0.7, 0.6, 0.5, 0.4, 0.3}, 3);
  } else if (pattern == 'b') {
    d = grouped_common_mean_design({4.0, 0.6, 0.5, 0.4, 0.1}, 3);
  } else {
    throw Error(ErrorCode::UnknownPattern, std::string("unknown pattern '") + pattern + "'");
  }
  d.name = std::string("pattern-") + pattern;
  return d;
}

/// m = 15, one covariate without intercept. Area 1 has leverage q1 and
/// sampling variance D1; the other 14 areas share x = 1, D = 0.01 and
/// leverage (1 - q1)/14. x_1 solves q1 = x_1^2 / (x_1^2 + 14).
inline SimulationDesign leverage_design(double q1, double D1, double A = 1.0) {
  if (!(q1 > 0.0 && q1 < 1.0) || !(D1 > 0.0)) {
    throw Error(ErrorCode::UnknownPattern, "leverage design needs 0 < q1 < 1 and D1 > 0");
  }
  constexpr std::size_t m = 15;
  SimulationDesign d;
  std::ostringstream name;
  name << "lev-" << q1 << "-" << D1;
  d.name = name.str();
  d.X = Matrix::Ones(m, 1);
  d.X(0, 0) = std::sqrt(static_cast<double>(m - 1) * q1 / (1.0 - q1));
  d.beta = Vector::Zero(1);
  d.A = A;
  d.D = Vector::Constant(m, 0.01);
  d.D(0) = D1;
  d.group_labels = {"1", "2-15"};
  d.group_of.assign(m, 1);
  d.group_of[0] = 0;
  return d;
}

/// "a", "b" or "lev-<q>-<D>".
inline SimulationDesign design_preset(const std::string& preset) {
  if (preset == "a" || preset == "b") return pattern_design(preset[0]);
  if (preset.rfind("lev-", 0) == 0) {
    const std::string rest = preset.substr(4);
    const auto dash = rest.find('-');
    double q = 0.0, D = 0.0;
    if (dash != std::string::npos && csv::parse_double(rest.substr(0, dash), q) &&
        csv::parse_double(rest.substr(dash + 1), D)) {
      return leverage_design(q, D);
    }
  }
  throw Error(ErrorCode::UnknownPattern, "unknown pattern '" + preset + "'");
}

inline std::vector<IntervalMethod> parse_method_list(const std::string& list) {
  std::vector<IntervalMethod> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_interval_method(item));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty method list");
  return out;
}

/// Applies one key=value setting to a design. Recognised keys: pattern, R,
/// B, seed, alpha, A, threads, methods. D and group_size are handled by
/// read_design_config.
inline void apply_setting(SimulationDesign& d, const std::string& key, const std::string& value) {
  auto number = [&](double& out) {
    if (!csv::parse_double(value, out)) {
      throw Error(ErrorCode::InvalidArgument, "setting " + key + " is not a number: " + value);
    }
  };
  auto count = [&](std::size_t& out, std::size_t min) {
    double v = 0.0;
    number(v);
    if (v < static_cast<double>(min) || v != std::floor(v)) {
      throw Error(ErrorCode::InvalidArgument, "setting " + key + " must be an integer >= " +
                                                  std::to_string(min));
    }
    out = static_cast<std::size_t>(v);
  };
  if (key == "pattern") {
    SimulationDesign p = design_preset(value);
    p.alpha = d.alpha; p.R = d.R; p.B = d.B; p.seed = d.seed; p.threads = d.threads;
    p.methods = d.methods;
    d = std::move(p);
  } else if (key == "R") {
    count(d.R, 1);
  } else if (key == "B") {
    count(d.B, 1);
  } else if (key == "threads") {
    count(d.threads, 0);
  } else if (key == "seed") {
    std::size_t s = 0;
    count(s, 0);
    d.seed = s;
  } else if (key == "alpha") {
    number(d.alpha);
    require_alpha(d.alpha);
  } else if (key == "A") {
    number(d.A);
    if (!(d.A > 0.0)) throw Error(ErrorCode::InvalidArgument, "A must be positive");
  } else if (key == "methods") {
    d.methods = parse_method_list(value);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown setting '" + key + "'");
  }
}

/// Reads a key=value design file ('#' starts a comment).
inline SimulationDesign read_design_config(std::istream& in, SimulationDesign base = pattern_design('a')) {
  std::vector<std::pair<std::string, std::string>> settings;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> group_D;
  std::size_t group_size = 3;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) +
                                                 ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "D") {
      group_D.clear();
      for (const auto& f : csv::split_line(value)) {
        double v = 0.0;
        if (!csv::parse_double(f, v)) {
          throw Error(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) +
                                                     ": bad D value '" + f + "'");
        }
        group_D.push_back(v);
      }
    } else if (key == "group_size") {
      double v = 0.0;
      if (!csv::parse_double(value, v) || v < 1 || v != std::floor(v)) {
        throw Error(ErrorCode::MalformedInput, "config line " + std::to_string(line_no) +
                                                   ": group_size must be a positive integer");
      }
      group_size = static_cast<std::size_t>(v);
    } else {
      settings.emplace_back(key, value);
    }
  }
  SimulationDesign d = std::move(base);
  // pattern first so that the remaining keys override the preset's defaults.
  for (const auto& [k, v] : settings) {
    if (k == "pattern") apply_setting(d, k, v);
  }
  if (!group_D.empty()) {
    SimulationDesign g = grouped_common_mean_design(group_D, group_size, d.A);
    g.alpha = d.alpha; g.R = d.R; g.B = d.B; g.seed = d.seed; g.threads = d.threads;
    g.methods = d.methods;
    d = std::move(g);
  }
  for (const auto& [k, v] : settings) {
    if (k != "pattern") apply_setting(d, k, v);
  }
  return d;
}

struct Replicate {
  FayHerriotDataset data;
  Vector theta;
};

/// Replicate r of the design: theta_i = x_i'beta + v_i, y_i = theta_i + e_i,
/// with one random stream per (seed, r, area).
inline Replicate generate_replicate(const SimulationDesign& design,
                                    const FayHerriotDataset& base, std::size_t r) {
  const auto m = static_cast<Eigen::Index>(design.m());
  const Vector mean = design.X * design.beta;
  const double sqrt_A = std::sqrt(design.A);
  Vector theta(m), y(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    StreamRng rng = StreamRng::keyed(design.seed, {0x5eedULL, r, static_cast<std::uint64_t>(j)});
    theta(j) = mean(j) + sqrt_A * rng.normal();
    y(j) = theta(j) + std::sqrt(design.D(j)) * rng.normal();
  }
  return {base.with_y(std::move(y)), std::move(theta)};
}

inline FayHerriotDataset design_dataset(const SimulationDesign& design) {
  return FayHerriotDataset(Vector::Zero(static_cast<Eigen::Index>(design.m())), design.D,
                           design.X);
}

inline Replicate generate_replicate(const SimulationDesign& design, std::size_t r) {
  return generate_replicate(design, design_dataset(design), r);
}

struct SimulationCell {
  std::string group;
  IntervalMethod method = IntervalMethod::Direct;
  double coverage = 0.0;  // percent
  double mc_se = 0.0;     // percent, sqrt(c(1 - c)/R)
  double avg_length = 0.0;
  std::size_t n = 0;      // area-replicates pooled into the cell
};

struct SimulationReport {
  std::string design;
  std::size_t R = 0;
  std::vector<IntervalMethod> methods;
  std::vector<std::string> groups;
  std::vector<SimulationCell> cells;  // group-major, methods in design order
  std::map<IntervalMethod, std::size_t> failed_replicates;
  /// Replicate-areas where a Cox-type interval was not shorter than the direct one.
  std::map<IntervalMethod, std::size_t> length_violations;

  const SimulationCell& cell(const std::string& group, IntervalMethod method) const {
    for (const auto& c : cells) {
      if (c.group == group && c.method == method) return c;
    }
    throw Error(ErrorCode::InvalidArgument, "no cell for group " + group);
  }

  csv::Table to_table() const {
    csv::Table t;
    t.header = {"group", "method", "coverage", "mc_se", "avg_length"};
    for (const auto& c : cells) {
      t.rows.push_back({c.group, std::string(to_string(c.method)), csv::format_number(c.coverage),
                        csv::format_number(c.mc_se), csv::format_number(c.avg_length)});
    }
    return t;
  }

  std::string to_csv() const {
    std::ostringstream out;
    to_table().write(out);
    return out.str();
  }

  /// Aligned layout: one row per group, "coverage (length)" per method, one decimal.
  std::string to_text() const {
    std::ostringstream out;
    out << "design " << design << ", R = " << R << "; coverage % (average length)\n";
    out << std::left << std::setw(6) << "G";
    for (const auto m : methods) out << std::right << std::setw(15) << display_label(m);
    out << '\n';
    for (const auto& g : groups) {
      out << std::left << std::setw(6) << g;
      for (const auto m : methods) {
        const auto& c = cell(g, m);
        std::ostringstream v;
        v << std::fixed << std::setprecision(1) << c.coverage << " (" << c.avg_length << ")";
        out << std::right << std::setw(15) << v.str();
      }
      out << '\n';
    }
    bool any_fail = false;
    for (const auto& [m, n] : failed_replicates) any_fail = any_fail || n > 0;
    if (any_fail) {
      out << "failed replicates:";
      for (const auto& [m, n] : failed_replicates) {
        if (n > 0) out << ' ' << to_string(m) << '=' << n;
      }
      out << '\n';
    }
    return out.str();
  }
};

/// Runs R replicates of the design and pools coverage and length per (group,
/// method). Each replicate writes its own slot; aggregation walks the slots in
/// replicate order so the report does not depend on the thread count.
inline SimulationReport run_simulation(const SimulationDesign& design) {
  require_alpha(design.alpha);
  if (design.R < 1) throw Error(ErrorCode::InvalidArgument, "R must be positive");
  if (design.group_of.size() != design.m()) {
    throw Error(ErrorCode::InvalidArgument, "group assignment does not cover every area");
  }
  const FayHerriotDataset base = design_dataset(design);
  const std::size_t m = design.m();
  const std::size_t n_methods = design.methods.size();
  const std::size_t threads = resolve_threads(design.threads);

  struct Slot {
    std::vector<char> ok;         // per method
    std::vector<char> covered;    // method-major, per area
    std::vector<double> length;   // method-major, per area
  };
  std::vector<Slot> slots(design.R);

  parallel_for(design.R, threads, [&](std::size_t r) {
    const Replicate rep = generate_replicate(design, base, r);
    Slot& slot = slots[r];
    slot.ok.assign(n_methods, 0);
    slot.covered.assign(n_methods * m, 0);
    slot.length.assign(n_methods * m, 0.0);
    for (std::size_t k = 0; k < n_methods; ++k) {
      BootstrapOptions boot;
      boot.B = design.B;
      boot.seed = splitmix64(design.seed ^ splitmix64(0xb007ULL + r));
      boot.threads = 1;
      std::vector<IntervalResult> res;
      try {
        res = intervals_for_all_areas(rep.data, design.methods[k], design.alpha, boot);
      } catch (const Error&) {
        continue;
      }
      slot.ok[k] = 1;
      for (std::size_t i = 0; i < m; ++i) {
        slot.covered[k * m + i] = res[i].contains(rep.theta(static_cast<Eigen::Index>(i)));
        slot.length[k * m + i] = res[i].length();
      }
    }
  });

  SimulationReport report;
  report.design = design.name;
  report.R = design.R;
  report.methods = design.methods;
  report.groups = design.group_labels;

  const std::size_t n_groups = design.group_labels.size();
  std::vector<double> cover(n_groups * n_methods, 0.0), len(n_groups * n_methods, 0.0);
  std::vector<std::size_t> count(n_groups * n_methods, 0);
  std::vector<std::size_t> ok_reps(n_methods, 0);

  // Direct lengths for the per-replicate length check.
  std::size_t direct_k = n_methods;
  for (std::size_t k = 0; k < n_methods; ++k) {
    if (design.methods[k] == IntervalMethod::Direct) direct_k = k;
  }
  for (const auto m_ : design.methods) {
    report.failed_replicates[m_] = 0;
    if (is_cox_type(m_)) report.length_violations[m_] = 0;
  }

  for (std::size_t r = 0; r < design.R; ++r) {
    const Slot& slot = slots[r];
    for (std::size_t k = 0; k < n_methods; ++k) {
      if (!slot.ok[k]) {
        ++report.failed_replicates[design.methods[k]];
        continue;
      }
      ++ok_reps[k];
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t cell = design.group_of[i] * n_methods + k;
        cover[cell] += slot.covered[k * m + i];
        len[cell] += slot.length[k * m + i];
        ++count[cell];
        if (direct_k < n_methods && slot.ok[direct_k] && is_cox_type(design.methods[k]) &&
            !(slot.length[k * m + i] < slot.length[direct_k * m + i])) {
          ++report.length_violations[design.methods[k]];
        }
      }
    }
  }

  for (std::size_t g = 0; g < n_groups; ++g) {
    for (std::size_t k = 0; k < n_methods; ++k) {
      const std::size_t cell = g * n_methods + k;
      SimulationCell c;
      c.group = design.group_labels[g];
      c.method = design.methods[k];
      c.n = count[cell];
      if (c.n > 0) {
        const double frac = cover[cell] / static_cast<double>(c.n);
        c.coverage = 100.0 * frac;
        c.mc_se = 100.0 * std::sqrt(frac * (1.0 - frac) / static_cast<double>(ok_reps[k]));
        c.avg_length = len[cell] / static_cast<double>(c.n);
      } else {
        c.coverage = c.mc_se = c.avg_length = std::numeric_limits<double>::quiet_NaN();
      }
      report.cells.push_back(std::move(c));
    }
  }
  return report;
}

}  // namespace fhci
