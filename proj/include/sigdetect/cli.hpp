#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sigdetect/counterexample.hpp"
#include "sigdetect/csv.hpp"
#include "sigdetect/dp.hpp"
#include "sigdetect/eval.hpp"
#include "sigdetect/io.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect::cli {

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kUsageError = 2 };

/// Thrown for bad flags, unreadable inputs and similar usage problems.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxSweepCells = 10000;

/// Parses "1.1,1.5,1.9" or ranges "0.1:0.6:0.1" (inclusive), or a mix.
inline std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      double v = 0.0;
      if (!parse_double(item, v)) throw UsageError("malformed grid value '" + item + "'");
      out.push_back(v);
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    double start = 0.0, stop = 0.0, step = 0.0;
    if (c2 == std::string::npos || !parse_double(item.substr(0, c1), start) ||
        !parse_double(item.substr(c1 + 1, c2 - c1 - 1), stop) || !parse_double(item.substr(c2 + 1), step) ||
        !(step > 0.0) || stop < start)
      throw UsageError("malformed grid range '" + item + "' (expected start:stop:step)");
    for (long i = 0;; ++i) {
      const double v = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
      if (v > stop + 1e-9 * step) break;
      out.push_back(v);
      if (out.size() > kMaxSweepCells) throw UsageError("grid range '" + item + "' is too long");
    }
  }
  return out;
}

struct ScenarioSource {
  std::string path;
  std::string builtin;
  double K = 1.5;
  double r1 = 0.5;
  double mistake_cost = kDefaultMistakeCost;

  void add_options(CLI::App& app) {
    app.add_option("--scenario", path, "Scenario file (YAML)");
    app.add_option("--builtin", builtin, "Built-in scenario: counterexample");
    app.add_option("--K", K, "Cost per step with both observers active (built-in, 1 < K < 2)");
    app.add_option("--r1", r1, "Observer 2's chance of learning H at t=1 (built-in, 0 < r1 < 1)");
    app.add_option("--mistake-cost", mistake_cost, "Cost of a wrong final decision (built-in)");
  }

  Scenario load() const {
    if (!path.empty() && !builtin.empty()) throw UsageError("use either --scenario or --builtin, not both");
    if (!path.empty()) return load_scenario(read_file(path));
    if (builtin.empty() || builtin == "counterexample") return builtin_counterexample(K, r1, mistake_cost);
    throw UsageError("unknown built-in scenario '" + builtin + "'");
  }
};

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (!std::filesystem::is_directory(p)) throw UsageError("cannot create output directory " + p.string());
  return p;
}

// counterexample

struct CounterexampleArgs {
  double K = 1.5;
  double r1 = 0.5;
  double mistake_cost = kDefaultMistakeCost;
  std::string out = ".";
};

inline int cmd_counterexample(const CounterexampleArgs& args, std::ostream& out) {
  const auto dir = prepare_out(args.out);
  const Scenario s = builtin_counterexample(args.K, args.r1, args.mistake_cost);
  const auto row = evaluate_counterexample(args.K, args.r1, args.mistake_cost);

  out << std::setprecision(12);
  out << "counterexample K=" << args.K << " r1=" << args.r1 << " mistake_cost=" << args.mistake_cost << "\n";
  out << "  rule           exact cost      formula         match\n";
  auto line = [&](const char* name, double exact, double formula, bool match) {
    out << "  " << std::left << std::setw(14) << name << " " << std::setw(15) << exact << " " << std::setw(15)
        << formula << " " << (match ? "true" : "false") << "\n";
  };
  line("ex1", row.ex1, row.ex1_formula, row.ex1_match());
  line("ex2", row.ex2, row.ex2_formula, row.ex2_match());
  line("nonthreshold", row.nonthreshold, row.nonthreshold_formula, row.nonthreshold_match());
  out << "  nonthreshold < min(ex1, ex2): " << (row.strict() ? "true" : "false")
      << (row.in_region() ? "" : "  (r1 >= 2/3: not required)") << "\n";

  CsvTable csv{"K", "r1", "ex1", "ex2", "nonthreshold", "ex1_formula", "ex2_formula", "nonthreshold_formula",
               "ex1_match", "ex2_match", "nonthreshold_match", "strict"};
  csv.cell(row.K).cell(row.r1).cell(row.ex1).cell(row.ex2).cell(row.nonthreshold);
  csv.cell(row.ex1_formula).cell(row.ex2_formula).cell(row.nonthreshold_formula);
  csv.cell(row.ex1_match()).cell(row.ex2_match()).cell(row.nonthreshold_match()).cell(row.strict());
  csv.end_row();
  write_file_atomic(dir / "counterexample.csv", csv.str());

  write_file_atomic(dir / "scenario.yaml", save_scenario(s));
  const auto pdir = dir / "policies";
  std::filesystem::create_directories(pdir);
  for (BuiltinKind kind : {BuiltinKind::ex1, BuiltinKind::ex2, BuiltinKind::nonthreshold}) {
    const auto pair = builtin_policies(kind, s);
    const std::string name(to_string(kind));
    write_file_atomic(pdir / (name + "_o1.yaml"), save_policy(pair.first));
    write_file_atomic(pdir / (name + "_o2.yaml"), save_policy(pair.second));
  }

  const bool ok = row.all_match() && (!row.in_region() || row.strict());
  return ok ? kOk : kPropertyFailure;
}

// solve

struct SolveArgs {
  ScenarioSource source;
  std::string out = ".";
  double resolution = 1e-3;
  double tol = 1e-8;
  int max_iters = 50;
};

inline int cmd_solve(const SolveArgs& args, std::ostream& out) {
  if (!(args.resolution > 0.0 && args.resolution <= 1e-2)) throw UsageError("--resolution must lie in (0, 0.01]");
  if (!(args.tol > 0.0)) throw UsageError("--tol must be positive");
  if (args.max_iters < 1) throw UsageError("--max-iters must be at least 1");
  const Scenario s = args.source.load();
  const auto dir = prepare_out(args.out);

  const auto pbp = person_by_person(s, default_initial_policy(s, ObserverId::first), args.max_iters, args.tol);
  write_file_atomic(dir / "trace.csv", trace_csv(pbp.trace));
  write_file_atomic(dir / "policy_o1.yaml", save_policy(pbp.policies.first));
  write_file_atomic(dir / "policy_o2.yaml", save_policy(pbp.policies.second));

  out << std::setprecision(12);
  out << "person-by-person: " << pbp.trace.size() << " step(s), final cost " << pbp.trace.back().cost
      << (pbp.converged ? " (converged)" : " (iteration limit)") << "\n";

  bool ok = true;
  for (ObserverId who : {ObserverId::second, ObserverId::first}) {
    const HistoryPolicy& peer = who == ObserverId::second ? pbp.policies.first : pbp.policies.second;
    const std::string suffix = who == ObserverId::second ? "" : "_o1";
    const ValueOracle oracle(s, peer, who);
    write_file_atomic(dir / ("values" + suffix + ".csv"), values_csv(oracle, args.resolution));

    const auto report = check_concavity(oracle, args.resolution, args.tol);
    write_file_atomic(dir / ("concavity" + suffix + ".csv"), concavity_csv(report));
    ok = ok && report.pass();

    IntervalPolicy intervals{who, s.horizon, {}};
    bool bounds_ok = true;
    try {
      intervals = extract_policy(oracle, args.resolution, 1e-12);
    } catch (const RegionBoundViolation& e) {
      out << "observer " << number_of(who) << ": region bound violated: " << e.what() << "\n";
      bounds_ok = false;
    }
    write_file_atomic(dir / ("thresholds" + suffix + ".csv"), thresholds_csv(intervals));
    ok = ok && bounds_ok;

    out << "observer " << number_of(who) << ": concavity " << (report.pass() ? "pass" : "FAIL")
        << ", threshold bounds " << (bounds_ok ? "pass" : "FAIL") << "\n";
  }
  return ok ? kOk : kPropertyFailure;
}

// eval

struct EvalArgs {
  ScenarioSource source;
  std::string policy1;
  std::string policy2;
  std::string policies;
  std::string out = ".";
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  bool trace = false;
};

inline int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const Scenario s = args.source.load();
  PolicyPair pair;
  if (!args.policies.empty()) {
    if (!args.policy1.empty() || !args.policy2.empty())
      throw UsageError("use either --policies or --policy1/--policy2");
    pair = builtin_policies(parse_builtin_kind(args.policies), s);
  } else {
    if (args.policy1.empty() || args.policy2.empty())
      throw UsageError("--policy1 and --policy2 are required (or --policies KIND)");
    auto load = [](const std::string& path) {
      try {
        return load_policy(read_file(path));
      } catch (const ParseError& e) {
        throw UsageError(path + ": " + e.what());
      }
    };
    pair = {load(args.policy1), load(args.policy2)};
  }
  for (const auto* p : {&pair.first, &pair.second})
    if (p->horizon() != s.horizon || p->alphabet_size() != s.model(p->observer()).alphabet_size)
      throw UsageError("policy for observer " + std::to_string(number_of(p->observer())) +
                       " does not match the scenario's horizon or alphabet");
  if (pair.first.observer() != ObserverId::first || pair.second.observer() != ObserverId::second)
    throw UsageError("--policy1 must hold observer 1's policy and --policy2 observer 2's");

  const auto exact = exact_cost(s, pair.first, pair.second, args.trace);
  out << std::setprecision(17);
  out << "exact cost: " << exact.expected_cost << "\n";
  if (args.trace) {
    const auto dir = prepare_out(args.out);
    write_file_atomic(dir / "trace.csv", path_trace_csv(exact.paths));
  }
  if (args.n > 0) {
    const auto sim = simulate(s, pair.first, pair.second, args.n, args.seed);
    out << "simulated: mean " << sim.mean << " sd " << sim.sd << " n " << sim.n << " seed " << sim.seed
        << " half-width " << sim.half_width << "\n";
  }
  return kOk;
}

// sweep

struct SweepArgs {
  std::string K = "1.1,1.5,1.9";
  std::string r1 = "0.1:0.6:0.1";
  double mistake_cost = kDefaultMistakeCost;
  std::string out = ".";
};

inline int cmd_sweep(const SweepArgs& args, std::ostream& out) {
  const auto Ks = parse_grid(args.K);
  const auto r1s = parse_grid(args.r1);
  if (Ks.empty() || r1s.empty()) throw UsageError("sweep grid is empty");
  if (Ks.size() * r1s.size() > kMaxSweepCells) throw UsageError("sweep grid exceeds 10000 cells");
  for (double K : Ks)
    if (!(K > 1.0 && K < 2.0)) throw UsageError("grid K value " + format_double(K) + " outside (1, 2)");
  for (double r : r1s)
    if (!(r > 0.0 && r < 1.0)) throw UsageError("grid r1 value " + format_double(r) + " outside (0, 1)");
  const auto dir = prepare_out(args.out);

  std::vector<CounterexampleRow> rows(Ks.size() * r1s.size());
  parallel_for(rows.size(), [&](std::size_t i) {
    rows[i] = evaluate_counterexample(Ks[i / r1s.size()], r1s[i % r1s.size()], args.mistake_cost);
  });
  CsvTable csv{"K", "r1", "ex1", "ex2", "nonthreshold", "strict"};
  std::size_t strict = 0;
  for (const auto& r : rows) {
    csv.cell(r.K).cell(r.r1).cell(r.ex1).cell(r.ex2).cell(r.nonthreshold).cell(r.strict());
    csv.end_row();
    strict += r.strict() ? 1 : 0;
  }
  write_file_atomic(dir / "sweep.csv", csv.str());
  out << "sweep: " << rows.size() << " cells, nonthreshold strictly better in " << strict << "\n";
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decentralized sequential detection with signaling: solver and evaluator", "sigdetect"};
  app.require_subcommand(1);

  CounterexampleArgs ce;
  auto* ce_cmd = app.add_subcommand("counterexample", "Evaluate the built-in policy pairs against closed forms");
  ce_cmd->add_option("--K", ce.K, "Cost per step with both observers active (1 < K < 2)");
  ce_cmd->add_option("--r1", ce.r1, "Observer 2's chance of learning H at t=1 (0 < r1 < 1)");
  ce_cmd->add_option("--mistake-cost", ce.mistake_cost, "Cost of a wrong final decision");
  ce_cmd->add_option("--out", ce.out, "Output directory");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Person-by-person solve with value, threshold and concavity dumps");
  solve.source.add_options(*solve_cmd);
  solve_cmd->add_option("--out", solve.out, "Output directory");
  solve_cmd->add_option("--resolution", solve.resolution, "Belief grid spacing (default 1e-3)");
  solve_cmd->add_option("--tol", solve.tol, "Improvement and concavity tolerance (default 1e-8)");
  solve_cmd->add_option("--max-iters", solve.max_iters, "Best-response iteration limit (default 50)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Exact and simulated cost of a policy pair");
  ev.source.add_options(*eval_cmd);
  eval_cmd->add_option("--policy1", ev.policy1, "Observer 1 policy file");
  eval_cmd->add_option("--policy2", ev.policy2, "Observer 2 policy file");
  eval_cmd->add_option("--policies", ev.policies, "Built-in pair: ex1, ex2 or nonthreshold");
  eval_cmd->add_option("--out", ev.out, "Output directory for the path trace");
  eval_cmd->add_option("--n", ev.n, "Monte Carlo sample count (0 = skip)");
  eval_cmd->add_option("--seed", ev.seed, "Monte Carlo seed");
  eval_cmd->add_flag("--trace", ev.trace, "Write per-path trace.csv");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Map the counterexample's suboptimality region over (K, r1)");
  sweep_cmd->add_option("--K", sw.K, "K values: list and/or start:stop:step ranges");
  sweep_cmd->add_option("--r1", sw.r1, "r1 values: list and/or start:stop:step ranges");
  sweep_cmd->add_option("--mistake-cost", sw.mistake_cost, "Cost of a wrong final decision");
  sweep_cmd->add_option("--out", sw.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*ce_cmd) return cmd_counterexample(ce, out);
    if (*solve_cmd) return cmd_solve(solve, out);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*sweep_cmd) return cmd_sweep(sw, out);
  } catch (const PolicyIncomplete& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace sigdetect::cli
