#pragma once

#include <algorithm>
#include <cmath>

#include "sigdetect/eval.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect {

inline constexpr double kFormulaTolerance = 1e-9;

/// Closed-form team costs of the three built-in policy pairs.
struct CounterexampleFormulas {
  static double ex1(double K, double r1) { return r1 + (1.0 - r1) * (K + 1.0); }
  static double ex2(double /*K*/, double r1) { return 2.0 - r1 / 2.0; }
  static double nonthreshold(double K, double r1) { return 2.0 * (1.0 - r1) + r1 * (K + 1.0) / 2.0; }
};

struct CounterexampleRow {
  double K = 0.0;
  double r1 = 0.0;
  double ex1 = 0.0;
  double ex2 = 0.0;
  double nonthreshold = 0.0;
  double ex1_formula = 0.0;
  double ex2_formula = 0.0;
  double nonthreshold_formula = 0.0;

  bool ex1_match() const { return std::abs(ex1 - ex1_formula) <= kFormulaTolerance; }
  bool ex2_match() const { return std::abs(ex2 - ex2_formula) <= kFormulaTolerance; }
  bool nonthreshold_match() const { return std::abs(nonthreshold - nonthreshold_formula) <= kFormulaTolerance; }
  bool all_match() const { return ex1_match() && ex2_match() && nonthreshold_match(); }
  /// Non-threshold pair strictly cheaper than both threshold pairs.
  bool strict() const { return nonthreshold < std::min(ex1, ex2); }
  /// Region where the non-threshold rule is known to win.
  bool in_region() const { return r1 < 2.0 / 3.0; }
};

inline CounterexampleRow evaluate_counterexample(double K, double r1, double mistake_cost = kDefaultMistakeCost) {
  const Scenario s = builtin_counterexample(K, r1, mistake_cost);
  auto cost = [&](BuiltinKind kind) {
    const auto pair = builtin_policies(kind, s);
    return exact_cost(s, pair.first, pair.second).expected_cost;
  };
  CounterexampleRow row;
  row.K = K;
  row.r1 = r1;
  row.ex1 = cost(BuiltinKind::ex1);
  row.ex2 = cost(BuiltinKind::ex2);
  row.nonthreshold = cost(BuiltinKind::nonthreshold);
  row.ex1_formula = CounterexampleFormulas::ex1(K, r1);
  row.ex2_formula = CounterexampleFormulas::ex2(K, r1);
  row.nonthreshold_formula = CounterexampleFormulas::nonthreshold(K, r1);
  return row;
}

}  // namespace sigdetect
