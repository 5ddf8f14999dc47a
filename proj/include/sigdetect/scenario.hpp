#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sigdetect/common.hpp"

namespace sigdetect {

inline constexpr double kRowSumTolerance = 1e-12;

/// Mistake cost used by the built-in counterexample. Large enough that any
/// policy pair which errs with probability >= 1/20 costs more than 5.
inline constexpr double kDefaultMistakeCost = 100.0;

/// Likelihood tables P_t(y | H = h) of one observer, t = 1..T.
struct ObservationModel {
  int alphabet_size = 0;
  /// likelihood[t - 1][h][y]
  std::vector<std::array<std::vector<double>, 2>> likelihood;

  double prob(int t, int h, int y) const { return likelihood[t - 1][h][y]; }
  const std::vector<double>& row(int t, int h) const { return likelihood[t - 1][h]; }

  friend bool operator==(const ObservationModel&, const ObservationModel&) = default;
};

struct Scenario {
  double prior_h0 = 0.5;
  int horizon = 1;
  double cost_both_active = 2.0;  // K
  double cost_one_active = 1.0;   // k
  /// terminal_cost[u][h]
  std::array<std::array<double, 2>, 2> terminal_cost{};
  /// observers[0] is observer 1.
  std::array<ObservationModel, 2> observers;

  double prior(int h) const { return h == 0 ? prior_h0 : 1.0 - prior_h0; }
  double J(int u, int h) const { return terminal_cost[u][h]; }
  double J(Action u, int h) const { return terminal_cost[to_index(u)][h]; }
  const ObservationModel& model(ObserverId o) const { return observers[index_of(o)]; }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Violation {
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += '\n';
      out += v.path + ": " + v.message;
    }
    return out;
  }
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(ValidationReport report)
      : std::runtime_error("invalid scenario:\n" + report.to_string()), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

inline ValidationReport validate(const Scenario& s) {
  ValidationReport r;
  auto fail = [&](std::string path, std::string msg) {
    r.violations.push_back({std::move(path), std::move(msg)});
  };
  if (!(s.prior_h0 >= 0.0 && s.prior_h0 <= 1.0)) fail("prior_h0", "must lie in [0, 1]");
  if (s.horizon < 1) fail("horizon", "must be at least 1");
  if (!(s.cost_one_active > 0.0)) fail("cost_one_active", "must be positive");
  if (!(s.cost_both_active > s.cost_one_active))
    fail("cost_both_active", "must exceed cost_one_active");
  for (int u = 0; u < 2; ++u) {
    for (int h = 0; h < 2; ++h) {
      const std::string path =
          "terminal_cost[" + std::to_string(u) + "][" + std::to_string(h) + "]";
      const double v = s.terminal_cost[u][h];
      if (!std::isfinite(v) || v < 0.0) fail(path, "must be finite and non-negative");
      if (u == h && v != 0.0) fail(path, "diagonal entries must be zero");
    }
  }
  for (int i = 0; i < 2; ++i) {
    const auto& m = s.observers[i];
    const std::string base = "observers[" + std::to_string(i) + "]";
    if (m.alphabet_size < 1) {
      fail(base + ".alphabet_size", "must be at least 1");
      continue;
    }
    if (s.horizon >= 1 && static_cast<int>(m.likelihood.size()) != s.horizon) {
      fail(base + ".likelihood", "expected " + std::to_string(s.horizon) + " tables, got " +
                                     std::to_string(m.likelihood.size()));
      continue;
    }
    for (std::size_t t = 0; t < m.likelihood.size(); ++t) {
      for (int h = 0; h < 2; ++h) {
        const std::string path =
            base + ".likelihood[" + std::to_string(t) + "][" + std::to_string(h) + "]";
        const auto& row = m.likelihood[t][h];
        if (static_cast<int>(row.size()) != m.alphabet_size) {
          fail(path, "expected " + std::to_string(m.alphabet_size) + " entries");
          continue;
        }
        double sum = 0.0;
        bool bad = false;
        for (double p : row) {
          if (!std::isfinite(p) || p < 0.0) bad = true;
          sum += p;
        }
        if (bad) fail(path, "entries must be finite and non-negative");
        if (std::abs(sum - 1.0) > kRowSumTolerance)
          fail(path, "row sums to " + format_double(sum) + ", expected 1");
      }
    }
  }
  return r;
}

inline void require_valid(const Scenario& s) {
  auto report = validate(s);
  if (!report.ok()) throw ValidationError(std::move(report));
}

inline std::array<std::array<double, 2>, 2> symmetric_terminal_cost(double mistake) {
  return {{{0.0, mistake}, {mistake, 0.0}}};
}

/// The two-observer instance in which a non-threshold first-step rule for
/// observer 2 beats every two-threshold rule. Observer 1 learns nothing until
/// its noiseless third observation; observer 2 learns H at t = 1 with
/// probability r1 and nothing afterwards.
inline Scenario builtin_counterexample(double K, double r1,
                                       double mistake_cost = kDefaultMistakeCost) {
  if (!(K > 1.0 && K < 2.0)) throw DomainError("counterexample requires 1 < K < 2");
  if (!(r1 > 0.0 && r1 < 1.0)) throw DomainError("counterexample requires 0 < r1 < 1");
  if (!(mistake_cost > 0.0)) throw DomainError("mistake cost must be positive");
  Scenario s;
  s.prior_h0 = 0.5;
  s.horizon = 3;
  s.cost_both_active = K;
  s.cost_one_active = 1.0;
  s.terminal_cost = symmetric_terminal_cost(mistake_cost);

  auto& o1 = s.observers[0];
  o1.alphabet_size = 2;
  for (double q : {0.5, 0.5, 1.0}) o1.likelihood.push_back({{{q, 1.0 - q}, {1.0 - q, q}}});

  auto& o2 = s.observers[1];
  o2.alphabet_size = 3;
  for (double r : {r1, 0.0, 0.0}) o2.likelihood.push_back({{{r, 1.0 - r, 0.0}, {0.0, 1.0 - r, r}}});
  return s;
}

/// Parameters of a built-in counterexample instance, recovered from its tables.
struct CounterexampleParams {
  double K;
  double r1;
  double mistake_cost;
};

inline bool recover_counterexample(const Scenario& s, CounterexampleParams& out) {
  if (s.horizon != 3 || s.observers[1].alphabet_size != 3 || s.observers[0].alphabet_size != 2 ||
      s.observers[1].likelihood.size() != 3)
    return false;
  const double K = s.cost_both_active;
  const double r1 = s.observers[1].likelihood[0][0][0];
  const double c = s.terminal_cost[0][1];
  if (!(K > 1.0 && K < 2.0 && r1 > 0.0 && r1 < 1.0 && c > 0.0)) return false;
  if (!(s == builtin_counterexample(K, r1, c))) return false;
  out = {K, r1, c};
  return true;
}

}  // namespace sigdetect
