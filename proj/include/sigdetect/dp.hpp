#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "sigdetect/belief.hpp"
#include "sigdetect/parallel.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"
#include "sigdetect/signaling.hpp"

namespace sigdetect {

/// Unnormalised joint weights of the two hypotheses. In the peer-active phase
/// the weights exclude the peer's blank-history mass, which the signal tables
/// carry instead; this keeps the recursion free of divisions.
struct Weights {
  double h0 = 0.0;
  double h1 = 0.0;

  double operator[](int h) const { return h == 0 ? h0 : h1; }
  bool empty() const { return h0 == 0.0 && h1 == 0.0; }
};

struct Branches {
  double stop0 = 0.0;
  double stop1 = 0.0;
  double cont = std::numeric_limits<double>::infinity();  // infinite at the horizon

  double of(Action a) const {
    switch (a) {
      case Action::declare0: return stop0;
      case Action::declare1: return stop1;
      case Action::blank: return cont;
    }
    return cont;
  }
  double min() const { return std::min({stop0, stop1, cont}); }
};

struct ValueAction {
  double value;
  Action action;
};

/// Width, relative to the minimum, within which branch values count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// First action in the order stop-0, stop-1, continue whose branch is within
/// the tie tolerance of the minimum.
inline Action argmin_action(const Branches& b) {
  const double m = b.min();
  const double eps = kTieTolerance * std::abs(m);
  for (Action a : kAllActions)
    if (b.of(a) <= m + eps) return a;
  return Action::blank;
}

/// Value functions V_t(pi, a) of one observer against a fixed peer policy,
/// evaluated by exact recursion over the finite outcome tree.
class ValueOracle {
 public:
  ValueOracle(const Scenario& s, const HistoryPolicy& peer, ObserverId responder)
      : s_(s), peer_(peer), responder_(responder), tables_(signal_tables(s, peer, responder)) {
    require_valid(s);
  }

  ValueOracle(const ValueOracle&) = delete;
  ValueOracle& operator=(const ValueOracle&) = delete;

  const Scenario& scenario() const { return s_; }
  const HistoryPolicy& peer() const { return peer_; }
  ObserverId responder() const { return responder_; }
  const SignalTables& tables() const { return tables_; }
  int horizon() const { return s_.horizon; }

  /// Weights representing a normalised belief at (t, a). Hypotheses whose
  /// blank history is unreachable get zero weight.
  Weights weights_for(int t, Belief pi, Phase a) const {
    check_time(t);
    if (a == Phase::peer_stopped) return {pi.p_h0, 1.0 - pi.p_h0};
    const auto& reach = tables_.messages.reach[static_cast<std::size_t>(t - 1)];
    return {reach[0] > 0.0 ? pi.p_h0 / reach[0] : 0.0, reach[1] > 0.0 ? (1.0 - pi.p_h0) / reach[1] : 0.0};
  }

  /// Normalised belief carried by weights at (t, a).
  Belief belief_of(int t, Weights w, Phase a) const {
    double j0 = w.h0, j1 = w.h1;
    if (a == Phase::peer_active) {
      const auto& reach = tables_.messages.reach[static_cast<std::size_t>(t - 1)];
      j0 *= reach[0];
      j1 *= reach[1];
    }
    const double total = j0 + j1;
    return Belief{total > 0.0 ? j0 / total : s_.prior_h0};
  }

  ValueAction value_at(int t, Belief pi, Phase a) const { return weighted_value(t, weights_for(t, pi, a), a); }

  Branches branches(int t, Belief pi, Phase a) const {
    return weighted_branches(t, weights_for(t, pi, a), a);
  }

  ValueAction weighted_value(int t, Weights w, Phase a) const {
    const Key key{t, to_index(a), std::bit_cast<std::uint64_t>(w.h0), std::bit_cast<std::uint64_t>(w.h1)};
    {
      std::lock_guard lock(memo_mutex_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const Branches b = weighted_branches(t, w, a);
    const ValueAction result{b.min(), argmin_action(b)};
    {
      std::lock_guard lock(memo_mutex_);
      if (memo_.size() >= kMemoLimit) memo_.clear();
      memo_.emplace(key, result);
    }
    return result;
  }

  Branches weighted_branches(int t, Weights w, Phase a) const {
    check_time(t);
    Branches b;
    const auto ti = static_cast<std::size_t>(t - 1);
    if (a == Phase::peer_stopped) {
      b.stop0 = w.h0 * s_.J(0, 0) + w.h1 * s_.J(0, 1);
      b.stop1 = w.h0 * s_.J(1, 0) + w.h1 * s_.J(1, 1);
    } else {
      const auto& side = tables_.stop_side.weighted[ti];
      b.stop0 = w.h0 * side[0][0] + w.h1 * side[1][0];
      b.stop1 = w.h0 * side[0][1] + w.h1 * side[1][1];
    }
    if (t == s_.horizon) return b;

    const auto& model = s_.model(responder_);
    const double k = s_.cost_one_active;
    double cont = 0.0;
    if (a == Phase::peer_stopped) {
      cont = k * (w.h0 + w.h1);
      for (int y = 0; y < model.alphabet_size; ++y) {
        const Weights next{w.h0 * model.prob(t + 1, 0, y), w.h1 * model.prob(t + 1, 1, y)};
        if (next.empty()) continue;
        cont += weighted_value(t + 1, next, Phase::peer_stopped).value;
      }
    } else {
      const auto& joint = tables_.messages.joint[ti];
      const double K = s_.cost_both_active;
      for (int y = 0; y < model.alphabet_size; ++y) {
        const Weights own{w.h0 * model.prob(t + 1, 0, y), w.h1 * model.prob(t + 1, 1, y)};
        if (own.empty()) continue;
        for (Action u : kStopActions) {
          const Weights next{own.h0 * joint[0][to_index(u)], own.h1 * joint[1][to_index(u)]};
          if (next.empty()) continue;
          cont += k * (next.h0 + next.h1) + weighted_value(t + 1, next, Phase::peer_stopped).value;
        }
        const int bi = to_index(Action::blank);
        const double m0 = own.h0 * joint[0][bi];
        const double m1 = own.h1 * joint[1][bi];
        if (m0 == 0.0 && m1 == 0.0) continue;
        cont += K * (m0 + m1) + weighted_value(t + 1, own, Phase::peer_active).value;
      }
    }
    b.cont = cont;
    return b;
  }

  /// Weights of the responder's own decision point described by a policy key:
  /// own observations so far and, once the peer has stopped, its message.
  Weights key_weights(const PolicyKey& key) const {
    const auto& m = s_.model(responder_);
    const auto prefix = decode_prefix(key.prefix_code, key.t, m.alphabet_size);
    Weights w{s_.prior(0) * prefix_likelihood(m, prefix, 0), s_.prior(1) * prefix_likelihood(m, prefix, 1)};
    if (!key.peer.is_active()) {
      const auto& joint = tables_.messages.joint[static_cast<std::size_t>(key.peer.stop_time - 1)];
      w.h0 *= joint[0][to_index(key.peer.message)];
      w.h1 *= joint[1][to_index(key.peer.message)];
    }
    return w;
  }

  /// Optimal expected team cost against the fixed peer: the value at t = 1
  /// averaged over the first own observation.
  double expected_cost() const {
    const auto& m = s_.model(responder_);
    double total = 0.0;
    for (int y = 0; y < m.alphabet_size; ++y) {
      const Weights w{s_.prior(0) * m.prob(1, 0, y), s_.prior(1) * m.prob(1, 1, y)};
      if (w.empty()) continue;
      total += weighted_value(1, w, Phase::peer_active).value;
    }
    return total;
  }

  /// The argmin action at every key of the responder's policy table.
  HistoryPolicy greedy_policy() const {
    auto p = HistoryPolicy::for_scenario(responder_, s_);
    p.for_each_key([&](const PolicyKey& k) {
      p.set(k.t, k.prefix_code, k.peer, weighted_value(k.t, key_weights(k), k.peer.phase()).action);
    });
    return p;
  }

 private:
  static constexpr std::size_t kMemoLimit = std::size_t{1} << 18;

  struct Key {
    int t;
    int a;
    std::uint64_t w0;
    std::uint64_t w1;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.t) * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k.a);
      h ^= k.w0 + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
      h ^= k.w1 + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  void check_time(int t) const {
    if (t < 1 || t > s_.horizon) throw std::out_of_range("time " + std::to_string(t) + " outside 1..T");
  }

  Scenario s_;
  HistoryPolicy peer_;
  ObserverId responder_;
  SignalTables tables_;
  mutable std::mutex memo_mutex_;
  mutable std::unordered_map<Key, ValueAction, KeyHash> memo_;
};

// Threshold policies.

struct Interval {
  double lo;
  double hi;
  Action action;
};

/// Belief intervals for one (t, a): [lo, hi) with the last interval closed at 1.
struct IntervalRow {
  int t = 1;
  Phase a = Phase::peer_active;
  std::vector<Interval> intervals;

  std::size_t region_count() const { return intervals.size(); }

  std::vector<double> boundaries() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < intervals.size(); ++i) out.push_back(intervals[i].lo);
    return out;
  }

  Action action_at(double pi) const {
    for (std::size_t i = 0; i + 1 < intervals.size(); ++i)
      if (pi < intervals[i].hi) return intervals[i].action;
    return intervals.back().action;
  }
};

struct IntervalPolicy {
  ObserverId observer = ObserverId::second;
  int horizon = 0;
  /// rows[(t - 1) * 2 + a]
  std::vector<IntervalRow> rows;

  const IntervalRow& row(int t, Phase a) const { return rows[static_cast<std::size_t>((t - 1) * 2 + to_index(a))]; }
  Action action(int t, Phase a, double pi) const { return row(t, a).action_at(pi); }
};

/// Largest region count allowed for a row: two at the horizon, three once the
/// peer has stopped, five while it is active.
inline std::size_t region_limit(int t, Phase a, int horizon) {
  if (t == horizon) return 2;
  return a == Phase::peer_stopped ? 3 : 5;
}

inline constexpr int kMaxBisectionSteps = 60;

/// Samples the argmin action on a uniform belief grid, merges runs and refines
/// each change point by bisection.
inline IntervalRow extract_thresholds(const ValueOracle& o, int t, Phase a, double resolution = 1e-3,
                                      double refine_tol = 1e-12) {
  if (!(resolution > 0.0 && resolution <= 1e-2)) throw std::invalid_argument("resolution must lie in (0, 1e-2]");
  if (!(refine_tol > 0.0)) throw std::invalid_argument("refine_tol must be positive");
  const auto n = static_cast<std::size_t>(std::llround(1.0 / resolution));
  std::vector<Action> grid(n + 1);
  auto point = [n](std::size_t i) { return static_cast<double>(i) / static_cast<double>(n); };
  auto action = [&](double pi) { return o.value_at(t, Belief{pi}, a).action; };
  parallel_for(n + 1, [&](std::size_t i) { grid[i] = action(point(i)); });

  IntervalRow row{t, a, {}};
  double lo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (grid[i] == grid[i + 1]) continue;
    double left = point(i), right = point(i + 1);
    for (int step = 0; step < kMaxBisectionSteps && right - left > refine_tol; ++step) {
      const double mid = 0.5 * (left + right);
      if (action(mid) == grid[i])
        left = mid;
      else
        right = mid;
    }
    row.intervals.push_back({lo, right, grid[i]});
    lo = right;
  }
  row.intervals.push_back({lo, 1.0, grid[n]});

  const std::size_t limit = region_limit(t, a, o.horizon());
  if (row.region_count() > limit)
    throw RegionBoundViolation("t=" + std::to_string(t) + " a=" + std::to_string(to_index(a)) + ": " +
                               std::to_string(row.region_count()) + " regions, at most " +
                               std::to_string(limit) + " allowed");
  return row;
}

inline IntervalPolicy extract_policy(const ValueOracle& o, double resolution = 1e-3, double refine_tol = 1e-12) {
  IntervalPolicy p{o.responder(), o.horizon(), {}};
  for (int t = 1; t <= o.horizon(); ++t)
    for (Phase a : kPhases) p.rows.push_back(extract_thresholds(o, t, a, resolution, refine_tol));
  return p;
}

/// Applies an interval policy at every key of the responder's policy table,
/// using the belief the key induces.
inline HistoryPolicy realize(const IntervalPolicy& intervals, const ValueOracle& o) {
  auto p = HistoryPolicy::for_scenario(o.responder(), o.scenario());
  p.for_each_key([&](const PolicyKey& k) {
    const Phase a = k.peer.phase();
    const Belief pi = o.belief_of(k.t, o.key_weights(k), a);
    p.set(k.t, k.prefix_code, k.peer, intervals.action(k.t, a, pi.p_h0));
  });
  return p;
}

// Concavity.

struct ConcavityEntry {
  int t;
  Phase a;
  /// Largest discrete second difference over the grid; concavity needs <= 0.
  double max_second_difference;
  double scale;
  bool pass;
};

struct ConcavityReport {
  std::vector<ConcavityEntry> entries;
  bool pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
  }
};

inline std::vector<double> value_grid(const ValueOracle& o, int t, Phase a, std::size_t n) {
  std::vector<double> v(n + 1);
  parallel_for(n + 1, [&](std::size_t i) {
    v[i] = o.value_at(t, Belief{static_cast<double>(i) / static_cast<double>(n)}, a).value;
  });
  return v;
}

/// Largest v[i-1] - 2 v[i] + v[i+1] over a uniform grid; -inf below three points.
inline double max_second_difference(std::span<const double> v) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < v.size(); ++i) worst = std::max(worst, v[i - 1] - 2.0 * v[i] + v[i + 1]);
  return worst;
}

inline ConcavityReport check_concavity(const ValueOracle& o, double resolution = 1e-3, double tol = 1e-8) {
  const auto n = static_cast<std::size_t>(std::llround(1.0 / resolution));
  if (n < 9) throw std::invalid_argument("resolution must give at least 10 grid points");
  ConcavityReport report;
  for (int t = 1; t <= o.horizon(); ++t) {
    for (Phase a : kPhases) {
      const auto v = value_grid(o, t, a, n);
      double vmax = 0.0;
      for (double x : v) vmax = std::max(vmax, std::abs(x));
      const double worst = max_second_difference(v);
      const double scale = std::max(1.0, vmax);
      report.entries.push_back({t, a, worst, scale, worst <= tol * scale});
    }
  }
  return report;
}

// Best response and person-by-person iteration.

struct BestResponse {
  std::shared_ptr<const ValueOracle> oracle;
  HistoryPolicy policy;
  IntervalPolicy intervals;
  double expected_cost = 0.0;
  /// (t, h) cells where the peer's blank history has zero probability.
  std::vector<std::pair<int, int>> unreachable;
};

struct BestResponseOptions {
  bool extract_intervals = true;
  double resolution = 1e-3;
  double refine_tol = 1e-12;
};

inline BestResponse best_response(const Scenario& s, const HistoryPolicy& peer, ObserverId responder,
                                  const BestResponseOptions& opts = {}) {
  BestResponse br;
  br.oracle = std::make_shared<const ValueOracle>(s, peer, responder);
  br.policy = br.oracle->greedy_policy();
  br.expected_cost = br.oracle->expected_cost();
  br.unreachable = br.oracle->tables().messages.unreachable_cells();
  if (opts.extract_intervals) br.intervals = extract_policy(*br.oracle, opts.resolution, opts.refine_tol);
  return br;
}

struct TraceEntry {
  int iteration;
  ObserverId responder;
  double cost;
};

struct PersonByPersonResult {
  PolicyPair policies;
  std::vector<TraceEntry> trace;
  bool converged = false;
};

/// Alternating best responses, observer 2 first. A response is kept only if
/// it lowers the team cost by more than tol, so the trace strictly decreases.
inline PersonByPersonResult person_by_person(const Scenario& s, const HistoryPolicy& init_o1, int max_iters = 50,
                                             double tol = 1e-8) {
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const BestResponseOptions quick{.extract_intervals = false};
  PersonByPersonResult r;
  r.policies.first = init_o1;
  auto br = best_response(s, init_o1, ObserverId::second, quick);
  r.policies.second = std::move(br.policy);
  r.trace.push_back({1, ObserverId::second, br.expected_cost});
  ObserverId next = ObserverId::first;
  for (int iter = 2; iter <= max_iters; ++iter) {
    const HistoryPolicy& peer = next == ObserverId::first ? r.policies.second : r.policies.first;
    auto step = best_response(s, peer, next, quick);
    if (!(step.expected_cost < r.trace.back().cost - tol)) {
      r.converged = true;
      break;
    }
    (next == ObserverId::first ? r.policies.first : r.policies.second) = std::move(step.policy);
    r.trace.push_back({iter, next, step.expected_cost});
    next = peer_of(next);
  }
  return r;
}

}  // namespace sigdetect
