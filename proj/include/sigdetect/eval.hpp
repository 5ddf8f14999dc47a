#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sigdetect/parallel.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect {

struct CostBreakdown {
  int tau_min = 0;
  int tau_max = 0;
  int last_decider = 2;
  double operating = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

/// Cost of one realisation given both stopping times and final messages.
inline CostBreakdown cost_of(const Scenario& s, int h, int tau1, Action u1, int tau2, Action u2) {
  CostBreakdown c;
  c.tau_min = std::min(tau1, tau2);
  c.tau_max = std::max(tau1, tau2);
  c.last_decider = tau2 < tau1 ? 1 : 2;
  c.operating = s.cost_both_active * (c.tau_min - 1) + s.cost_one_active * (c.tau_max - c.tau_min);
  c.terminal = s.J(c.last_decider == 1 ? u1 : u2, h);
  c.total = c.operating + c.terminal;
  return c;
}

struct PathRecord {
  int h;
  std::string path;  // "o1=<symbols>;o2=<symbols>", symbols '.'-separated
  double prob;       // P(path | H = h)
  int tau1;
  int tau2;
  CostBreakdown cost;
};

struct ExactCost {
  double expected_cost = 0.0;
  std::vector<PathRecord> paths;  // filled only when a trace was requested
};

namespace detail {

struct Rollout {
  const Scenario& s;
  const HistoryPolicy& p1;
  const HistoryPolicy& p2;
  bool trace;
  int h = 0;
  double acc = 0.0;
  double mass = 0.0;
  std::vector<PathRecord>* paths = nullptr;

  struct Side {
    std::size_t code = 0;
    int tau = 0;
    Action final = Action::blank;
    std::vector<int> symbols;
  };

  static std::string symbols_text(const std::vector<int>& v) { return prefix_to_string(v); }

  void step(int t, Side o1, Side o2, double prob) {
    const auto& m1 = s.observers[0];
    const auto& m2 = s.observers[1];
    const int n1 = o1.tau ? 1 : m1.alphabet_size;
    const int n2 = o2.tau ? 1 : m2.alphabet_size;
    for (int y1 = 0; y1 < n1; ++y1) {
      const double q1 = o1.tau ? 1.0 : m1.prob(t, h, y1);
      if (q1 == 0.0) continue;
      for (int y2 = 0; y2 < n2; ++y2) {
        const double q2 = o2.tau ? 1.0 : m2.prob(t, h, y2);
        if (q2 == 0.0) continue;
        Side a = o1, b = o2;
        // Decisions at t see the peer's status from messages up to t - 1.
        const PeerStatus seen_by_1 = o2.tau ? PeerStatus::stopped(o2.tau, o2.final) : PeerStatus::active();
        const PeerStatus seen_by_2 = o1.tau ? PeerStatus::stopped(o1.tau, o1.final) : PeerStatus::active();
        if (!a.tau) advance(a, p1, t, y1, m1.alphabet_size, seen_by_1);
        if (!b.tau) advance(b, p2, t, y2, m2.alphabet_size, seen_by_2);
        const double p = prob * q1 * q2;
        if (a.tau && b.tau) {
          finish(a, b, p);
        } else {
          step(t + 1, std::move(a), std::move(b), p);
        }
      }
    }
  }

  void advance(Side& side, const HistoryPolicy& policy, int t, int y, int n, PeerStatus seen) {
    side.code = side.code * static_cast<std::size_t>(n) + static_cast<std::size_t>(y);
    if (trace) side.symbols.push_back(y);
    const Action act = policy.at(t, side.code, seen);
    if (is_stop(act)) {
      side.tau = t;
      side.final = act;
    }
  }

  void finish(const Side& a, const Side& b, double p) {
    const auto c = cost_of(s, h, a.tau, a.final, b.tau, b.final);
    acc += p * c.total;
    mass += p;
    if (trace)
      paths->push_back({h, "o1=" + symbols_text(a.symbols) + ";o2=" + symbols_text(b.symbols), p, a.tau, b.tau, c});
  }
};

}  // namespace detail

/// Expected team cost by exhaustive enumeration of H and both observers'
/// observation sequences, rolling the two policies forward together.
inline ExactCost exact_cost(const Scenario& s, const HistoryPolicy& p1, const HistoryPolicy& p2,
                            bool trace = false) {
  if (p1.observer() != ObserverId::first || p2.observer() != ObserverId::second)
    throw std::invalid_argument("exact_cost expects observer 1's policy then observer 2's");
  ExactCost out;
  detail::Rollout r{s, p1, p2, trace};
  r.paths = &out.paths;
  for (int h = 0; h < 2; ++h) {
    if (s.prior(h) == 0.0) continue;
    r.h = h;
    r.acc = 0.0;
    r.mass = 0.0;
    r.step(1, {}, {}, 1.0);
    if (std::abs(r.mass - 1.0) > 1e-12)
      throw std::logic_error("path probabilities under H=" + std::to_string(h) + " sum to " +
                             format_double(r.mass));
    out.expected_cost += s.prior(h) * r.acc;
  }
  return out;
}

// Monte Carlo.

struct SimResult {
  double mean = 0.0;
  double sd = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double half_width = 0.0;  // 1.96 sd / sqrt(n)

  friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// Seeded simulation of the team cost. The generator is std::mt19937_64 and
/// uniforms take its top 53 bits, so results are reproducible for a given
/// seed within one build.
inline SimResult simulate(const Scenario& s, const HistoryPolicy& p1, const HistoryPolicy& p2, std::uint64_t n,
                          std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto draw = [&](const std::vector<double>& row) {
    const double u = uniform();
    double c = 0.0;
    int last = 0;
    for (std::size_t y = 0; y < row.size(); ++y) {
      if (row[y] <= 0.0) continue;
      c += row[y];
      last = static_cast<int>(y);
      if (u < c) return last;
    }
    return last;
  };
  const int n1 = s.observers[0].alphabet_size;
  const int n2 = s.observers[1].alphabet_size;

  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const int h = uniform() < s.prior_h0 ? 0 : 1;
    std::size_t c1 = 0, c2 = 0;
    int tau1 = 0, tau2 = 0;
    Action u1 = Action::blank, u2 = Action::blank;
    for (int t = 1; t <= s.horizon && !(tau1 && tau2); ++t) {
      const PeerStatus seen_by_1 = tau2 ? PeerStatus::stopped(tau2, u2) : PeerStatus::active();
      const PeerStatus seen_by_2 = tau1 ? PeerStatus::stopped(tau1, u1) : PeerStatus::active();
      Action a1 = Action::blank, a2 = Action::blank;
      if (!tau1) {
        c1 = c1 * static_cast<std::size_t>(n1) + static_cast<std::size_t>(draw(s.observers[0].row(t, h)));
        a1 = p1.at(t, c1, seen_by_1);
      }
      if (!tau2) {
        c2 = c2 * static_cast<std::size_t>(n2) + static_cast<std::size_t>(draw(s.observers[1].row(t, h)));
        a2 = p2.at(t, c2, seen_by_2);
      }
      if (!tau1 && is_stop(a1)) tau1 = t, u1 = a1;
      if (!tau2 && is_stop(a2)) tau2 = t, u2 = a2;
    }
    const double x = cost_of(s, h, tau1, u1, tau2, u2).total;
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  SimResult r;
  r.mean = mean;
  r.sd = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  r.n = n;
  r.seed = seed;
  r.half_width = 1.96 * r.sd / std::sqrt(static_cast<double>(n));
  return r;
}

// Brute-force policy search.

inline constexpr double kDefaultSizeLimit = 1e7;

/// All deterministic policies of one observer over its reachable keys,
/// enumerated in lexicographic order with the first key most significant.
/// Keys that can never be consulted keep a fixed filler action.
class PolicySpace {
 public:
  PolicySpace(const Scenario& s, ObserverId who) : base_(HistoryPolicy::for_scenario(who, s)) {
    base_.for_each_key([&](const PolicyKey& k) { base_.set(k.t, k.prefix_code, k.peer, Action::declare0); });
    for (const auto& k : reachable_keys(s, who)) {
      slots_.push_back(base_.slot(k.t, k.prefix_code, k.peer));
      radix_.push_back(k.t < s.horizon ? 3 : 2);
    }
    count_ = 1.0;
    for (int r : radix_) count_ *= r;
  }

  double count() const { return count_; }
  std::size_t key_count() const { return slots_.size(); }
  const HistoryPolicy& base() const { return base_; }

  /// Writes policy number `index` into p (which must start as a copy of base()).
  void assign(HistoryPolicy& p, std::uint64_t index) const {
    for (std::size_t i = slots_.size(); i-- > 0;) {
      const auto r = static_cast<std::uint64_t>(radix_[i]);
      p.set_slot(slots_[i], static_cast<Action>(index % r));
      index /= r;
    }
  }

  HistoryPolicy policy(std::uint64_t index) const {
    HistoryPolicy p = base_;
    assign(p, index);
    return p;
  }

 private:
  HistoryPolicy base_;
  std::vector<std::size_t> slots_;
  std::vector<int> radix_;
  double count_ = 0.0;
};

struct BruteForceGlobal {
  PolicyPair policies;
  double cost = 0.0;
  double count = 0.0;
};

struct BruteForceResponse {
  HistoryPolicy policy;
  double cost = 0.0;
  double count = 0.0;
};

namespace detail {

struct Candidate {
  double cost = std::numeric_limits<double>::infinity();
  std::uint64_t index = 0;
};

inline bool better(const Candidate& a, const Candidate& b) {
  return a.cost < b.cost || (a.cost == b.cost && a.index < b.index);
}

}  // namespace detail

/// Exhaustive search over joint deterministic policy pairs. Ties go to the
/// lexicographically first pair (observer 1's index major).
inline BruteForceGlobal brute_force_global(const Scenario& s, double size_limit = kDefaultSizeLimit) {
  const PolicySpace space1(s, ObserverId::first);
  const PolicySpace space2(s, ObserverId::second);
  const double count = space1.count() * space2.count();
  if (count > size_limit) throw TooLarge(count, size_limit);
  const auto n1 = static_cast<std::uint64_t>(space1.count());
  const auto n2 = static_cast<std::uint64_t>(space2.count());

  std::vector<detail::Candidate> best(n1);
  parallel_for(n1, [&](std::size_t i) {
    HistoryPolicy p1 = space1.policy(i);
    HistoryPolicy p2 = space2.base();
    detail::Candidate local;
    for (std::uint64_t j = 0; j < n2; ++j) {
      space2.assign(p2, j);
      const detail::Candidate c{exact_cost(s, p1, p2).expected_cost, i * n2 + j};
      if (detail::better(c, local)) local = c;
    }
    best[i] = local;
  });
  detail::Candidate winner;
  for (const auto& c : best)
    if (detail::better(c, winner)) winner = c;
  return {{space1.policy(winner.index / n2), space2.policy(winner.index % n2)}, winner.cost, count};
}

/// Exhaustive search over one observer's policies against a fixed peer.
inline BruteForceResponse brute_force_best_response(const Scenario& s, const HistoryPolicy& peer, ObserverId who,
                                                    double size_limit = kDefaultSizeLimit) {
  if (peer.observer() != peer_of(who)) throw std::invalid_argument("peer policy belongs to the searching observer");
  const PolicySpace space(s, who);
  if (space.count() > size_limit) throw TooLarge(space.count(), size_limit);
  const auto n = static_cast<std::uint64_t>(space.count());
  const unsigned workers = worker_count();
  const std::uint64_t chunk = (n + workers - 1) / workers;
  std::vector<detail::Candidate> best(workers);
  parallel_for(workers, [&](std::size_t w) {
    HistoryPolicy p = space.base();
    detail::Candidate local;
    for (std::uint64_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) {
      space.assign(p, i);
      const double c = who == ObserverId::first ? exact_cost(s, p, peer).expected_cost
                                                : exact_cost(s, peer, p).expected_cost;
      if (detail::better({c, i}, local)) local = {c, i};
    }
    best[w] = local;
  });
  detail::Candidate winner;
  for (const auto& c : best)
    if (detail::better(c, winner)) winner = c;
  return {space.policy(winner.index), winner.cost, space.count()};
}

}  // namespace sigdetect
