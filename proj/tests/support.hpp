#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sigdetect/sigdetect.hpp"

namespace sigdetect::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Random probability vector; with `sparse` some entries are zeroed.
inline std::vector<double> random_row(Rng& rng, int n, bool sparse) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = uniform(rng, 0.05, 1.0);
  if (sparse && n > 1)
    for (auto& x : w)
      if (uniform(rng, 0.0, 1.0) < 0.2) x = 0.0;
  if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[0] = 1.0;
  double sum = 0.0;
  for (double x : w) sum += x;
  for (auto& x : w) x /= sum;
  return w;
}

inline ObservationModel random_model(Rng& rng, int horizon, int alphabet, bool sparse) {
  ObservationModel m;
  m.alphabet_size = alphabet;
  for (int t = 0; t < horizon; ++t) m.likelihood.push_back({random_row(rng, alphabet, sparse), random_row(rng, alphabet, sparse)});
  return m;
}

struct RandomScenarioOptions {
  int max_horizon = 4;
  int max_alphabet = 3;
  bool sparse = true;
};

inline Scenario random_scenario(Rng& rng, RandomScenarioOptions opts = {}) {
  Scenario s;
  s.prior_h0 = uniform_int(rng, 0, 3) == 0 ? 0.5 : uniform(rng, 0.05, 0.95);
  s.horizon = uniform_int(rng, 1, opts.max_horizon);
  s.cost_one_active = uniform(rng, 0.1, 1.5);
  s.cost_both_active = s.cost_one_active * uniform(rng, 1.05, 3.0);
  s.terminal_cost = {{{0.0, uniform(rng, 1.0, 20.0)}, {uniform(rng, 1.0, 20.0), 0.0}}};
  for (auto& m : s.observers) m = random_model(rng, s.horizon, uniform_int(rng, 1, opts.max_alphabet), opts.sparse);
  return s;
}

/// Uniformly random deterministic policy over every key.
inline HistoryPolicy random_policy(const Scenario& s, ObserverId who, Rng& rng) {
  return HistoryPolicy::from_rule(who, s, [&](int t, std::span<const int>, PeerStatus) {
    const int n = t == s.horizon ? 2 : 3;
    return static_cast<Action>(uniform_int(rng, 0, n - 1));
  });
}

inline HistoryPolicy always_blank(const Scenario& s, ObserverId who) {
  return HistoryPolicy::from_rule(who, s, [&](int t, std::span<const int>, PeerStatus) {
    return t == s.horizon ? Action::declare0 : Action::blank;
  });
}

/// T = 2 instance with dyadic parameters, so every expectation is computed
/// without rounding: observer 1 has a binary informative first observation
/// and a degenerate second one, observer 2 sees nothing.
inline Scenario tiny_instance() {
  Scenario s;
  s.prior_h0 = 0.5;
  s.horizon = 2;
  s.cost_both_active = 1.5;
  s.cost_one_active = 1.0;
  s.terminal_cost = symmetric_terminal_cost(100.0);
  s.observers[0].alphabet_size = 2;
  s.observers[0].likelihood = {{{{0.75, 0.25}, {0.25, 0.75}}}, {{{1.0, 0.0}, {1.0, 0.0}}}};
  s.observers[1].alphabet_size = 1;
  s.observers[1].likelihood = {{{{1.0}, {1.0}}}, {{{1.0}, {1.0}}}};
  return s;
}

/// Small random instances whose joint policy spaces stay enumerable.
inline Scenario random_tiny_instance(Rng& rng) {
  Scenario s;
  s.prior_h0 = uniform(rng, 0.2, 0.8);
  s.horizon = 2;
  s.cost_one_active = uniform(rng, 0.2, 1.0);
  s.cost_both_active = s.cost_one_active * uniform(rng, 1.1, 2.5);
  s.terminal_cost = {{{0.0, uniform(rng, 2.0, 10.0)}, {uniform(rng, 2.0, 10.0), 0.0}}};
  s.observers[0] = random_model(rng, 2, 2, false);
  s.observers[0].likelihood[1] = {{{1.0, 0.0}, {uniform(rng, 0.0, 1.0), 0.0}}};
  s.observers[0].likelihood[1][1][1] = 1.0 - s.observers[0].likelihood[1][1][0];
  s.observers[1] = random_model(rng, 2, 1, false);
  s.observers[1].likelihood[0] = {{{1.0}, {1.0}}};
  s.observers[1].likelihood[1] = {{{1.0}, {1.0}}};
  // Give observer 2 a binary first observation half the time.
  if (uniform_int(rng, 0, 1)) {
    s.observers[1].alphabet_size = 2;
    s.observers[1].likelihood[0] = {random_row(rng, 2, false), random_row(rng, 2, false)};
    s.observers[1].likelihood[1] = {{{1.0, 0.0}, {1.0, 0.0}}};
  }
  return s;
}

/// Single-decision-maker sequential test with per-step cost k, evaluated
/// directly on normalised beliefs.
inline double wald_value(const Scenario& s, ObserverId who, int t, double pi) {
  const double stop0 = pi * s.J(0, 0) + (1.0 - pi) * s.J(0, 1);
  const double stop1 = pi * s.J(1, 0) + (1.0 - pi) * s.J(1, 1);
  const double stop = std::min(stop0, stop1);
  if (t == s.horizon) return stop;
  const auto& m = s.model(who);
  double cont = s.cost_one_active;
  for (int y = 0; y < m.alphabet_size; ++y) {
    const double p0 = m.prob(t + 1, 0, y), p1 = m.prob(t + 1, 1, y);
    const double py = pi * p0 + (1.0 - pi) * p1;
    if (py <= 0.0) continue;
    cont += py * wald_value(s, who, t + 1, pi * p0 / py);
  }
  return std::min(stop, cont);
}

/// Direct sum over peer observation prefixes of the probability that the
/// peer blanks through t - 1 and emits u at t, given h. Peer status is always
/// `active` on these paths since the responder has not stopped.
inline double direct_message_joint(const Scenario& s, const HistoryPolicy& peer, int t, int h, Action u) {
  const auto& m = s.model(peer.observer());
  const int n = m.alphabet_size;
  std::size_t count = 1;
  for (int i = 0; i < t; ++i) count *= static_cast<std::size_t>(n);
  double total = 0.0;
  for (std::size_t code = 0; code < count; ++code) {
    const auto prefix = decode_prefix(code, t, n);
    double p = prefix_likelihood(m, prefix, h);
    if (p == 0.0) continue;
    bool blank = true;
    for (int r = 1; r < t && blank; ++r)
      blank = peer.at(r, std::span<const int>(prefix.data(), static_cast<std::size_t>(r)), PeerStatus::active()) ==
              Action::blank;
    if (blank && peer.at(t, prefix, PeerStatus::active()) == u) total += p;
  }
  return total;
}

}  // namespace sigdetect::testing
