#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "sigdetect/belief.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect {

/// Likelihoods of the peer's decision at each time given H and an all-blank
/// joint history before it. Both the joint mass of the blank history and the
/// conditional rows are kept; the DP works with the joint mass so that it
/// never has to divide.
struct MessageLikelihoodTable {
  ObserverId sender = ObserverId::first;
  int horizon = 0;
  /// joint[t - 1][h][u] = P(sender blanks at 1..t-1 and sends u at t | H = h),
  /// with the other observer active throughout.
  std::vector<std::array<std::array<double, 3>, 2>> joint;
  /// reach[t - 1][h] = P(sender blanks at 1..t-1 | H = h).
  std::vector<std::array<double, 2>> reach;

  bool reachable(int t, int h) const { return reach[t - 1][h] > 0.0; }

  double joint_at(int t, int h, Action u) const { return joint[t - 1][h][to_index(u)]; }

  /// P(U_t = u | H = h, blank history); empty for unreachable cells.
  std::optional<double> likelihood(int t, int h, Action u) const {
    if (!reachable(t, h)) return std::nullopt;
    return joint[t - 1][h][to_index(u)] / reach[t - 1][h];
  }

  /// Conditional rows for belief updates. Rows of unreachable hypotheses are
  /// all zero, so outcomes through them carry no probability.
  MessageLikelihoods conditional(int t) const {
    MessageLikelihoods m{};
    for (int h = 0; h < 2; ++h)
      for (Action u : kAllActions) m[to_index(u)][h] = likelihood(t, h, u).value_or(0.0);
    return m;
  }

  std::vector<std::pair<int, int>> unreachable_cells() const {
    std::vector<std::pair<int, int>> out;
    for (int t = 1; t <= horizon; ++t)
      for (int h = 0; h < 2; ++h)
        if (!reachable(t, h)) out.emplace_back(t, h);
    return out;
  }

  friend bool operator==(const MessageLikelihoodTable&, const MessageLikelihoodTable&) = default;
};

/// Expected remaining cost once the responding observer stops at t with
/// message u while the peer is still active: the peer's extra delay plus the
/// terminal cost of whichever final decision counts.
struct StopSideTable {
  ObserverId responder = ObserverId::second;
  int horizon = 0;
  /// weighted[t - 1][h][u]: sum over blank-consistent peer paths of
  /// P(path | H = h) times the cost, i.e. reach * conditional expectation.
  std::vector<std::array<std::array<double, 2>, 2>> weighted;
  std::vector<std::array<double, 2>> reach;

  double weighted_at(int t, int h, Action u) const { return weighted[t - 1][h][to_index(u)]; }

  std::optional<double> expected(int t, int h, Action u) const {
    if (!(reach[t - 1][h] > 0.0)) return std::nullopt;
    return weighted[t - 1][h][to_index(u)] / reach[t - 1][h];
  }
};

struct SignalTables {
  MessageLikelihoodTable messages;
  StopSideTable stop_side;
};

namespace detail {

class PeerWalker {
 public:
  PeerWalker(const Scenario& s, const HistoryPolicy& peer, ObserverId responder, SignalTables& out)
      : s_(s), peer_(peer), model_(s.model(peer.observer())), responder_(responder), out_(out) {}

  void run() {
    for (h_ = 0; h_ < 2; ++h_) walk_blank(1, 0, 1.0);
  }

 private:
  // Prefixes of length t - 1 along which the peer has blanked while the
  // responder was active.
  void walk_blank(int t, std::size_t code, double prob) {
    const auto n = static_cast<std::size_t>(model_.alphabet_size);
    for (std::size_t y = 0; y < n; ++y) {
      const double p = prob * model_.prob(t, h_, static_cast<int>(y));
      if (p == 0.0) continue;
      const std::size_t c = code * n + y;
      const Action a = peer_.at(t, c, PeerStatus::active());
      auto& joint = out_.messages.joint[static_cast<std::size_t>(t - 1)][h_];
      auto& side = out_.stop_side.weighted[static_cast<std::size_t>(t - 1)][h_];
      joint[to_index(a)] += p;
      if (is_stop(a)) {
        // Simultaneous stop: observer 2's decision is final.
        for (Action u : kStopActions) {
          const Action final_decision = responder_ == ObserverId::second ? u : a;
          side[to_index(u)] += p * s_.J(final_decision, h_);
        }
        continue;
      }
      for (Action u : kStopActions) side[to_index(u)] += rollout(t + 1, c, p, t, u);
      if (t < s_.horizon) walk_blank(t + 1, c, p);
    }
  }

  // The responder stopped at `since` with message u; the peer keeps going alone.
  double rollout(int t, std::size_t code, double prob, int since, Action u) const {
    if (t > s_.horizon) return 0.0;
    const auto n = static_cast<std::size_t>(model_.alphabet_size);
    const PeerStatus status = PeerStatus::stopped(since, u);
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      const double p = prob * model_.prob(t, h_, static_cast<int>(y));
      if (p == 0.0) continue;
      const std::size_t c = code * n + y;
      const Action a = peer_.at(t, c, status);
      if (is_stop(a))
        acc += p * (s_.cost_one_active * (t - since) + s_.J(a, h_));
      else
        acc += rollout(t + 1, c, p, since, u);
    }
    return acc;
  }

  const Scenario& s_;
  const HistoryPolicy& peer_;
  const ObservationModel& model_;
  ObserverId responder_;
  SignalTables& out_;
  int h_ = 0;
};

}  // namespace detail

/// Message likelihoods and stop-side costs induced by a fixed peer policy,
/// computed by exhaustive enumeration of the peer's observation paths. Only
/// the peer's own observation model is consulted.
inline SignalTables signal_tables(const Scenario& s, const HistoryPolicy& peer, ObserverId responder) {
  if (peer.observer() != peer_of(responder))
    throw std::invalid_argument("peer policy belongs to the responding observer");
  if (peer.horizon() != s.horizon || peer.alphabet_size() != s.model(peer.observer()).alphabet_size)
    throw std::invalid_argument("peer policy shape does not match the scenario");
  SignalTables out;
  const auto T = static_cast<std::size_t>(s.horizon);
  out.messages.sender = peer.observer();
  out.messages.horizon = s.horizon;
  out.messages.joint.assign(T, {});
  out.messages.reach.assign(T, {});
  out.stop_side.responder = responder;
  out.stop_side.horizon = s.horizon;
  out.stop_side.weighted.assign(T, {});
  detail::PeerWalker(s, peer, responder, out).run();
  for (std::size_t t = 0; t < T; ++t)
    for (int h = 0; h < 2; ++h) {
      const auto& j = out.messages.joint[t][h];
      out.messages.reach[t][h] = j[0] + j[1] + j[2];
    }
  out.stop_side.reach = out.messages.reach;
  return out;
}

inline MessageLikelihoodTable message_likelihoods(const Scenario& s, const HistoryPolicy& peer,
                                                  ObserverId responder) {
  return signal_tables(s, peer, responder).messages;
}

inline StopSideTable stop_side_table(const Scenario& s, const HistoryPolicy& peer, ObserverId responder) {
  return signal_tables(s, peer, responder).stop_side;
}

}  // namespace sigdetect
