#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sigdetect/belief.hpp"
#include "sigdetect/common.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect {

/// What an observer knows about its peer at a decision time t: either the peer
/// is still active, or it stopped at some s < t with final message u. All
/// earlier peer messages are blanks, so this pair is the whole peer history.
struct PeerStatus {
  int stop_time = 0;  // 0 while active
  Action message = Action::blank;

  static PeerStatus active() { return {}; }
  static PeerStatus stopped(int s, Action u) { return {s, u}; }

  bool is_active() const { return stop_time == 0; }
  Phase phase() const { return is_active() ? Phase::peer_active : Phase::peer_stopped; }

  /// Dense index among the 2t - 1 statuses possible at time t.
  int index() const { return is_active() ? 0 : 1 + 2 * (stop_time - 1) + to_index(message); }
  static PeerStatus from_index(int i) {
    if (i == 0) return active();
    return stopped((i - 1) / 2 + 1, declare((i - 1) % 2));
  }
  static int count_at(int t) { return 2 * t - 1; }

  std::string to_string() const {
    if (is_active()) return "active";
    return "stopped(" + std::to_string(stop_time) + "," + std::string(sigdetect::to_string(message)) +
           ")";
  }

  friend bool operator==(const PeerStatus&, const PeerStatus&) = default;
};

inline PeerStatus parse_peer_status(std::string_view text) {
  if (text == "active") return PeerStatus::active();
  constexpr std::string_view head = "stopped(";
  if (text.starts_with(head) && text.ends_with(")")) {
    auto body = text.substr(head.size(), text.size() - head.size() - 1);
    auto comma = body.find(',');
    long long s = 0;
    if (comma != std::string_view::npos && parse_int(body.substr(0, comma), s) && s >= 1) {
      Action u = parse_action(body.substr(comma + 1));
      if (is_stop(u)) return PeerStatus::stopped(static_cast<int>(s), u);
    }
  }
  throw std::invalid_argument("malformed peer status '" + std::string(text) +
                              "' (expected active or stopped(s,u))");
}

/// Own observation prefix y_{1:t}, encoded in base |Y| with y_1 most significant.
inline std::size_t encode_prefix(std::span<const int> prefix, int alphabet_size) {
  std::size_t code = 0;
  for (int y : prefix) code = code * static_cast<std::size_t>(alphabet_size) + static_cast<std::size_t>(y);
  return code;
}

inline std::vector<int> decode_prefix(std::size_t code, int length, int alphabet_size) {
  std::vector<int> out(static_cast<std::size_t>(length));
  for (int i = length - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(code % static_cast<std::size_t>(alphabet_size));
    code /= static_cast<std::size_t>(alphabet_size);
  }
  return out;
}

inline std::string prefix_to_string(std::span<const int> prefix) {
  std::string out;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(prefix[i]);
  }
  return out;
}

struct PolicyKey {
  int t;
  std::size_t prefix_code;
  PeerStatus peer;
};

/// Deterministic policy of one observer as an explicit table
/// (t, own prefix, peer status) -> action.
class HistoryPolicy {
 public:
  HistoryPolicy() = default;
  HistoryPolicy(ObserverId who, int horizon, int alphabet_size)
      : who_(who), horizon_(horizon), alphabet_size_(alphabet_size) {
    if (horizon < 1 || alphabet_size < 1)
      throw std::invalid_argument("policy needs horizon >= 1 and alphabet_size >= 1");
    offset_.resize(static_cast<std::size_t>(horizon) + 2, 0);
    std::size_t prefixes = 1;
    for (int t = 1; t <= horizon; ++t) {
      prefixes *= static_cast<std::size_t>(alphabet_size);
      offset_[static_cast<std::size_t>(t) + 1] =
          offset_[static_cast<std::size_t>(t)] + prefixes * static_cast<std::size_t>(PeerStatus::count_at(t));
    }
    actions_.assign(offset_.back(), kUnset);
  }

  static HistoryPolicy for_scenario(ObserverId who, const Scenario& s) {
    return HistoryPolicy(who, s.horizon, s.model(who).alphabet_size);
  }

  /// Builds a total policy from a rule evaluated at every key.
  template <class Rule>
  static HistoryPolicy from_rule(ObserverId who, const Scenario& s, Rule&& rule) {
    auto p = for_scenario(who, s);
    p.for_each_key([&](const PolicyKey& k) {
      auto prefix = decode_prefix(k.prefix_code, k.t, p.alphabet_size());
      p.set(k.t, k.prefix_code, k.peer, rule(k.t, std::span<const int>(prefix), k.peer));
    });
    return p;
  }

  ObserverId observer() const { return who_; }
  int horizon() const { return horizon_; }
  int alphabet_size() const { return alphabet_size_; }
  std::size_t size() const { return actions_.size(); }

  std::size_t prefix_count(int t) const {
    return (offset_[static_cast<std::size_t>(t) + 1] - offset_[static_cast<std::size_t>(t)]) /
           static_cast<std::size_t>(PeerStatus::count_at(t));
  }

  std::size_t slot(int t, std::size_t prefix_code, PeerStatus peer) const {
    check_key(t, peer);
    return offset_[static_cast<std::size_t>(t)] +
           prefix_code * static_cast<std::size_t>(PeerStatus::count_at(t)) +
           static_cast<std::size_t>(peer.index());
  }

  std::optional<Action> find(int t, std::size_t prefix_code, PeerStatus peer) const {
    const auto v = actions_[slot(t, prefix_code, peer)];
    if (v == kUnset) return std::nullopt;
    return static_cast<Action>(v);
  }

  Action at(int t, std::size_t prefix_code, PeerStatus peer) const {
    const auto v = actions_[slot(t, prefix_code, peer)];
    if (v == kUnset) throw PolicyIncomplete(describe_key(t, prefix_code, peer));
    return static_cast<Action>(v);
  }

  Action at(int t, std::span<const int> prefix, PeerStatus peer) const {
    return at(t, encode_prefix(prefix, alphabet_size_), peer);
  }

  void set(int t, std::size_t prefix_code, PeerStatus peer, Action a) {
    if (t == horizon_ && !is_stop(a))
      throw std::invalid_argument("blank is not allowed at the horizon (" +
                                  describe_key(t, prefix_code, peer) + ")");
    actions_[slot(t, prefix_code, peer)] = static_cast<std::uint8_t>(a);
  }

  void set(int t, std::span<const int> prefix, PeerStatus peer, Action a) {
    set(t, encode_prefix(prefix, alphabet_size_), peer, a);
  }

  void set_slot(std::size_t slot, Action a) { actions_[slot] = static_cast<std::uint8_t>(a); }
  std::optional<Action> at_slot(std::size_t slot) const {
    if (actions_[slot] == kUnset) return std::nullopt;
    return static_cast<Action>(actions_[slot]);
  }

  /// Visits keys in table order: t ascending, then prefix code, then peer status.
  template <class F>
  void for_each_key(F&& f) const {
    for (int t = 1; t <= horizon_; ++t) {
      const std::size_t n = prefix_count(t);
      for (std::size_t code = 0; code < n; ++code)
        for (int i = 0; i < PeerStatus::count_at(t); ++i) f(PolicyKey{t, code, PeerStatus::from_index(i)});
    }
  }

  std::string describe_key(int t, std::size_t prefix_code, PeerStatus peer) const {
    auto prefix = decode_prefix(prefix_code, t, alphabet_size_);
    return "observer " + std::to_string(number_of(who_)) + " t=" + std::to_string(t) +
           " prefix=" + prefix_to_string(prefix) + " peer=" + peer.to_string();
  }

  friend bool operator==(const HistoryPolicy&, const HistoryPolicy&) = default;

 private:
  static constexpr std::uint8_t kUnset = 0xFF;

  void check_key(int t, PeerStatus peer) const {
    if (t < 1 || t > horizon_) throw std::out_of_range("time " + std::to_string(t) + " outside 1..T");
    if (!peer.is_active() && (peer.stop_time < 1 || peer.stop_time >= t || !is_stop(peer.message)))
      throw std::out_of_range("peer status " + peer.to_string() + " impossible at t=" +
                              std::to_string(t));
  }

  ObserverId who_ = ObserverId::first;
  int horizon_ = 0;
  int alphabet_size_ = 0;
  std::vector<std::size_t> offset_;
  std::vector<std::uint8_t> actions_;
};

/// Own-observation likelihood P(y_{1:t} | H = h) of a prefix.
inline double prefix_likelihood(const ObservationModel& m, std::span<const int> prefix, int h) {
  double p = 1.0;
  for (std::size_t i = 0; i < prefix.size(); ++i) p *= m.prob(static_cast<int>(i) + 1, h, prefix[i]);
  return p;
}

/// Keys a policy can be consulted at: own prefixes with positive probability
/// under some hypothesis, paired with every peer status.
inline std::vector<PolicyKey> reachable_keys(const Scenario& s, ObserverId who) {
  const auto& m = s.model(who);
  std::vector<PolicyKey> keys;
  HistoryPolicy shape = HistoryPolicy::for_scenario(who, s);
  shape.for_each_key([&](const PolicyKey& k) {
    auto prefix = decode_prefix(k.prefix_code, k.t, m.alphabet_size);
    if (prefix_likelihood(m, prefix, 0) > 0.0 || prefix_likelihood(m, prefix, 1) > 0.0)
      keys.push_back(k);
  });
  return keys;
}

/// Blank until the horizon, then declare the hypothesis the own observations
/// favour (ties to 0). Ignores the peer entirely.
inline HistoryPolicy default_initial_policy(const Scenario& s, ObserverId who) {
  const auto& m = s.model(who);
  return HistoryPolicy::from_rule(who, s, [&](int t, std::span<const int> prefix, PeerStatus) {
    if (t < s.horizon) return Action::blank;
    const double w0 = s.prior(0) * prefix_likelihood(m, prefix, 0);
    const double w1 = s.prior(1) * prefix_likelihood(m, prefix, 1);
    const double cost0 = w0 * s.J(0, 0) + w1 * s.J(0, 1);
    const double cost1 = w0 * s.J(1, 0) + w1 * s.J(1, 1);
    return cost1 < cost0 ? Action::declare1 : Action::declare0;
  });
}

enum class BuiltinKind { ex1, ex2, nonthreshold };

inline BuiltinKind parse_builtin_kind(std::string_view text) {
  if (text == "ex1") return BuiltinKind::ex1;
  if (text == "ex2") return BuiltinKind::ex2;
  if (text == "nonthreshold") return BuiltinKind::nonthreshold;
  throw std::invalid_argument("unknown policy kind '" + std::string(text) +
                              "' (expected ex1, ex2 or nonthreshold)");
}

inline std::string_view to_string(BuiltinKind k) {
  switch (k) {
    case BuiltinKind::ex1: return "ex1";
    case BuiltinKind::ex2: return "ex2";
    case BuiltinKind::nonthreshold: return "nonthreshold";
  }
  return "?";
}

struct PolicyPair {
  HistoryPolicy first;
  HistoryPolicy second;
};

/// Observer 2's first-step rule as a function of its belief after y_1.
inline Action first_step_rule(BuiltinKind kind, double belief) {
  const bool certain0 = belief == 1.0;
  const bool certain1 = belief == 0.0;
  switch (kind) {
    case BuiltinKind::ex1:
      return certain1 ? Action::declare1 : certain0 ? Action::declare0 : Action::blank;
    case BuiltinKind::ex2:
      return certain0 ? Action::declare0 : Action::declare1;
    case BuiltinKind::nonthreshold:
      return certain1 ? Action::declare1 : certain0 ? Action::blank : Action::declare0;
  }
  return Action::blank;
}

/// Complete policy pairs for the counterexample: observer 2 uses the named
/// first-step rule, and every other decision point is filled with the
/// cost-minimising completion against it.
inline PolicyPair builtin_policies(BuiltinKind kind, const Scenario& s) {
  CounterexampleParams params{};
  if (!recover_counterexample(s, params))
    throw std::invalid_argument("built-in policies require a built-in counterexample scenario");

  auto o1 = HistoryPolicy::from_rule(
      ObserverId::first, s, [&](int t, std::span<const int> prefix, PeerStatus peer) {
        if (t == 1) return Action::blank;
        // The third observation is noiseless: y = h.
        if (t == 3) return declare(prefix[2]);
        switch (kind) {
          case BuiltinKind::nonthreshold:
            if (peer.is_active()) return Action::declare0;
            return peer.message == Action::declare1 ? Action::declare1 : Action::blank;
          case BuiltinKind::ex1:
            return peer.is_active() ? Action::blank : peer.message;
          case BuiltinKind::ex2:
            return peer.message == Action::declare0 ? Action::declare0 : Action::blank;
        }
        return Action::blank;
      });

  const auto& m2 = s.model(ObserverId::second);
  auto o2 = HistoryPolicy::from_rule(
      ObserverId::second, s, [&](int t, std::span<const int> prefix, PeerStatus peer) {
        if (t == 1) {
          const double l0 = m2.prob(1, 0, prefix[0]);
          const double l1 = m2.prob(1, 1, prefix[0]);
          const double pi = (l0 == 0.0 && l1 == 0.0) ? s.prior_h0 : update_own(Belief{s.prior_h0}, l0, l1).p_h0;
          return first_step_rule(kind, pi);
        }
        if (!peer.is_active()) return peer.message;
        // Only y_1 = 2 identifies H = 1; otherwise declare 0 (correct when
        // y_1 = 0, a signal to observer 1 when y_1 = 1).
        return prefix[0] == 2 ? Action::declare1 : Action::declare0;
      });
  return {std::move(o1), std::move(o2)};
}

}  // namespace sigdetect
