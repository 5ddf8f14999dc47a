#include <gtest/gtest.h>

#include <algorithm>

#include "sigdetect/signaling.hpp"
#include "support.hpp"

namespace sigdetect {
namespace {

TEST(MessageLikelihoods, AlwaysBlankPeer) {
  testing::Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto s = testing::random_scenario(rng);
    const auto peer = testing::always_blank(s, ObserverId::first);
    const auto table = message_likelihoods(s, peer, ObserverId::second);
    for (int t = 1; t < s.horizon; ++t)
      for (int h = 0; h < 2; ++h) EXPECT_EQ(table.likelihood(t, h, Action::blank), 1.0);
  }
}

TEST(MessageLikelihoods, CounterexamplePeerBlanksFirst) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto pair = builtin_policies(BuiltinKind::nonthreshold, s);
  const auto table = message_likelihoods(s, pair.first, ObserverId::second);
  EXPECT_EQ(table.likelihood(1, 0, Action::blank), 1.0);
  EXPECT_EQ(table.likelihood(1, 1, Action::blank), 1.0);
  // At t = 2 the peer declares 0 on an all-blank history.
  EXPECT_EQ(table.likelihood(2, 0, Action::declare0), 1.0);
  EXPECT_EQ(table.likelihood(2, 1, Action::declare0), 1.0);
  // Nothing is left active at t = 3.
  EXPECT_FALSE(table.reachable(3, 0));
  EXPECT_FALSE(table.likelihood(3, 0, Action::declare0));
  EXPECT_EQ(table.unreachable_cells().size(), 2u);
}

TEST(MessageLikelihoods, SingleObservationThresholdPeer) {
  Scenario s;
  s.prior_h0 = 0.5;
  s.horizon = 2;
  s.cost_both_active = 2.0;
  s.cost_one_active = 1.0;
  s.terminal_cost = symmetric_terminal_cost(10.0);
  s.observers[0].alphabet_size = 2;
  s.observers[0].likelihood = {{{{0.9, 0.1}, {0.2, 0.8}}}, {{{0.5, 0.5}, {0.5, 0.5}}}};
  s.observers[1].alphabet_size = 1;
  s.observers[1].likelihood = {{{{1.0}, {1.0}}}, {{{1.0}, {1.0}}}};
  const auto peer = HistoryPolicy::from_rule(ObserverId::first, s, [](int, std::span<const int> prefix, PeerStatus) {
    return prefix[0] == 0 ? Action::declare0 : Action::declare1;
  });
  const auto table = message_likelihoods(s, peer, ObserverId::second);
  EXPECT_EQ(table.likelihood(1, 0, Action::declare0), 0.9);
  EXPECT_EQ(table.likelihood(1, 1, Action::declare0), 0.2);
  EXPECT_EQ(table.likelihood(1, 1, Action::declare1), 0.8);
  EXPECT_EQ(table.likelihood(1, 0, Action::blank), 0.0);
}

TEST(MessageLikelihoods, AgreesWithDirectPrefixSum) {
  testing::Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const auto s = testing::random_scenario(rng);
    for (auto responder : {ObserverId::first, ObserverId::second}) {
      const auto peer = testing::random_policy(s, peer_of(responder), rng);
      const auto table = message_likelihoods(s, peer, responder);
      for (int t = 1; t <= s.horizon; ++t) {
        for (int h = 0; h < 2; ++h) {
          double sum = 0.0;
          for (Action u : kAllActions) {
            const double direct = testing::direct_message_joint(s, peer, t, h, u);
            EXPECT_NEAR(table.joint_at(t, h, u), direct, 1e-15);
            sum += table.joint_at(t, h, u);
          }
          if (table.reachable(t, h)) {
            double conditional = 0.0;
            for (Action u : kAllActions) conditional += *table.likelihood(t, h, u);
            EXPECT_NEAR(conditional, 1.0, 1e-12);
          } else {
            EXPECT_EQ(sum, 0.0);
          }
        }
      }
    }
  }
}

TEST(MessageLikelihoods, IndependentOfResponderModel) {
  testing::Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    auto a = testing::random_scenario(rng);
    auto b = a;
    b.observers[1] = testing::random_model(rng, b.horizon, testing::uniform_int(rng, 1, 3), true);
    const auto peer = testing::random_policy(a, ObserverId::first, rng);
    EXPECT_EQ(message_likelihoods(a, peer, ObserverId::second), message_likelihoods(b, peer, ObserverId::second));
  }
}

TEST(MessageLikelihoods, RejectsPolicyOfResponder) {
  const auto s = testing::tiny_instance();
  EXPECT_THROW(message_likelihoods(s, testing::always_blank(s, ObserverId::second), ObserverId::second),
               std::invalid_argument);
}

TEST(StopSide, CertainSimultaneousStopGivesTerminalCost) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto peer = HistoryPolicy::from_rule(ObserverId::first, s, [](int, std::span<const int>, PeerStatus) {
    return Action::declare1;
  });
  const auto side = stop_side_table(s, peer, ObserverId::second);
  for (int h = 0; h < 2; ++h)
    for (Action u : kStopActions) EXPECT_EQ(side.expected(1, h, u), s.J(u, h));
}

TEST(StopSide, ObserverOneDefersToObserverTwoOnTies) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto peer = HistoryPolicy::from_rule(ObserverId::second, s, [](int, std::span<const int>, PeerStatus) {
    return Action::declare1;
  });
  const auto side = stop_side_table(s, peer, ObserverId::first);
  for (int h = 0; h < 2; ++h)
    for (Action u : kStopActions) EXPECT_EQ(side.expected(1, h, u), s.J(1, h));
}

TEST(StopSide, CounterexampleHandTraces) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto nt = builtin_policies(BuiltinKind::nonthreshold, s);
  EXPECT_EQ(stop_side_table(s, nt.first, ObserverId::second).expected(1, 1, Action::declare1), 1.0);
  const auto e2 = builtin_policies(BuiltinKind::ex2, s);
  const auto side = stop_side_table(s, e2.first, ObserverId::second);
  EXPECT_EQ(side.expected(1, 0, Action::declare1), 2.0);
  EXPECT_EQ(side.expected(1, 1, Action::declare1), 2.0);
}

TEST(StopSide, EntriesBounded) {
  testing::Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const auto s = testing::random_scenario(rng);
    const double max_j = std::max(s.J(0, 1), s.J(1, 0));
    for (auto responder : {ObserverId::first, ObserverId::second}) {
      const auto peer = testing::random_policy(s, peer_of(responder), rng);
      const auto side = stop_side_table(s, peer, responder);
      for (int t = 1; t <= s.horizon; ++t)
        for (int h = 0; h < 2; ++h)
          for (Action u : kStopActions) {
            const auto v = side.expected(t, h, u);
            if (!v) continue;
            EXPECT_GE(*v, 0.0);
            EXPECT_LE(*v, s.cost_one_active * (s.horizon - t) + max_j + 1e-12);
          }
    }
  }
}

}  // namespace
}  // namespace sigdetect
