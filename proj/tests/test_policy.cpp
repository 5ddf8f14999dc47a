#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "sigdetect/io.hpp"
#include "sigdetect/policy.hpp"
#include "support.hpp"

namespace sigdetect {
namespace {

const std::filesystem::path kData = SIGDETECT_DATA_DIR;

TEST(PeerStatus, IndexRoundTrip) {
  for (int t = 1; t <= 6; ++t) {
    for (int i = 0; i < PeerStatus::count_at(t); ++i) {
      const auto p = PeerStatus::from_index(i);
      EXPECT_EQ(p.index(), i);
      EXPECT_EQ(parse_peer_status(p.to_string()), p);
      if (!p.is_active()) {
        EXPECT_LT(p.stop_time, t);
      }
    }
  }
  EXPECT_EQ(PeerStatus::stopped(2, Action::declare1).to_string(), "stopped(2,1)");
  EXPECT_THROW(parse_peer_status("stopped(0,1)"), std::invalid_argument);
  EXPECT_THROW(parse_peer_status("stopped(1,b)"), std::invalid_argument);
  EXPECT_THROW(parse_peer_status("waiting"), std::invalid_argument);
}

TEST(Prefix, EncodeDecode) {
  const std::vector<int> p{2, 0, 1};
  const auto code = encode_prefix(p, 3);
  EXPECT_EQ(code, 2u * 9 + 0 * 3 + 1);
  EXPECT_EQ(decode_prefix(code, 3, 3), p);
  EXPECT_EQ(prefix_to_string(p), "2.0.1");
}

TEST(HistoryPolicy, MissingKeyIsNamed) {
  HistoryPolicy p(ObserverId::second, 2, 2);
  try {
    p.at(2, std::vector<int>{1, 0}, PeerStatus::stopped(1, Action::declare0));
    FAIL();
  } catch (const PolicyIncomplete& e) {
    EXPECT_NE(std::string(e.what()).find("observer 2 t=2 prefix=1.0 peer=stopped(1,0)"), std::string::npos);
  }
}

TEST(HistoryPolicy, BlankForbiddenAtHorizon) {
  HistoryPolicy p(ObserverId::first, 2, 2);
  EXPECT_THROW(p.set(2, 0, PeerStatus::active(), Action::blank), std::invalid_argument);
  EXPECT_NO_THROW(p.set(1, 0, PeerStatus::active(), Action::blank));
  EXPECT_THROW(p.set(1, 0, PeerStatus::stopped(1, Action::declare0), Action::declare0), std::out_of_range);
}

TEST(ReachableKeys, TinyInstanceCounts) {
  const auto s = testing::tiny_instance();
  EXPECT_EQ(reachable_keys(s, ObserverId::first).size(), 2u + 6u);
  EXPECT_EQ(reachable_keys(s, ObserverId::second).size(), 1u + 3u);
}

TEST(BuiltinPolicies, FirstStepRules) {
  EXPECT_EQ(first_step_rule(BuiltinKind::nonthreshold, 1.0), Action::blank);
  EXPECT_EQ(first_step_rule(BuiltinKind::nonthreshold, 0.5), Action::declare0);
  EXPECT_EQ(first_step_rule(BuiltinKind::nonthreshold, 0.0), Action::declare1);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex1, 0.5), Action::blank);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex1, 0.0), Action::declare1);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex1, 1.0), Action::declare0);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex2, 0.5), Action::declare1);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex2, 0.0), Action::declare1);
  EXPECT_EQ(first_step_rule(BuiltinKind::ex2, 1.0), Action::declare0);
}

TEST(BuiltinPolicies, ObserverTwoFirstStepFollowsBelief) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto nt = builtin_policies(BuiltinKind::nonthreshold, s).second;
  // y1 = 0 only occurs under H = 0, so the belief is 1.
  EXPECT_EQ(nt.at(1, std::vector<int>{0}, PeerStatus::active()), Action::blank);
  EXPECT_EQ(nt.at(1, std::vector<int>{1}, PeerStatus::active()), Action::declare0);
  EXPECT_EQ(nt.at(1, std::vector<int>{2}, PeerStatus::active()), Action::declare1);
  const auto e1 = builtin_policies(BuiltinKind::ex1, s).second;
  EXPECT_EQ(e1.at(1, std::vector<int>{1}, PeerStatus::active()), Action::blank);
  const auto e2 = builtin_policies(BuiltinKind::ex2, s).second;
  EXPECT_EQ(e2.at(1, std::vector<int>{1}, PeerStatus::active()), Action::declare1);
}

TEST(BuiltinPolicies, RequireCounterexampleScenario) {
  EXPECT_THROW(builtin_policies(BuiltinKind::ex1, testing::tiny_instance()), std::invalid_argument);
  EXPECT_THROW(parse_builtin_kind("ex3"), std::invalid_argument);
}

TEST(DefaultInitialPolicy, BlanksThenDeclaresMap) {
  const auto s = builtin_counterexample(1.5, 0.5);
  const auto p = default_initial_policy(s, ObserverId::first);
  p.for_each_key([&](const PolicyKey& k) {
    const auto a = p.at(k.t, k.prefix_code, k.peer);
    if (k.t < 3) {
      EXPECT_EQ(a, Action::blank);
    } else {
      EXPECT_EQ(a, declare(static_cast<int>(k.prefix_code % 2)));
    }
  });
}

TEST(PolicyFile, RoundTrip) {
  testing::Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto s = testing::random_scenario(rng);
    const auto who = i % 2 ? ObserverId::first : ObserverId::second;
    const auto p = testing::random_policy(s, who, rng);
    EXPECT_EQ(load_policy(save_policy(p)), p);
  }
}

TEST(PolicyFile, ShippedFilesMatchBuiltins) {
  const auto s = builtin_counterexample(1.5, 0.5);
  for (auto kind : {BuiltinKind::ex1, BuiltinKind::ex2, BuiltinKind::nonthreshold}) {
    const auto pair = builtin_policies(kind, s);
    const std::string name(to_string(kind));
    EXPECT_EQ(load_policy(read_file(kData / "policies" / (name + "_o1.yaml"))), pair.first);
    EXPECT_EQ(load_policy(read_file(kData / "policies" / (name + "_o2.yaml"))), pair.second);
  }
}

TEST(PolicyFile, PartialPolicyLoadsWithGaps) {
  const auto p = load_policy(
      "schema: 1\nobserver: 2\nhorizon: 2\nalphabet_size: 2\nrules:\n"
      "  - {t: 2, prefix: [1, 0], peer: \"stopped(1,1)\", action: 1}\n");
  EXPECT_EQ(p.at(2, std::vector<int>{1, 0}, PeerStatus::stopped(1, Action::declare1)), Action::declare1);
  EXPECT_FALSE(p.find(1, 0, PeerStatus::active()));
}

TEST(PolicyFile, ErrorsNameTheLine) {
  const std::string head = "schema: 1\nobserver: 1\nhorizon: 2\nalphabet_size: 2\nrules:\n";
  auto line_of = [&](const std::string& rules) {
    try {
      load_policy(head + rules);
    } catch (const ParseError& e) {
      return e.line() + 1;
    }
    return -1;
  };
  EXPECT_EQ(line_of("  - {t: 1, prefix: [0], peer: \"active\", action: b}\n"
                    "  - {t: 1, prefix: [1], peer: \"active\", action: x}\n"),
            7);
  EXPECT_EQ(line_of("  - {t: 3, prefix: [0, 0, 0], peer: \"active\", action: 0}\n"), 6);
  EXPECT_EQ(line_of("  - {t: 1, prefix: [2], peer: \"active\", action: 0}\n"), 6);
  EXPECT_EQ(line_of("  - {t: 2, prefix: [0, 0], peer: \"active\", action: b}\n"), 6);
  EXPECT_EQ(line_of("  - {t: 2, prefix: [0], peer: \"active\", action: 0}\n"), 6);
  EXPECT_EQ(line_of("  - {t: 2, prefix: [0, 1], peer: \"stopped(2,0)\", action: 0}\n"), 6);
  EXPECT_EQ(line_of("  - {t: 1, prefix: [0], peer: \"active\", action: 0}\n"
                    "  - {t: 1, prefix: [0], peer: \"active\", action: 1}\n"),
            7);
  EXPECT_THROW(load_policy("schema: 1\nobserver: 3\nhorizon: 2\nalphabet_size: 2\nrules: []\n"), std::exception);
}

}  // namespace
}  // namespace sigdetect
