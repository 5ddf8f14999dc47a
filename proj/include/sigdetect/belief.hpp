#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include "sigdetect/common.hpp"

namespace sigdetect {

/// Posterior probability that H = 0.
struct Belief {
  double p_h0 = 0.5;

  double p(int h) const { return h == 0 ? p_h0 : 1.0 - p_h0; }
  friend bool operator==(const Belief&, const Belief&) = default;
};

/// Per-message likelihoods P(U = u | H = h) of the peer's decision, indexed [u][h].
using MessageLikelihoods = std::array<std::array<double, 2>, 3>;

namespace detail {

inline Belief bayes(double num0, double num1, const char* what) {
  const double den = num0 + num1;
  if (!(den > 0.0)) throw ImpossibleObservation(what);
  return Belief{std::clamp(num0 / den, 0.0, 1.0)};
}

}  // namespace detail

/// Bayes update on the own observation only (peer already stopped).
inline Belief update_own(Belief b, double lik_h0, double lik_h1) {
  return detail::bayes(lik_h0 * b.p_h0, lik_h1 * (1.0 - b.p_h0),
                       "observation has zero probability under the current belief");
}

/// Bayes update on the own observation together with the peer's message.
inline Belief update_joint(Belief b, double own_h0, double own_h1, double msg_h0, double msg_h1) {
  return detail::bayes(own_h0 * msg_h0 * b.p_h0, own_h1 * msg_h1 * (1.0 - b.p_h0),
                       "observation and message have zero probability under the current belief");
}

struct Outcome {
  int symbol;
  std::optional<Action> message;  // absent once the peer has stopped
  double probability;
  Belief successor;
};

using OutcomeDistribution = std::vector<Outcome>;

/// Joint distribution of the next own observation (from the likelihood rows
/// `own[h][y]`) and, when the peer is still active, its message at the current
/// step. Zero-probability outcomes are omitted.
template <class Rows>
OutcomeDistribution outcome_distribution(Belief b, const Rows& own,
                                         const std::optional<MessageLikelihoods>& messages) {
  OutcomeDistribution out;
  const auto& row0 = own[0];
  const auto& row1 = own[1];
  const std::size_t n = row0.size();
  for (std::size_t y = 0; y < n; ++y) {
    if (!messages) {
      const double prob = row0[y] * b.p_h0 + row1[y] * (1.0 - b.p_h0);
      if (prob > 0.0)
        out.push_back({static_cast<int>(y), std::nullopt, prob, update_own(b, row0[y], row1[y])});
      continue;
    }
    for (Action u : kAllActions) {
      const auto& m = (*messages)[to_index(u)];
      const double prob = row0[y] * m[0] * b.p_h0 + row1[y] * m[1] * (1.0 - b.p_h0);
      if (prob > 0.0)
        out.push_back({static_cast<int>(y), u, prob, update_joint(b, row0[y], row1[y], m[0], m[1])});
    }
  }
  return out;
}

}  // namespace sigdetect
