#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace sigdetect {

/// Decision emitted by an observer at one time step. The numeric order is the
/// tie-break order used everywhere: stop-0 < stop-1 < continue.
enum class Action : std::uint8_t { declare0 = 0, declare1 = 1, blank = 2 };

inline constexpr std::array<Action, 3> kAllActions{Action::declare0, Action::declare1,
                                                   Action::blank};
inline constexpr std::array<Action, 2> kStopActions{Action::declare0, Action::declare1};

constexpr int to_index(Action a) { return static_cast<int>(a); }
constexpr bool is_stop(Action a) { return a != Action::blank; }
constexpr Action declare(int hypothesis) {
  return hypothesis == 0 ? Action::declare0 : Action::declare1;
}

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::declare0: return "0";
    case Action::declare1: return "1";
    case Action::blank: return "b";
  }
  return "?";
}

inline Action parse_action(std::string_view text) {
  if (text == "0") return Action::declare0;
  if (text == "1") return Action::declare1;
  if (text == "b") return Action::blank;
  throw std::invalid_argument("unknown action '" + std::string(text) + "' (expected 0, 1 or b)");
}

enum class ObserverId : int { first = 1, second = 2 };

constexpr int index_of(ObserverId o) { return static_cast<int>(o) - 1; }
constexpr ObserverId peer_of(ObserverId o) {
  return o == ObserverId::first ? ObserverId::second : ObserverId::first;
}
constexpr int number_of(ObserverId o) { return static_cast<int>(o); }

inline ObserverId observer_from_number(int n) {
  if (n == 1) return ObserverId::first;
  if (n == 2) return ObserverId::second;
  throw std::invalid_argument("observer must be 1 or 2, got " + std::to_string(n));
}

/// Whether the peer has already sent its final message (a = 1) or not (a = 0).
enum class Phase : int { peer_active = 0, peer_stopped = 1 };

inline constexpr std::array<Phase, 2> kPhases{Phase::peer_active, Phase::peer_stopped};
constexpr int to_index(Phase a) { return static_cast<int>(a); }

// Errors.

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? "line " + std::to_string(line + 1) + ": " + what : what),
        line_(line) {}
  /// Zero-based line of the offending element, or -1 when unknown.
  int line() const { return line_; }

 private:
  int line_;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ImpossibleObservation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class PolicyIncomplete : public std::runtime_error {
 public:
  explicit PolicyIncomplete(const std::string& key)
      : std::runtime_error("policy has no action for " + key), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class RegionBoundViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TooLarge : public std::runtime_error {
 public:
  TooLarge(double count, double limit)
      : std::runtime_error("policy space has " + std::to_string(count) +
                           " joint policies, above the limit of " + std::to_string(limit)),
        count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

inline bool parse_int(std::string_view text, long long& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace sigdetect
