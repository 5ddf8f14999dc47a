#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "sigdetect/common.hpp"
#include "sigdetect/policy.hpp"
#include "sigdetect/scenario.hpp"

namespace sigdetect {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().is_null() ? -1 : n.Mark().line; }

inline YAML::Node require(const YAML::Node& map, const char* key) {
  if (!map.IsMap()) throw ParseError("expected a mapping", line_of(map));
  YAML::Node v = map[key];
  if (!v) throw ParseError(std::string("missing key '") + key + "'", line_of(map));
  return v;
}

inline double as_double(const YAML::Node& n, const std::string& what) {
  double x = 0.0;
  if (!n.IsScalar() || !parse_double(n.Scalar(), x)) throw ParseError(what + ": expected a number", line_of(n));
  return x;
}

inline long long as_int(const YAML::Node& n, const std::string& what) {
  long long x = 0;
  if (!n.IsScalar() || !parse_int(n.Scalar(), x)) throw ParseError(what + ": expected an integer", line_of(n));
  return x;
}

inline YAML::Node as_seq(const YAML::Node& n, const std::string& what, std::size_t expected = 0) {
  if (!n.IsSequence()) throw ParseError(what + ": expected a list", line_of(n));
  if (expected && n.size() != expected)
    throw ParseError(what + ": expected " + std::to_string(expected) + " entries", line_of(n));
  return n;
}

inline YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line);
  }
}

inline void check_schema(const YAML::Node& root) {
  if (!root.IsMap()) throw ParseError("document must be a mapping", line_of(root));
  const auto v = as_int(require(root, "schema"), "schema");
  if (v != kSchemaVersion) throw ParseError("unsupported schema " + std::to_string(v), line_of(root["schema"]));
}

inline std::string list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

}  // namespace detail

/// Parses and validates a scenario document. Numbers are read with
/// correctly rounded decimal conversion, so save/load is lossless.
inline Scenario load_scenario(const std::string& text) {
  using namespace detail;
  const YAML::Node root = load_yaml(text);
  check_schema(root);
  Scenario s;
  s.prior_h0 = as_double(require(root, "prior_h0"), "prior_h0");
  const auto horizon = as_int(require(root, "horizon"), "horizon");
  if (horizon < 1 || horizon > 64) throw ParseError("horizon must lie in 1..64", line_of(root["horizon"]));
  s.horizon = static_cast<int>(horizon);
  s.cost_both_active = as_double(require(root, "cost_both_active"), "cost_both_active");
  s.cost_one_active = as_double(require(root, "cost_one_active"), "cost_one_active");
  const auto j = as_seq(require(root, "terminal_cost"), "terminal_cost", 2);
  for (std::size_t u = 0; u < 2; ++u) {
    const auto row = as_seq(j[u], "terminal_cost row", 2);
    for (std::size_t h = 0; h < 2; ++h) s.terminal_cost[u][h] = as_double(row[h], "terminal_cost entry");
  }
  const auto observers = as_seq(require(root, "observers"), "observers", 2);
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string base = "observers[" + std::to_string(i) + "]";
    auto& m = s.observers[i];
    const auto n = as_int(require(observers[i], "alphabet_size"), base + ".alphabet_size");
    if (n < 1 || n > 64) throw ParseError(base + ".alphabet_size must lie in 1..64", line_of(observers[i]));
    m.alphabet_size = static_cast<int>(n);
    const auto lik = as_seq(require(observers[i], "likelihood"), base + ".likelihood");
    for (std::size_t t = 0; t < lik.size(); ++t) {
      const auto pair = as_seq(lik[t], base + ".likelihood[" + std::to_string(t) + "]", 2);
      std::array<std::vector<double>, 2> table;
      for (std::size_t h = 0; h < 2; ++h) {
        const auto row = as_seq(pair[h], base + ".likelihood row");
        for (const auto& x : row) table[h].push_back(as_double(x, base + ".likelihood entry"));
      }
      m.likelihood.push_back(std::move(table));
    }
  }
  require_valid(s);
  return s;
}

inline std::string save_scenario(const Scenario& s) {
  using detail::list;
  std::ostringstream out;
  out << "# sigdetect scenario\n"
      << "schema: " << kSchemaVersion << "\n"
      << "prior_h0: " << format_double(s.prior_h0) << "\n"
      << "horizon: " << s.horizon << "\n"
      << "cost_both_active: " << format_double(s.cost_both_active) << "\n"
      << "cost_one_active: " << format_double(s.cost_one_active) << "\n"
      << "# terminal_cost[u][h]: decision u, true hypothesis h\n"
      << "terminal_cost: [" << list({s.terminal_cost[0][0], s.terminal_cost[0][1]}) << ", "
      << list({s.terminal_cost[1][0], s.terminal_cost[1][1]}) << "]\n"
      << "observers:\n";
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& m = s.observers[i];
    out << "  - alphabet_size: " << m.alphabet_size << "\n"
        << "    # likelihood[t - 1] = [P(y | H=0), P(y | H=1)]\n"
        << "    likelihood:\n";
    for (const auto& table : m.likelihood) out << "      - [" << list(table[0]) << ", " << list(table[1]) << "]\n";
  }
  return out.str();
}

inline HistoryPolicy load_policy(const std::string& text) {
  using namespace detail;
  const YAML::Node root = load_yaml(text);
  check_schema(root);
  const auto who = observer_from_number(static_cast<int>(as_int(require(root, "observer"), "observer")));
  const auto horizon = as_int(require(root, "horizon"), "horizon");
  const auto alphabet = as_int(require(root, "alphabet_size"), "alphabet_size");
  if (horizon < 1 || horizon > 64 || alphabet < 1 || alphabet > 64)
    throw ParseError("horizon and alphabet_size must lie in 1..64", line_of(root));
  HistoryPolicy p(who, static_cast<int>(horizon), static_cast<int>(alphabet));
  const auto rules = as_seq(require(root, "rules"), "rules");
  for (const auto& rule : rules) {
    const int line = line_of(rule);
    try {
      const auto t = as_int(require(rule, "t"), "t");
      if (t < 1 || t > horizon) throw ParseError("t outside 1.." + std::to_string(horizon), line);
      const auto prefix_node = as_seq(require(rule, "prefix"), "prefix", static_cast<std::size_t>(t));
      std::vector<int> prefix;
      for (const auto& y : prefix_node) {
        const auto v = as_int(y, "prefix symbol");
        if (v < 0 || v >= alphabet) throw ParseError("prefix symbol outside the alphabet", line);
        prefix.push_back(static_cast<int>(v));
      }
      const auto peer_node = require(rule, "peer");
      const auto action_node = require(rule, "action");
      if (!peer_node.IsScalar() || !action_node.IsScalar()) throw ParseError("peer and action must be scalars", line);
      const PeerStatus peer = parse_peer_status(peer_node.Scalar());
      const Action action = parse_action(action_node.Scalar());
      const auto code = encode_prefix(prefix, static_cast<int>(alphabet));
      if (p.find(static_cast<int>(t), code, peer)) throw ParseError("duplicate rule", line);
      p.set(static_cast<int>(t), code, peer, action);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line);
    }
  }
  return p;
}

inline std::string save_policy(const HistoryPolicy& p) {
  std::ostringstream out;
  out << "# sigdetect policy: action at (time, own observation prefix, peer status)\n"
      << "schema: " << kSchemaVersion << "\n"
      << "observer: " << number_of(p.observer()) << "\n"
      << "horizon: " << p.horizon() << "\n"
      << "alphabet_size: " << p.alphabet_size() << "\n"
      << "rules:\n";
  p.for_each_key([&](const PolicyKey& k) {
    const auto a = p.find(k.t, k.prefix_code, k.peer);
    if (!a) return;
    const auto prefix = decode_prefix(k.prefix_code, k.t, p.alphabet_size());
    out << "  - {t: " << k.t << ", prefix: [";
    for (std::size_t i = 0; i < prefix.size(); ++i) out << (i ? ", " : "") << prefix[i];
    out << "], peer: \"" << k.peer.to_string() << "\", action: " << to_string(*a) << "}\n";
  });
  return out.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a temporary sibling and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace sigdetect
