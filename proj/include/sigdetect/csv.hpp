#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "sigdetect/common.hpp"
#include "sigdetect/dp.hpp"
#include "sigdetect/eval.hpp"

namespace sigdetect {

class CsvTable {
 public:
  explicit CsvTable(std::initializer_list<std::string_view> header) { row_of(header); }

  CsvTable& cell(std::string_view v) {
    if (!line_.empty()) line_ += ',';
    line_ += v;
    return *this;
  }
  CsvTable& cell(double v) { return cell(format_double(v)); }
  CsvTable& cell(int v) { return cell(std::to_string(v)); }
  CsvTable& cell(bool v) { return cell(v ? std::string_view("true") : std::string_view("false")); }
  CsvTable& cell(Action a) { return cell(to_string(a)); }
  void end_row() {
    text_ += line_;
    text_ += '\n';
    line_.clear();
  }

  const std::string& str() const { return text_; }

 private:
  void row_of(std::initializer_list<std::string_view> cells) {
    for (auto c : cells) cell(c);
    end_row();
  }

  std::string text_;
  std::string line_;
};

inline std::string values_csv(const ValueOracle& o, double resolution) {
  CsvTable csv{"t", "a", "pi", "value", "action"};
  const auto n = static_cast<std::size_t>(std::llround(1.0 / resolution));
  for (int t = 1; t <= o.horizon(); ++t) {
    for (Phase a : kPhases) {
      std::vector<ValueAction> v(n + 1);
      parallel_for(n + 1, [&](std::size_t i) {
        v[i] = o.value_at(t, Belief{static_cast<double>(i) / static_cast<double>(n)}, a);
      });
      for (std::size_t i = 0; i <= n; ++i) {
        csv.cell(t).cell(to_index(a)).cell(static_cast<double>(i) / static_cast<double>(n));
        csv.cell(v[i].value).cell(v[i].action);
        csv.end_row();
      }
    }
  }
  return csv.str();
}

inline std::string thresholds_csv(const IntervalPolicy& p) {
  CsvTable csv{"t", "a", "boundary_index", "pi_boundary", "action_left", "action_right"};
  for (const auto& row : p.rows) {
    for (std::size_t i = 1; i < row.intervals.size(); ++i) {
      csv.cell(row.t).cell(to_index(row.a)).cell(static_cast<int>(i)).cell(row.intervals[i].lo);
      csv.cell(row.intervals[i - 1].action).cell(row.intervals[i].action);
      csv.end_row();
    }
  }
  return csv.str();
}

inline std::string concavity_csv(const ConcavityReport& r) {
  CsvTable csv{"t", "a", "max_second_difference", "scale", "pass"};
  for (const auto& e : r.entries) {
    csv.cell(e.t).cell(to_index(e.a)).cell(e.max_second_difference).cell(e.scale).cell(e.pass);
    csv.end_row();
  }
  return csv.str();
}

inline std::string trace_csv(const std::vector<TraceEntry>& trace) {
  CsvTable csv{"iteration", "observer", "cost"};
  for (const auto& e : trace) {
    csv.cell(e.iteration).cell(number_of(e.responder)).cell(e.cost);
    csv.end_row();
  }
  return csv.str();
}

inline std::string path_trace_csv(const std::vector<PathRecord>& paths) {
  CsvTable csv{"h", "path", "prob", "tau1", "tau2", "L", "operating", "terminal", "total"};
  for (const auto& p : paths) {
    csv.cell(p.h).cell(p.path).cell(p.prob).cell(p.tau1).cell(p.tau2).cell(p.cost.last_decider);
    csv.cell(p.cost.operating).cell(p.cost.terminal).cell(p.cost.total);
    csv.end_row();
  }
  return csv.str();
}

}  // namespace sigdetect
