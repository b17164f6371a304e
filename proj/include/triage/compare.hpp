#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triage/evalstats.hpp"
#include "triage/trace.hpp"

namespace triage::compare {

enum class Test { scott_knott, wilcoxon };

std::optional<Test> parse_test(std::string_view s);  // "scott-knott" | "wilcoxon"
std::string_view to_string(Test t);

// Maps a metric name onto its trace column: readability and identifiability
// read the per-timestep means of the queried reports. Empty for unknown names.
std::optional<std::string> metric_column(std::string_view metric);

struct Row {
  std::string name;
  std::string strategy;
  std::size_t n = 0;
  double mean = 0.0;
  double stdev = 0.0;
  int rank = 0;  // scott-knott only
};

struct Report {
  std::string metric;
  Test test = Test::scott_knott;
  std::vector<Row> rows;                         // in trace order
  std::optional<stats::WilcoxonResult> wilcoxon;  // wilcoxon only: first trace minus second
  double alpha = 0.05;

  bool significant() const { return wilcoxon && wilcoxon->p_two_sided <= alpha; }
  std::string text() const;
  std::string csv() const;
};

// Scott-Knott needs two or more traces with at least two timesteps each.
// Wilcoxon needs exactly two traces of equal length, paired by timestep.
Report compare_traces(std::span<const TraceTable> traces, std::string_view metric, Test test, double alpha = 0.05);

}  // namespace triage::compare
