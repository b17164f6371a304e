#include "triage/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage::compare {

std::optional<Test> parse_test(std::string_view s) {
  if (s == "scott-knott") return Test::scott_knott;
  if (s == "wilcoxon") return Test::wilcoxon;
  return std::nullopt;
}

std::string_view to_string(Test t) { return t == Test::scott_knott ? "scott-knott" : "wilcoxon"; }

std::optional<std::string> metric_column(std::string_view metric) {
  if (metric == "f1" || metric == "precision" || metric == "recall" || metric == "accuracy") return std::string(metric);
  if (metric == "readability") return "mean_readability";
  if (metric == "identifiability") return "mean_identifiability";
  return std::nullopt;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> display_names(std::span<const TraceTable> traces) {
  std::vector<std::string> names;
  std::set<std::string> seen, clashes;
  for (const auto& t : traces) {
    names.push_back(std::filesystem::path(t.source).stem().string());
    if (!seen.insert(names.back()).second) clashes.insert(names.back());
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].empty() || clashes.count(names[i])) names[i] = traces[i].source.empty() ? "trace" + std::to_string(i + 1) : traces[i].source;
  return names;
}

}  // namespace

Report compare_traces(std::span<const TraceTable> traces, std::string_view metric, Test test, double alpha) {
  const auto column = metric_column(metric);
  if (!column) fail(ErrorCode::validation, "metric: unknown metric '" + std::string(metric) + "'");
  if (test == Test::scott_knott && traces.size() < 2)
    fail(ErrorCode::validation, "scott-knott needs at least two traces");
  if (test == Test::wilcoxon && traces.size() != 2) fail(ErrorCode::validation, "wilcoxon needs exactly two traces");

  Report report;
  report.metric = std::string(metric);
  report.test = test;
  report.alpha = alpha;
  const auto names = display_names(traces);

  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto values = traces[i].column(*column);
    for (double v : values)
      if (std::isnan(v)) fail(ErrorCode::validation, "trace " + traces[i].source + " has empty " + *column + " cells");
    samples.push_back(values);
    report.rows.push_back(Row{names[i], traces[i].strategy, values.size(), values.empty() ? 0.0 : stats::mean(values),
                              stats::sample_stdev(values), 0});
  }

  if (test == Test::wilcoxon) {
    if (samples[0].size() != samples[1].size())
      fail(ErrorCode::validation, "wilcoxon pairs by timestep but the traces have " + std::to_string(samples[0].size()) +
                                      " and " + std::to_string(samples[1].size()) + " rows");
    if (samples[0].empty()) fail(ErrorCode::validation, "wilcoxon needs at least one timestep");
    report.wilcoxon = stats::wilcoxon_signed_rank(samples[0], samples[1]);
    return report;
  }

  std::vector<stats::NamedSample> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups.push_back({std::to_string(i), samples[i]});
  for (const auto& g : stats::scott_knott(std::move(groups)).groups)
    report.rows[std::stoul(g.name)].rank = g.rank;
  return report;
}

std::string Report::text() const {
  std::string out = "metric: " + metric + "  test: " + std::string(to_string(test)) + "\n";
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  auto pad = [&](std::string s) {
    s.resize(width + 2, ' ');
    return s;
  };
  out += pad("trace") + "strategy        n     mean        sd";
  if (test == Test::scott_knott) out += "          rank";
  out += '\n';
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%-14s %3zu %10s %10s", r.strategy.c_str(), r.n, fmt(r.mean).c_str(),
                  fmt(r.stdev).c_str());
    out += pad(r.name) + line;
    if (test == Test::scott_knott) out += "    " + std::to_string(r.rank);
    out += '\n';
  }
  if (wilcoxon) {
    out += "wilcoxon " + rows[0].name + " vs " + rows[1].name + ": W=" + fmt(wilcoxon->statistic) +
           " n=" + std::to_string(wilcoxon->n_effective) + " p=" + fmt(wilcoxon->p_two_sided) +
           (wilcoxon->exact ? " (exact)" : " (normal approx.)") +
           (significant() ? "  significant at alpha=" : "  not significant at alpha=") + fmt(alpha) + "\n";
  }
  return out;
}

std::string Report::csv() const {
  std::vector<std::vector<std::string>> table;
  table.push_back({"metric", "test", "trace", "strategy", "n", "mean", "sd", "rank", "statistic", "p_value", "significant"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::vector<std::string> line{metric, std::string(to_string(test)), r.name, r.strategy, std::to_string(r.n),
                                  fmt(r.mean), fmt(r.stdev)};
    line.push_back(test == Test::scott_knott ? std::to_string(r.rank) : "");
    if (wilcoxon) {
      line.push_back(fmt(wilcoxon->statistic));
      line.push_back(fmt(wilcoxon->p_two_sided));
      line.push_back(significant() ? "true" : "false");
    } else {
      line.insert(line.end(), {"", "", ""});
    }
    table.push_back(std::move(line));
  }
  std::string out;
  for (const auto& line : table) out += csv::join(line) + "\n";
  return out;
}

}  // namespace triage::compare
