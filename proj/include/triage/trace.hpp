#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/evalstats.hpp"
#include "triage/pseudolabel.hpp"

namespace triage {

// Per-timestep record of one active-learning run.
struct TimestepRecord {
  int t = 0;
  std::vector<std::string> queried_ids;  // in queue order
  double mean_readability = 0.0;         // raw Flesch over queried reports that have words
  double sd_readability = 0.0;
  double mean_identifiability = 0.0;     // raw identifiability over queried reports
  double sd_identifiability = 0.0;
  std::vector<pseudo::PseudoAssignment> assignments;
  std::optional<stats::Metrics> metrics;  // empty when no oracle-labeled test reports exist
  std::size_t du_size = 0;                // pools after pseudo-labeling, before the next query
  std::size_t dl_size = 0;
  double validation_accuracy = 0.0;       // builtin backend, final update of the step
  std::int64_t duration_ms = 0;

  std::size_t pseudo_count() const { return assignments.size(); }
  std::size_t query_count() const { return queried_ids.size(); }

  friend bool operator==(const TimestepRecord&, const TimestepRecord&) = default;
};

// Run-level columns repeated on every CSV row.
struct TraceContext {
  std::string strategy;
  long long k = 0;
  long long s = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kTraceHeader =
    "t,strategy,k,s,seed,f1,precision,recall,accuracy,mean_readability,sd_readability,"
    "mean_identifiability,sd_identifiability,pseudo_count,du_size,dl_size,duration_ms";

std::string trace_csv(const TraceContext& ctx, const std::vector<TimestepRecord>& trace);

nlohmann::json to_json(const TimestepRecord& r);
TimestepRecord record_from_json(const nlohmann::json& j);

// A trace CSV read back as named numeric columns (strategy kept as text).
struct TraceTable {
  std::string source;
  std::string strategy;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // NaN for empty cells

  std::vector<double> column(std::string_view name) const;  // throws Error{validation} if absent
};

TraceTable parse_trace_csv(std::string_view content, std::string source = {});
TraceTable read_trace_csv(const std::filesystem::path& path);

}  // namespace triage
