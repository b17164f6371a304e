#include "triage/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

std::string trace_csv(const TraceContext& ctx, const std::vector<TimestepRecord>& trace) {
  std::string out(kTraceHeader);
  out.push_back('\n');
  for (const auto& r : trace) {
    csv::Row row{std::to_string(r.t), ctx.strategy, std::to_string(ctx.k), std::to_string(ctx.s),
                 std::to_string(ctx.seed)};
    if (r.metrics) {
      for (double v : {r.metrics->f1, r.metrics->precision, r.metrics->recall, r.metrics->accuracy})
        row.push_back(num(v));
    } else {
      row.insert(row.end(), 4, std::string());
    }
    for (double v : {r.mean_readability, r.sd_readability, r.mean_identifiability, r.sd_identifiability})
      row.push_back(num(v));
    row.push_back(std::to_string(r.pseudo_count()));
    row.push_back(std::to_string(r.du_size));
    row.push_back(std::to_string(r.dl_size));
    row.push_back(std::to_string(r.duration_ms));
    out += csv::join(row);
    out.push_back('\n');
  }
  return out;
}

json to_json(const TimestepRecord& r) {
  json assignments = json::array();
  for (const auto& a : r.assignments)
    assignments.push_back(
        {{"source_id", a.source_id}, {"target_id", a.target_id}, {"distance", a.distance}, {"label", to_string(a.label)}});
  json j{{"t", r.t},
         {"queried_ids", r.queried_ids},
         {"mean_readability", r.mean_readability},
         {"sd_readability", r.sd_readability},
         {"mean_identifiability", r.mean_identifiability},
         {"sd_identifiability", r.sd_identifiability},
         {"pseudo_count", r.pseudo_count()},
         {"assignments", std::move(assignments)},
         {"du_size", r.du_size},
         {"dl_size", r.dl_size},
         {"validation_accuracy", r.validation_accuracy},
         {"duration_ms", r.duration_ms}};
  if (r.metrics)
    j["metrics"] = {{"precision", r.metrics->precision},
                    {"recall", r.metrics->recall},
                    {"accuracy", r.metrics->accuracy},
                    {"f1", r.metrics->f1}};
  else
    j["metrics"] = nullptr;
  return j;
}

TimestepRecord record_from_json(const json& j) {
  TimestepRecord r;
  r.t = j.at("t").get<int>();
  r.queried_ids = j.at("queried_ids").get<std::vector<std::string>>();
  r.mean_readability = j.at("mean_readability").get<double>();
  r.sd_readability = j.at("sd_readability").get<double>();
  r.mean_identifiability = j.at("mean_identifiability").get<double>();
  r.sd_identifiability = j.at("sd_identifiability").get<double>();
  for (const json& a : j.at("assignments")) {
    auto label = parse_label(a.at("label").get<std::string>());
    if (!label) fail(ErrorCode::corrupt, "bad label in trace assignment");
    r.assignments.push_back({a.at("source_id").get<std::string>(), a.at("target_id").get<std::string>(),
                             a.at("distance").get<double>(), *label});
  }
  if (!j.at("metrics").is_null()) {
    const json& m = j.at("metrics");
    r.metrics = stats::Metrics{m.at("precision").get<double>(), m.at("recall").get<double>(),
                               m.at("accuracy").get<double>(), m.at("f1").get<double>()};
  }
  r.du_size = j.at("du_size").get<std::size_t>();
  r.dl_size = j.at("dl_size").get<std::size_t>();
  r.validation_accuracy = j.at("validation_accuracy").get<double>();
  r.duration_ms = j.at("duration_ms").get<std::int64_t>();
  return r;
}

std::vector<double> TraceTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[c]);
    return out;
  }
  fail(ErrorCode::validation, "trace " + source + " has no column '" + std::string(name) + "'");
}

TraceTable parse_trace_csv(std::string_view content, std::string source) {
  auto rows = csv::parse(content);
  if (rows.empty()) fail(ErrorCode::validation, "trace " + source + " is empty");
  TraceTable table;
  table.source = std::move(source);
  table.columns = rows.front();
  std::size_t strategy_col = table.columns.size();
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    if (table.columns[c] == "strategy") strategy_col = c;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != table.columns.size())
      fail(ErrorCode::validation, "trace " + table.source + " row " + std::to_string(r) + " has " +
                                      std::to_string(row.size()) + " fields, expected " +
                                      std::to_string(table.columns.size()));
    std::vector<double> values(row.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == strategy_col) {
        table.strategy = row[c];
        continue;
      }
      if (row[c].empty()) continue;
      try {
        std::size_t used = 0;
        values[c] = std::stod(row[c], &used);
        if (used != row[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(ErrorCode::validation, "trace " + table.source + " row " + std::to_string(r) + ": '" + row[c] +
                                        "' is not a number");
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

TraceTable read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::validation, "cannot open trace " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace_csv(ss.str(), path.string());
}

}  // namespace triage
