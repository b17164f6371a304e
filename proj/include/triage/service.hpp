#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/engine.hpp"
#include "triage/error.hpp"

namespace triage::service {

struct LabelSubmission {
  std::string report_id;
  Label label = Label::bug;
  std::optional<int> readability_rating;      // 0 (easiest) .. 4
  std::optional<int> identifiability_rating;  // 0 (easiest) .. 4
  std::optional<std::int64_t> elapsed_ms;
  std::string labeler;

  // Throws Error{validation} naming the bad field.
  static LabelSubmission from_json(const nlohmann::json& j);
  void validate() const;
};

struct Annotation {
  std::string run_id;
  int t = 0;  // timestep the label belongs to (1-based)
  LabelSubmission submission;
  std::int64_t received_at_ms = 0;  // unix epoch
};

inline constexpr std::string_view kAnnotationHeader =
    "run_id,t,report_id,label,readability_rating,identifiability_rating,elapsed_ms,labeler,received_at_ms";

enum class JobState { idle, running, succeeded, failed };

std::string_view to_string(JobState s);

struct AdvanceJob {
  std::string job_id;
  JobState state = JobState::idle;
  std::optional<ErrorCode> error_code;
  std::string error_message;
  std::optional<int> produced_t;  // timestep recorded by a successful job
};

struct RunSummary {
  std::string run_id;
  std::string corpus;
  std::string phase;
  int t = 0;  // completed timesteps
  long long timesteps = 0;
  std::size_t queue_size = 0;
  std::size_t queue_pending = 0;
  bool depleted = false;
  std::optional<stats::Metrics> latest_metrics;
  AdvanceJob job;

  nlohmann::json to_json() const;
};

struct QueueItem {
  std::string id;
  std::string project;
  std::string title;
  std::string body;
  sampling::ScoreComponents score;
  std::optional<double> readability_raw;  // empty when the report has no words

  nlohmann::json to_json() const;
};

// Interactive runs keyed by id. Each run has its own lock; an advance runs on a
// worker thread while reads are served from a snapshot taken when it started.
// Every mutation is persisted under the state directory before it returns.
class RunService {
 public:
  // Creates the state directory if needed; throws Error{validation} when it is
  // not writable.
  explicit RunService(std::filesystem::path state_dir);
  ~RunService();

  RunService(const RunService&) = delete;
  RunService& operator=(const RunService&) = delete;

  void add_corpus(std::string name, Corpus corpus);
  std::vector<std::string> corpus_names() const;

  // Reloads persisted runs whose corpus is registered. Returns the ids restored.
  std::vector<std::string> restore();

  // Body: run configuration fields plus "corpus" (optional when exactly one
  // corpus is registered). Returns the new run id.
  std::string create_run(const nlohmann::json& body);
  std::vector<std::string> run_ids() const;

  RunSummary get_run(const std::string& run_id) const;
  std::vector<QueueItem> get_queue(const std::string& run_id) const;
  void submit_label(const std::string& run_id, const LabelSubmission& submission);
  void correct_label(const std::string& run_id, const std::string& report_id, Label label);

  // Starts an asynchronous advance. Refuses with precondition_failed while
  // labels are pending or the run is finished, and with conflict while another
  // advance of the same run is in flight.
  AdvanceJob advance(const std::string& run_id);
  // Blocks until the run has no advance in flight; returns the last job.
  AdvanceJob wait_for_advance(const std::string& run_id) const;

  std::string trace_csv(const std::string& run_id) const;
  nlohmann::json trace_json(const std::string& run_id) const;
  std::string annotations_csv(const std::string& run_id) const;

  // Persists every run. Called on shutdown.
  void flush();

  const std::filesystem::path& state_dir() const { return state_dir_; }

 private:
  struct CorpusEntry;
  struct Run;

  std::shared_ptr<Run> find_run(const std::string& run_id) const;
  std::filesystem::path run_dir(const std::string& run_id) const;
  void persist(Run& run) const;
  void refresh_snapshot(Run& run) const;
  void join_workers();

  std::filesystem::path state_dir_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<CorpusEntry>> corpora_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
  std::uint64_t next_run_ = 1;
};

std::string annotations_to_csv(const std::vector<Annotation>& rows);

}  // namespace triage::service
