#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/corpus.hpp"
#include "triage/evalstats.hpp"
#include "triage/model.hpp"
#include "triage/sampling.hpp"
#include "triage/textmetrics.hpp"
#include "triage/trace.hpp"

namespace triage {

enum class StartMode { cold, warm };

struct BackendConfig {
  std::string kind = "builtin";  // "builtin" | "remote"
  std::string endpoint;          // remote only
  std::size_t dim = 768;         // remote only: declared embedding dimension
};

struct RunConfig {
  long long k = 0;                // queries per timestep
  long long timesteps = 10;       // T
  long long pseudo_s = 1;         // pseudo-labels per human label
  sampling::Strategy strategy = sampling::Strategy::effort_aware;
  BackendConfig backend;
  std::uint64_t seed = 0;
  StartMode start_mode = StartMode::cold;
  long long initial_label_count = 0;  // cold start; 0 means k
  long long test_size = 0;
  double train_val_split = 0.8;
  bool record_timing = true;          // wall-clock duration_ms; off for reproducible traces

  // Throws Error{validation} naming the first bad field.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

enum class Phase { awaiting_labels, ready_to_advance, finished };

std::string_view to_string(Phase p);

struct QueueEntry {
  std::size_t index = 0;
  std::string id;
  sampling::ScoreComponents score;
};

struct CorrectionEntry {
  std::string report_id;
  int t = 0;  // completed timesteps when the correction arrived
  LabelState before;
  Label label = Label::bug;
};

std::unique_ptr<ModelBackend> make_backend(const RunConfig& config);

// Precision/recall/accuracy/F1 of `backend` over the given reports, which must
// carry oracle labels. Throws Error{degenerate} on an empty set.
stats::Metrics evaluate(const ModelBackend& backend, const Corpus& corpus, std::span<const std::size_t> test);

// One active-learning run: sample -> label -> update -> pseudo-label -> update
// -> evaluate, repeated for T timesteps. Not internally synchronized; callers
// serialize access.
class Engine {
 public:
  using PhaseObserver = std::function<void(std::string_view phase, const Pool& pool)>;

  // Partitions the corpus, draws and fits the bootstrap set, and samples the
  // first query batch. A null backend is built from config.backend.
  static Engine init_run(const Corpus& corpus, const RunConfig& config, std::unique_ptr<ModelBackend> backend = nullptr,
                         PhaseObserver observer = nullptr);

  static Engine from_json(const Corpus& corpus, const nlohmann::json& j, std::unique_ptr<ModelBackend> backend = nullptr);
  static Engine load(const Corpus& corpus, const std::filesystem::path& path,
                     std::unique_ptr<ModelBackend> backend = nullptr);
  nlohmann::json to_json() const;
  // Written to a sibling temp file, then renamed into place.
  void save(const std::filesystem::path& path) const;

  // Current D_q in queue order (descending aggregate, then id).
  const std::vector<QueueEntry>& queue() const { return queue_; }
  std::vector<QueueEntry> pending() const;

  void submit_label(std::string_view report_id, Label label);
  void correct_label(std::string_view report_id, Label label);

  // Runs the rest of the timestep once every queued report is labeled, then
  // samples the next batch (or finishes). Refuses with Error{precondition_failed}
  // listing pending ids otherwise. On any failure the run is left unchanged.
  const TimestepRecord& advance();

  // Labels every pending report with its oracle label, then advances.
  const TimestepRecord& run_timestep_oracle();

  struct SimulationResult {
    std::vector<TimestepRecord> trace;
    bool depleted = false;
  };
  // Oracle-driven run to completion. Every report needs an oracle label.
  static SimulationResult run_simulation(const Corpus& corpus, const RunConfig& config,
                                         std::unique_ptr<ModelBackend> backend = nullptr,
                                         PhaseObserver observer = nullptr);

  std::optional<stats::Metrics> evaluate_test() const;

  const RunConfig& config() const { return config_; }
  const Corpus& corpus() const { return *corpus_; }
  const Pool& pool() const { return pool_; }
  const ModelBackend& backend() const { return *backend_; }
  const sampling::NormalizationBounds& bounds() const { return bounds_; }
  const std::vector<TimestepRecord>& trace() const { return trace_; }
  const std::vector<CorrectionEntry>& corrections() const { return corrections_; }
  Phase phase() const { return phase_; }
  int completed_timesteps() const { return static_cast<int>(trace_.size()); }
  bool depleted() const { return depleted_; }
  std::size_t initial_unlabeled() const { return initial_unlabeled_; }
  TraceContext trace_context() const;

  void set_observer(PhaseObserver observer) { observer_ = std::move(observer); }

 private:
  Engine(const Corpus& corpus, RunConfig config, Pool pool, std::unique_ptr<ModelBackend> backend);

  void advance_steps();
  void sample_next();
  std::vector<TrainingExample> labeled_examples() const;
  UpdateReport update_backend(UpdateMode mode);
  void notify(std::string_view phase) const;

  const Corpus* corpus_;
  RunConfig config_;
  Pool pool_;
  std::unique_ptr<ModelBackend> backend_;
  std::vector<text::EffortScores> effort_;
  sampling::NormalizationBounds bounds_;
  std::vector<QueueEntry> queue_;
  std::vector<TimestepRecord> trace_;
  std::vector<CorrectionEntry> corrections_;
  Phase phase_ = Phase::awaiting_labels;
  bool depleted_ = false;
  std::size_t initial_unlabeled_ = 0;
  std::uint64_t updates_ = 0;
  PhaseObserver observer_;
};

inline constexpr std::string_view kRunFormatTag = "triage-run/1";

}  // namespace triage
