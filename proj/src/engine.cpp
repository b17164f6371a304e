#include "triage/engine.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "triage/builtin_backend.hpp"
#include "triage/error.hpp"
#include "triage/kernels.hpp"
#include "triage/pseudolabel.hpp"
#include "triage/remote_backend.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::awaiting_labels: return "sampling_done_awaiting_labels";
    case Phase::ready_to_advance: return "ready_to_advance";
    case Phase::finished: return "finished";
  }
  return "?";
}

namespace {

Phase parse_phase(std::string_view s) {
  if (s == "sampling_done_awaiting_labels") return Phase::awaiting_labels;
  if (s == "ready_to_advance") return Phase::ready_to_advance;
  if (s == "finished") return Phase::finished;
  fail(ErrorCode::corrupt, "unknown run phase '" + std::string(s) + "'");
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::validation, std::string("config field '") + name + "' has the wrong type");
  }
}

json score_json(const sampling::ScoreComponents& c) {
  return json{{"uncertainty_raw", c.uncertainty_raw},     {"readability_raw", c.readability_raw},
              {"identifiability_raw", c.identifiability_raw}, {"uncertainty_norm", c.uncertainty_norm},
              {"readability_norm", c.readability_norm},   {"identifiability_norm", c.identifiability_norm},
              {"aggregate", c.aggregate}};
}

sampling::ScoreComponents score_from_json(const json& j) {
  return sampling::ScoreComponents{j.at("uncertainty_raw").get<double>(),     j.at("readability_raw").get<double>(),
                                   j.at("identifiability_raw").get<double>(), j.at("uncertainty_norm").get<double>(),
                                   j.at("readability_norm").get<double>(),    j.at("identifiability_norm").get<double>(),
                                   j.at("aggregate").get<double>()};
}

}  // namespace

void RunConfig::validate() const {
  if (k < 1) fail(ErrorCode::validation, "k: must be >= 1");
  if (timesteps < 1) fail(ErrorCode::validation, "timesteps: must be >= 1");
  if (pseudo_s < 0) fail(ErrorCode::validation, "pseudo_s: must be >= 0");
  if (!(train_val_split > 0.0 && train_val_split < 1.0))
    fail(ErrorCode::validation, "train_val_split: must lie strictly between 0 and 1");
  if (test_size < 0) fail(ErrorCode::validation, "test_size: must be >= 0");
  if (initial_label_count < 0) fail(ErrorCode::validation, "initial_label_count: must be >= 0");
  if (backend.kind == "remote") {
    if (backend.endpoint.empty()) fail(ErrorCode::validation, "backend.endpoint: required for a remote backend");
    if (backend.dim == 0) fail(ErrorCode::validation, "backend.dim: must be positive");
  } else if (backend.kind != "builtin") {
    fail(ErrorCode::validation, "backend.kind: must be builtin or remote");
  }
}

json RunConfig::to_json() const {
  return json{{"k", k},
              {"timesteps", timesteps},
              {"pseudo_s", pseudo_s},
              {"strategy", sampling::to_string(strategy)},
              {"backend", {{"kind", backend.kind}, {"endpoint", backend.endpoint}, {"dim", backend.dim}}},
              {"seed", seed},
              {"start_mode", start_mode == StartMode::cold ? "cold" : "warm"},
              {"initial_label_count", initial_label_count},
              {"test_size", test_size},
              {"train_val_split", train_val_split},
              {"record_timing", record_timing}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::validation, "config must be a JSON object");
  RunConfig c;
  c.k = field<long long>(j, "k", 0);
  c.timesteps = field<long long>(j, "timesteps", c.timesteps);
  c.pseudo_s = field<long long>(j, "pseudo_s", c.pseudo_s);
  const auto strategy = field<std::string>(j, "strategy", "effort-aware");
  auto parsed = sampling::parse_strategy(strategy);
  if (!parsed) fail(ErrorCode::validation, "strategy: unknown strategy '" + strategy + "'");
  c.strategy = *parsed;
  if (auto it = j.find("backend"); it != j.end() && it->is_object()) {
    c.backend.kind = field<std::string>(*it, "kind", "builtin");
    c.backend.endpoint = field<std::string>(*it, "endpoint", "");
    c.backend.dim = field<std::size_t>(*it, "dim", 768);
  }
  c.seed = field<std::uint64_t>(j, "seed", 0);
  const auto mode = field<std::string>(j, "start_mode", "cold");
  if (mode != "cold" && mode != "warm") fail(ErrorCode::validation, "start_mode: must be cold or warm");
  c.start_mode = mode == "cold" ? StartMode::cold : StartMode::warm;
  c.initial_label_count = field<long long>(j, "initial_label_count", 0);
  c.test_size = field<long long>(j, "test_size", 0);
  c.train_val_split = field<double>(j, "train_val_split", 0.8);
  c.record_timing = field<bool>(j, "record_timing", true);
  c.validate();
  return c;
}

std::unique_ptr<ModelBackend> make_backend(const RunConfig& config) {
  if (config.backend.kind == "remote") return std::make_unique<RemoteBackend>(config.backend.endpoint, config.backend.dim);
  BuiltinOptions options;
  options.validation_fraction = 1.0 - config.train_val_split;
  return std::make_unique<BuiltinBackend>(options);
}

stats::Metrics evaluate(const ModelBackend& backend, const Corpus& corpus, std::span<const std::size_t> test) {
  if (test.empty()) fail(ErrorCode::degenerate, "evaluation needs at least one test report");
  std::vector<std::string_view> texts;
  texts.reserve(test.size());
  for (std::size_t i : test) {
    if (!corpus[i].oracle_label) fail(ErrorCode::validation, "test report '" + corpus[i].id + "' has no oracle label");
    texts.push_back(corpus[i].model_text);
  }
  const auto probs = backend.predict(texts);
  stats::ConfusionMatrix cm;
  for (std::size_t k = 0; k < test.size(); ++k) cm.add(*corpus[test[k]].oracle_label, probs[k].argmax());
  return stats::metrics(cm);
}

Engine::Engine(const Corpus& corpus, RunConfig config, Pool pool, std::unique_ptr<ModelBackend> backend)
    : corpus_(&corpus), config_(std::move(config)), pool_(std::move(pool)), backend_(std::move(backend)) {
  std::vector<std::string_view> raw;
  raw.reserve(corpus.size());
  for (const auto& r : corpus.reports()) raw.push_back(r.raw_text);
  effort_ = kernels::effort_scores(raw);
}

Engine Engine::init_run(const Corpus& corpus, const RunConfig& config, std::unique_ptr<ModelBackend> backend,
                        PhaseObserver observer) {
  config.validate();
  if (static_cast<long long>(corpus.size()) < config.test_size + config.k)
    fail(ErrorCode::validation, "corpus of " + std::to_string(corpus.size()) + " reports is smaller than test_size + k");
  if (!backend) backend = make_backend(config);

  Pool pool = Pool::init_partition(corpus, static_cast<std::size_t>(config.test_size), config.seed);
  Engine e(corpus, config, std::move(pool), std::move(backend));
  e.observer_ = std::move(observer);

  long long bootstrap = 0;
  if (config.start_mode == StartMode::cold)
    bootstrap = config.initial_label_count > 0 ? config.initial_label_count : config.k;
  else if (e.backend_->kind() == "builtin")
    bootstrap = config.k;  // no pre-trained weights to start from

  if (bootstrap > 0) {
    std::vector<std::size_t> candidates;
    for (std::size_t i : e.pool_.members(Membership::unlabeled))
      if (corpus[i].oracle_label) candidates.push_back(i);
    if (static_cast<long long>(candidates.size()) < bootstrap)
      fail(ErrorCode::validation, "initial_label_count: bootstrap needs " + std::to_string(bootstrap) +
                                      " oracle-labeled reports, corpus has " + std::to_string(candidates.size()));
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) { return corpus[a].id < corpus[b].id; });
    Rng rng(derive_seed(config.seed, "bootstrap"));
    rng.shuffle(candidates);
    candidates.resize(static_cast<std::size_t>(bootstrap));
    for (std::size_t i : candidates) e.pool_.seed_label(i, *corpus[i].oracle_label);
    e.update_backend(UpdateMode::cold);
  }
  e.initial_unlabeled_ = e.pool_.count(Membership::unlabeled);
  e.notify("init");
  e.sample_next();
  return e;
}

void Engine::notify(std::string_view phase) const {
  if (observer_) observer_(phase, pool_);
}

TraceContext Engine::trace_context() const {
  return TraceContext{std::string(sampling::to_string(config_.strategy)), config_.k, config_.pseudo_s, config_.seed};
}

std::vector<TrainingExample> Engine::labeled_examples() const {
  std::vector<TrainingExample> out;
  for (std::size_t i : pool_.members(Membership::labeled)) {
    const LabelState& s = pool_.label_state(i);
    out.push_back(TrainingExample{(*corpus_)[i].id, (*corpus_)[i].model_text, *s.label, s.kind});
  }
  return out;
}

UpdateReport Engine::update_backend(UpdateMode mode) {
  const auto examples = labeled_examples();
  return backend_->update(examples, mode, derive_seed(config_.seed, "update", updates_++));
}

void Engine::sample_next() {
  queue_.clear();
  if (static_cast<long long>(trace_.size()) >= config_.timesteps) {
    phase_ = Phase::finished;
    return;
  }
  const auto unlabeled = pool_.members(Membership::unlabeled);
  if (unlabeled.empty()) {
    depleted_ = true;
    phase_ = Phase::finished;
    notify("depleted");
    return;
  }
  const auto scored = sampling::score_reports(*corpus_, unlabeled, *backend_, effort_, bounds_);
  const auto step = static_cast<std::uint64_t>(trace_.size() + 1);
  const auto selection =
      sampling::select_top_k(scored, config_.k, config_.strategy, derive_seed(config_.seed, "random-sample", step));
  if (selection.depleted) depleted_ = true;
  for (std::size_t pos : selection.picks) {
    const auto& s = scored[pos];
    pool_.mark_queried(s.index);
    queue_.push_back(QueueEntry{s.index, s.id, s.score});
  }
  std::sort(queue_.begin(), queue_.end(), [](const QueueEntry& a, const QueueEntry& b) {
    if (a.score.aggregate != b.score.aggregate) return a.score.aggregate > b.score.aggregate;
    return a.id < b.id;
  });
  phase_ = Phase::awaiting_labels;
  notify("sample");
}

std::vector<QueueEntry> Engine::pending() const {
  std::vector<QueueEntry> out;
  for (const auto& q : queue_)
    if (pool_.membership(q.index) == Membership::queried) out.push_back(q);
  return out;
}

void Engine::submit_label(std::string_view report_id, Label label) {
  if (phase_ == Phase::finished) fail(ErrorCode::precondition_failed, "run is finished");
  pool_.apply_human_label(report_id, label);
  if (pending().empty()) phase_ = Phase::ready_to_advance;
  notify("label");
}

void Engine::correct_label(std::string_view report_id, Label label) {
  const std::size_t i = corpus_->index_of(report_id);
  const LabelState before = pool_.label_state(i);
  pool_.correct_label(report_id, label);
  corrections_.push_back(CorrectionEntry{std::string(report_id), completed_timesteps(), before, label});
  notify("correction");
}

const TimestepRecord& Engine::advance() {
  if (phase_ == Phase::finished) fail(ErrorCode::precondition_failed, "run is finished");
  const auto waiting = pending();
  if (!waiting.empty()) {
    std::string ids;
    for (const auto& q : waiting) ids += (ids.empty() ? "" : ",") + q.id;
    fail(ErrorCode::precondition_failed,
         std::to_string(waiting.size()) + " queued reports still need labels: " + ids);
  }
  // A failure part way (e.g. an unreachable backend) leaves the run as it was.
  Pool pool_before = pool_;
  const auto bounds_before = bounds_;
  const auto queue_before = queue_;
  const auto updates_before = updates_;
  const auto trace_before = trace_.size();
  const Phase phase_before = phase_;
  const bool depleted_before = depleted_;
  const json backend_before = backend_->save_state();
  try {
    advance_steps();
  } catch (...) {
    pool_ = std::move(pool_before);
    bounds_ = bounds_before;
    queue_ = queue_before;
    updates_ = updates_before;
    trace_.resize(trace_before);
    phase_ = phase_before;
    depleted_ = depleted_before;
    backend_->load_state(backend_before);
    throw;
  }
  return trace_.back();
}

void Engine::advance_steps() {
  const auto started = std::chrono::steady_clock::now();

  update_backend(UpdateMode::warm);
  notify("intermediate-update");

  std::vector<std::size_t> sources;
  for (const auto& q : queue_) sources.push_back(q.index);
  auto assignments = pseudo::pseudo_label_batch(sources, pool_, *backend_, config_.pseudo_s);
  notify("pseudo-label");

  const UpdateReport final_update = update_backend(UpdateMode::warm);
  notify("final-update");

  TimestepRecord r;
  r.t = completed_timesteps() + 1;
  std::vector<double> readability, identifiability;
  for (const auto& q : queue_) {
    r.queried_ids.push_back(q.id);
    const auto& e = effort_[q.index];
    if (e.readability) readability.push_back(*e.readability);
    identifiability.push_back(e.identifiability);
  }
  r.mean_readability = stats::mean(readability);
  r.sd_readability = stats::sample_stdev(readability);
  r.mean_identifiability = stats::mean(identifiability);
  r.sd_identifiability = stats::sample_stdev(identifiability);
  r.assignments = std::move(assignments);
  r.metrics = evaluate_test();
  r.du_size = pool_.count(Membership::unlabeled);
  r.dl_size = pool_.count(Membership::labeled);
  r.validation_accuracy = final_update.validation_accuracy;
  if (config_.record_timing)
    r.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                        .count();
  trace_.push_back(std::move(r));
  notify("evaluate");

  sample_next();
}

const TimestepRecord& Engine::run_timestep_oracle() {
  for (const auto& q : pending()) {
    const auto& label = (*corpus_)[q.index].oracle_label;
    if (!label) fail(ErrorCode::precondition_failed, "report '" + q.id + "' has no oracle label");
    submit_label(q.id, *label);
  }
  return advance();
}

Engine::SimulationResult Engine::run_simulation(const Corpus& corpus, const RunConfig& config,
                                                std::unique_ptr<ModelBackend> backend, PhaseObserver observer) {
  if (!corpus.all_oracle_labeled()) fail(ErrorCode::validation, "simulation needs an oracle label on every report");
  Engine e = init_run(corpus, config, std::move(backend), std::move(observer));
  while (e.phase() != Phase::finished) e.run_timestep_oracle();
  return SimulationResult{e.trace_, e.depleted_};
}

std::optional<stats::Metrics> Engine::evaluate_test() const {
  std::vector<std::size_t> test;
  for (std::size_t i : pool_.members(Membership::test))
    if ((*corpus_)[i].oracle_label) test.push_back(i);
  if (test.empty()) return std::nullopt;
  return evaluate(*backend_, *corpus_, test);
}

json Engine::to_json() const {
  json queue = json::array();
  for (const auto& q : queue_) queue.push_back({{"id", q.id}, {"score", score_json(q.score)}});
  json trace = json::array();
  for (const auto& r : trace_) trace.push_back(triage::to_json(r));
  json corrections = json::array();
  for (const auto& c : corrections_) {
    json before{{"kind", to_string(c.before.kind)}};
    if (c.before.label) before["label"] = to_string(*c.before.label);
    corrections.push_back({{"report_id", c.report_id}, {"t", c.t}, {"before", before}, {"label", to_string(c.label)}});
  }
  return json{{"format", kRunFormatTag},
              {"lexicon", lexicon::kVersion},
              {"corpus_fingerprint", corpus_->fingerprint()},
              {"config", config_.to_json()},
              {"pool", pool_.to_json()},
              {"bounds", bounds_.to_json()},
              {"backend", backend_->save_state()},
              {"queue", std::move(queue)},
              {"trace", std::move(trace)},
              {"corrections", std::move(corrections)},
              {"phase", to_string(phase_)},
              {"depleted", depleted_},
              {"initial_unlabeled", initial_unlabeled_},
              {"updates", updates_}};
}

Engine Engine::from_json(const Corpus& corpus, const json& j, std::unique_ptr<ModelBackend> backend) {
  if (!j.is_object() || !j.contains("format")) fail(ErrorCode::corrupt, "not a run state file");
  if (j.at("format").get<std::string>() != kRunFormatTag)
    fail(ErrorCode::config, "run state version '" + j.at("format").get<std::string>() + "' is not supported (expected " +
                                std::string(kRunFormatTag) + ")");
  try {
    if (j.at("corpus_fingerprint").get<std::uint64_t>() != corpus.fingerprint())
      fail(ErrorCode::validation, "run state belongs to a different corpus");
    RunConfig config = RunConfig::from_json(j.at("config"));
    Pool pool = Pool::from_json(corpus, j.at("pool"));
    if (!backend) backend = make_backend(config);
    backend->load_state(j.at("backend"));
    Engine e(corpus, std::move(config), std::move(pool), std::move(backend));
    e.bounds_ = sampling::NormalizationBounds::from_json(j.at("bounds"));
    for (const json& q : j.at("queue")) {
      const std::string id = q.at("id").get<std::string>();
      e.queue_.push_back(QueueEntry{corpus.index_of(id), id, score_from_json(q.at("score"))});
    }
    for (const json& r : j.at("trace")) e.trace_.push_back(record_from_json(r));
    for (const json& c : j.at("corrections")) {
      CorrectionEntry entry;
      entry.report_id = c.at("report_id").get<std::string>();
      entry.t = c.at("t").get<int>();
      const json& before = c.at("before");
      const std::string kind = before.at("kind").get<std::string>();
      entry.before.kind = kind == "human"       ? LabelKind::human
                          : kind == "pseudo"    ? LabelKind::pseudo
                          : kind == "corrected" ? LabelKind::corrected
                                                : LabelKind::unlabeled;
      if (before.contains("label")) entry.before.label = parse_label(before.at("label").get<std::string>());
      entry.label = parse_label(c.at("label").get<std::string>()).value_or(Label::bug);
      e.corrections_.push_back(std::move(entry));
    }
    e.phase_ = parse_phase(j.at("phase").get<std::string>());
    e.depleted_ = j.at("depleted").get<bool>();
    e.initial_unlabeled_ = j.at("initial_unlabeled").get<std::size_t>();
    e.updates_ = j.at("updates").get<std::uint64_t>();
    return e;
  } catch (const json::exception& ex) {
    fail(ErrorCode::corrupt, std::string("run state: ") + ex.what());
  }
}

Engine Engine::load(const Corpus& corpus, const std::filesystem::path& path, std::unique_ptr<ModelBackend> backend) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open run state " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    fail(ErrorCode::corrupt, "run state " + path.string() + " is corrupted: " + e.what());
  }
  return from_json(corpus, j, std::move(backend));
}

void Engine::save(const std::filesystem::path& path) const {
  const std::string text = to_json().dump();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::validation, "cannot write run state " + tmp.string());
    out << text;
    out.flush();
    if (!out) fail(ErrorCode::validation, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace triage
