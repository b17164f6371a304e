#include "triage/service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "triage/csv.hpp"
#include "triage/error.hpp"
#include "triage/textmetrics.hpp"

namespace triage::service {

using nlohmann::json;

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::idle: return "idle";
    case JobState::running: return "running";
    case JobState::succeeded: return "succeeded";
    case JobState::failed: return "failed";
  }
  return "?";
}

namespace {

std::optional<int> rating_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) fail(ErrorCode::validation, std::string(name) + ": must be an integer from 0 to 4");
  return it->get<int>();
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json metrics_json(const std::optional<stats::Metrics>& m) {
  if (!m) return nullptr;
  return json{{"precision", m->precision}, {"recall", m->recall}, {"accuracy", m->accuracy}, {"f1", m->f1}};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fail(ErrorCode::validation, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> annotation_row(const Annotation& a) {
  auto opt = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
  const auto& s = a.submission;
  return {a.run_id,
          std::to_string(a.t),
          s.report_id,
          std::string(to_string(s.label)),
          opt(s.readability_rating),
          opt(s.identifiability_rating),
          opt(s.elapsed_ms),
          s.labeler,
          std::to_string(a.received_at_ms)};
}

std::optional<long long> parse_optional_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stoll(s);
}

}  // namespace

LabelSubmission LabelSubmission::from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::validation, "label submission must be a JSON object");
  LabelSubmission s;
  auto id = j.find("report_id");
  if (id == j.end() || !id->is_string()) fail(ErrorCode::validation, "report_id: required string");
  s.report_id = id->get<std::string>();
  auto label = j.find("label");
  if (label == j.end() || !label->is_string()) fail(ErrorCode::validation, "label: required, bug or nonbug");
  auto parsed = parse_label(label->get<std::string>());
  if (!parsed) fail(ErrorCode::validation, "label: must be bug or nonbug");
  s.label = *parsed;
  s.readability_rating = rating_field(j, "readability_rating");
  s.identifiability_rating = rating_field(j, "identifiability_rating");
  if (auto it = j.find("elapsed_ms"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) fail(ErrorCode::validation, "elapsed_ms: must be a nonnegative integer");
    s.elapsed_ms = it->get<std::int64_t>();
  }
  if (auto it = j.find("labeler"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail(ErrorCode::validation, "labeler: must be a string");
    s.labeler = it->get<std::string>();
  }
  s.validate();
  return s;
}

void LabelSubmission::validate() const {
  if (report_id.empty()) fail(ErrorCode::validation, "report_id: required");
  auto check = [](const std::optional<int>& r, const char* name) {
    if (r && (*r < 0 || *r > 4)) fail(ErrorCode::validation, std::string(name) + ": must be an integer from 0 to 4");
  };
  check(readability_rating, "readability_rating");
  check(identifiability_rating, "identifiability_rating");
  if (elapsed_ms && *elapsed_ms < 0) fail(ErrorCode::validation, "elapsed_ms: must be a nonnegative integer");
}

json RunSummary::to_json() const {
  json j{{"run_id", run_id},
         {"corpus", corpus},
         {"phase", phase},
         {"t", t},
         {"timesteps", timesteps},
         {"queue_size", queue_size},
         {"queue_pending", queue_pending},
         {"depleted", depleted},
         {"latest_metrics", metrics_json(latest_metrics)}};
  json jj{{"job_id", job.job_id}, {"state", to_string(job.state)}};
  if (job.error_code) jj["error"] = {{"code", triage::to_string(*job.error_code)}, {"message", job.error_message}};
  if (job.produced_t) jj["t"] = *job.produced_t;
  j["job"] = std::move(jj);
  return j;
}

json QueueItem::to_json() const {
  return json{{"id", id},
              {"project", project},
              {"title", title},
              {"body", body},
              {"uncertainty", score.uncertainty_raw},
              {"readability", readability_raw ? json(*readability_raw) : json(nullptr)},
              {"identifiability", score.identifiability_raw},
              {"aggregate", score.aggregate}};
}

std::string annotations_to_csv(const std::vector<Annotation>& rows) {
  std::string out(kAnnotationHeader);
  out += '\n';
  for (const auto& a : rows) out += csv::join(annotation_row(a)) + "\n";
  return out;
}

struct RunService::CorpusEntry {
  std::string name;
  Corpus corpus;
};

struct RunService::Run {
  std::string id;
  std::shared_ptr<const CorpusEntry> corpus;

  mutable std::mutex m;
  mutable std::condition_variable done;
  std::optional<Engine> engine;  // touched only by the worker while job.state == running
  AdvanceJob job;
  int jobs_started = 0;
  std::thread worker;
  std::vector<Annotation> annotations;

  // Served to readers; rebuilt after every mutation.
  RunSummary summary;
  std::vector<QueueItem> queue;
  std::string trace_csv;
  json trace_json;
};

RunService::RunService(std::filesystem::path state_dir) : state_dir_(std::move(state_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(state_dir_, ec);
  const auto probe = state_dir_ / ".write-probe";
  {
    std::ofstream out(probe);
    if (ec || !out || !(out << "ok")) fail(ErrorCode::validation, "state-dir: " + state_dir_.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
  for (const auto& entry : std::filesystem::directory_iterator(state_dir_)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("run-", 0) == 0) {
      try {
        next_run_ = std::max<std::uint64_t>(next_run_, std::stoull(name.substr(4)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
}

RunService::~RunService() { join_workers(); }

void RunService::join_workers() {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(registry_mutex_);
    for (auto& [id, run] : runs_) runs.push_back(run);
  }
  for (auto& run : runs)
    if (run->worker.joinable()) run->worker.join();
}

void RunService::add_corpus(std::string name, Corpus corpus) {
  std::lock_guard lock(registry_mutex_);
  if (corpora_.count(name)) fail(ErrorCode::conflict, "corpus '" + name + "' is already registered");
  auto entry = std::make_shared<CorpusEntry>(CorpusEntry{name, std::move(corpus)});
  corpora_.emplace(std::move(name), std::move(entry));
}

std::vector<std::string> RunService::corpus_names() const {
  std::lock_guard lock(registry_mutex_);
  std::vector<std::string> names;
  for (const auto& [name, entry] : corpora_) names.push_back(name);
  return names;
}

std::filesystem::path RunService::run_dir(const std::string& run_id) const { return state_dir_ / run_id; }

std::shared_ptr<RunService::Run> RunService::find_run(const std::string& run_id) const {
  std::lock_guard lock(registry_mutex_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) fail(ErrorCode::not_found, "unknown run '" + run_id + "'");
  return it->second;
}

void RunService::persist(Run& run) const { run.engine->save(run_dir(run.id) / "run.json"); }

void RunService::refresh_snapshot(Run& run) const {
  const Engine& e = *run.engine;
  RunSummary& s = run.summary;
  s.run_id = run.id;
  s.corpus = run.corpus->name;
  s.phase = std::string(to_string(e.phase()));
  s.t = e.completed_timesteps();
  s.timesteps = e.config().timesteps;
  s.queue_size = e.queue().size();
  s.depleted = e.depleted();
  s.latest_metrics = e.trace().empty() ? std::nullopt : e.trace().back().metrics;
  s.job = run.job;

  run.queue.clear();
  for (const auto& q : e.pending()) {
    const Report& r = e.corpus()[q.index];
    QueueItem item{r.id, r.project, r.title, r.body, q.score, std::nullopt};
    if (text::count_text(r.raw_text).words > 0) item.readability_raw = q.score.readability_raw;
    run.queue.push_back(std::move(item));
  }
  s.queue_pending = run.queue.size();

  run.trace_csv = triage::trace_csv(e.trace_context(), e.trace());
  json rows = json::array();
  for (const auto& r : e.trace()) rows.push_back(triage::to_json(r));
  const auto ctx = e.trace_context();
  run.trace_json = json{{"run_id", run.id},
                        {"strategy", ctx.strategy},
                        {"k", ctx.k},
                        {"s", ctx.s},
                        {"seed", ctx.seed},
                        {"records", std::move(rows)}};
}

std::string RunService::create_run(const json& body) {
  if (!body.is_object()) fail(ErrorCode::validation, "run configuration must be a JSON object");
  std::shared_ptr<const CorpusEntry> corpus;
  {
    std::lock_guard lock(registry_mutex_);
    if (auto it = body.find("corpus"); it != body.end() && !it->is_null()) {
      if (!it->is_string()) fail(ErrorCode::validation, "corpus: must be a corpus name");
      auto found = corpora_.find(it->get<std::string>());
      if (found == corpora_.end()) fail(ErrorCode::validation, "corpus: unknown corpus '" + it->get<std::string>() + "'");
      corpus = found->second;
    } else if (corpora_.size() == 1) {
      corpus = corpora_.begin()->second;
    } else {
      fail(ErrorCode::validation, "corpus: required when more than one corpus is loaded");
    }
  }
  const RunConfig config = RunConfig::from_json(body);

  auto run = std::make_shared<Run>();
  run->corpus = corpus;
  run->engine.emplace(Engine::init_run(corpus->corpus, config));

  {
    std::lock_guard lock(registry_mutex_);
    char id[32];
    std::snprintf(id, sizeof id, "run-%06llu", static_cast<unsigned long long>(next_run_++));
    run->id = id;
  }
  std::filesystem::create_directories(run_dir(run->id));
  write_file_atomic(run_dir(run->id) / "meta.json", json{{"run_id", run->id}, {"corpus", corpus->name}}.dump());
  write_file_atomic(run_dir(run->id) / "annotations.csv", std::string(kAnnotationHeader) + "\n");
  persist(*run);
  refresh_snapshot(*run);
  std::lock_guard lock(registry_mutex_);
  runs_.emplace(run->id, run);
  return run->id;
}

std::vector<std::string> RunService::restore() {
  std::vector<std::string> restored;
  if (!std::filesystem::exists(state_dir_)) return restored;
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(state_dir_))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    json meta;
    try {
      meta = json::parse(read_file(dir / "meta.json"));
    } catch (const json::exception&) {
      fail(ErrorCode::corrupt, "run metadata " + (dir / "meta.json").string() + " is corrupted");
    }
    const std::string run_id = meta.at("run_id").get<std::string>();
    std::shared_ptr<const CorpusEntry> corpus;
    {
      std::lock_guard lock(registry_mutex_);
      if (runs_.count(run_id)) continue;
      auto it = corpora_.find(meta.at("corpus").get<std::string>());
      if (it == corpora_.end()) continue;
      corpus = it->second;
    }
    auto run = std::make_shared<Run>();
    run->id = run_id;
    run->corpus = corpus;
    run->engine.emplace(Engine::load(corpus->corpus, dir / "run.json"));
    const auto rows = csv::parse(read_file(dir / "annotations.csv"));
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() != 9) continue;
      Annotation a;
      a.run_id = row[0];
      a.t = std::stoi(row[1]);
      a.submission.report_id = row[2];
      a.submission.label = parse_label(row[3]).value_or(Label::bug);
      if (auto v = parse_optional_int(row[4])) a.submission.readability_rating = static_cast<int>(*v);
      if (auto v = parse_optional_int(row[5])) a.submission.identifiability_rating = static_cast<int>(*v);
      if (auto v = parse_optional_int(row[6])) a.submission.elapsed_ms = *v;
      a.submission.labeler = row[7];
      a.received_at_ms = std::stoll(row[8]);
      run->annotations.push_back(std::move(a));
    }
    refresh_snapshot(*run);
    std::lock_guard lock(registry_mutex_);
    runs_.emplace(run_id, run);
    restored.push_back(run_id);
  }
  return restored;
}

std::vector<std::string> RunService::run_ids() const {
  std::lock_guard lock(registry_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, run] : runs_) ids.push_back(id);
  return ids;
}

RunSummary RunService::get_run(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  return run->summary;
}

std::vector<QueueItem> RunService::get_queue(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  return run->queue;
}

void RunService::submit_label(const std::string& run_id, const LabelSubmission& submission) {
  submission.validate();
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  if (run->job.state == JobState::running) fail(ErrorCode::conflict, "run is advancing; labels are closed");
  Engine& e = *run->engine;
  if (!e.corpus().find(submission.report_id))
    fail(ErrorCode::not_found, "unknown report id '" + submission.report_id + "'");
  const std::size_t i = e.corpus().index_of(submission.report_id);
  if (e.phase() != Phase::finished && e.pool().membership(i) != Membership::queried)
    fail(ErrorCode::conflict, "report '" + submission.report_id + "' is not in the pending queue");
  e.submit_label(submission.report_id, submission.label);

  Annotation a{run->id, e.completed_timesteps() + 1, submission, now_ms()};
  {
    std::ofstream out(run_dir(run->id) / "annotations.csv", std::ios::app | std::ios::binary);
    out << csv::join(annotation_row(a)) << '\n';
  }
  run->annotations.push_back(std::move(a));
  persist(*run);
  refresh_snapshot(*run);
}

void RunService::correct_label(const std::string& run_id, const std::string& report_id, Label label) {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  if (run->job.state == JobState::running) fail(ErrorCode::conflict, "run is advancing; corrections are closed");
  if (!run->engine->corpus().find(report_id)) fail(ErrorCode::not_found, "unknown report id '" + report_id + "'");
  run->engine->correct_label(report_id, label);
  persist(*run);
  refresh_snapshot(*run);
}

AdvanceJob RunService::advance(const std::string& run_id) {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  if (run->job.state == JobState::running)
    fail(ErrorCode::conflict, "an advance of run '" + run_id + "' is already in flight");
  Engine& e = *run->engine;
  if (e.phase() == Phase::finished) fail(ErrorCode::precondition_failed, "run is finished");
  const auto waiting = e.pending();
  if (!waiting.empty()) {
    std::string ids;
    for (const auto& q : waiting) ids += (ids.empty() ? "" : ",") + q.id;
    fail(ErrorCode::precondition_failed,
         std::to_string(waiting.size()) + " queued reports still need labels: " + ids);
  }
  if (run->worker.joinable()) run->worker.join();

  run->job = AdvanceJob{run->id + "/advance-" + std::to_string(++run->jobs_started), JobState::running, {}, {}, {}};
  run->summary.job = run->job;
  run->worker = std::thread([this, run] {
    std::optional<Error> error;
    int produced = 0;
    try {
      produced = run->engine->advance().t;
    } catch (const Error& ex) {
      error = ex;
    } catch (const std::exception& ex) {
      error = Error(ErrorCode::corrupt, ex.what());
    }
    std::lock_guard lock(run->m);
    if (error) {
      // The engine has rolled itself back; the client may retry.
      run->job.state = JobState::failed;
      run->job.error_code = error->code();
      run->job.error_message = error->what();
    } else {
      run->job.state = JobState::succeeded;
      run->job.produced_t = produced;
    }
    try {
      persist(*run);
    } catch (const std::exception& ex) {
      run->job.state = JobState::failed;
      run->job.error_code = ErrorCode::corrupt;
      run->job.error_message = ex.what();
    }
    refresh_snapshot(*run);
    run->done.notify_all();
  });
  return run->job;
}

AdvanceJob RunService::wait_for_advance(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::unique_lock lock(run->m);
  run->done.wait(lock, [&] { return run->job.state != JobState::running; });
  return run->job;
}

std::string RunService::trace_csv(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  return run->trace_csv;
}

json RunService::trace_json(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  return run->trace_json;
}

std::string RunService::annotations_csv(const std::string& run_id) const {
  auto run = find_run(run_id);
  std::lock_guard lock(run->m);
  return annotations_to_csv(run->annotations);
}

void RunService::flush() {
  std::vector<std::shared_ptr<Run>> runs;
  {
    std::lock_guard lock(registry_mutex_);
    for (auto& [id, run] : runs_) runs.push_back(run);
  }
  for (auto& run : runs) {
    std::lock_guard lock(run->m);
    if (run->job.state != JobState::running) persist(*run);
  }
}

}  // namespace triage::service
