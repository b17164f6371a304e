#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "mock_model_server.hpp"
#include "support.hpp"
#include "triage/engine.hpp"
#include "triage/error.hpp"
#include "triage/rng.hpp"
#include "triage/synthetic.hpp"

using namespace triage;
using testing_support::token_report;

namespace {

ErrorCode code_of(auto&& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::corrupt;
}

const Corpus& synthetic_corpus() {
  static const Corpus c = synthetic::generate({.count = 1200, .seed = 4});
  return c;
}

RunConfig base_config() {
  RunConfig c;
  c.k = 50;
  c.timesteps = 3;
  c.pseudo_s = 1;
  c.test_size = 200;
  c.seed = 9;
  c.record_timing = false;
  return c;
}

// Deterministic backend driven by text hashes. Remembers the last training set
// and can be told to fail embedding calls.
class ProbeBackend final : public ModelBackend {
 public:
  std::vector<TrainingExample> last_training;
  bool fail_embed = false;
  std::uint64_t updates = 0;

  std::string_view kind() const override { return "probe"; }
  UpdateReport update(std::span<const TrainingExample> examples, UpdateMode, std::uint64_t) override {
    last_training.assign(examples.begin(), examples.end());
    return UpdateReport{examples.size(), 0, 0.0, ++updates};
  }
  std::vector<ProbabilityPair> predict(std::span<const std::string_view> texts) const override {
    std::vector<ProbabilityPair> out;
    for (auto t : texts) out.push_back(ProbabilityPair::from_bug(static_cast<double>(fnv1a(t) % 1000) / 1000.0));
    return out;
  }
  std::vector<Embedding> embed(std::span<const std::string_view> texts) const override {
    if (fail_embed) fail(ErrorCode::backend_unavailable, "probe embed failure");
    std::vector<Embedding> out;
    for (auto t : texts) {
      const auto h = fnv1a(t);
      out.push_back({static_cast<double>(h % 97), static_cast<double>((h >> 16) % 89)});
    }
    return out;
  }
  std::size_t embedding_dim() const override { return 2; }
  std::uint64_t version() const override { return updates; }
  bool trained() const override { return true; }
  nlohmann::json save_state() const override { return {{"kind", "probe"}, {"updates", updates}}; }
  void load_state(const nlohmann::json& j) override { updates = j.at("updates").get<std::uint64_t>(); }
};

void label_pending(Engine& e) {
  for (const auto& q : e.pending()) e.submit_label(q.id, *e.corpus()[q.index].oracle_label);
}

}  // namespace

TEST_CASE("config validation names the bad field") {
  std::string msg;
  auto c = base_config();
  c.timesteps = 0;
  CHECK(code_of([&] { c.validate(); }, &msg) == ErrorCode::validation);
  CHECK(msg.find("timesteps") != std::string::npos);
  c = base_config();
  c.k = 0;
  CHECK(code_of([&] { Engine::init_run(synthetic_corpus(), c); }, &msg) == ErrorCode::validation);
  CHECK(msg.rfind("k:", 0) == 0);
  c = base_config();
  c.pseudo_s = -1;
  CHECK(code_of([&] { c.validate(); }, &msg) == ErrorCode::validation);
  CHECK(msg.find("pseudo_s") != std::string::npos);
  c = base_config();
  c.backend.kind = "remote";
  CHECK(code_of([&] { c.validate(); }, &msg) == ErrorCode::validation);
  CHECK(msg.find("endpoint") != std::string::npos);
  c = base_config();
  c.test_size = 1190;
  CHECK(code_of([&] { Engine::init_run(synthetic_corpus(), c); }) == ErrorCode::validation);
}

TEST_CASE("run config survives json") {
  auto c = base_config();
  c.strategy = sampling::Strategy::uncertainty;
  c.start_mode = StartMode::warm;
  c.backend = BackendConfig{"remote", "http://127.0.0.1:9", 32};
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(code_of([] { RunConfig::from_json({{"k", 5}, {"strategy", "bogus"}}); }) == ErrorCode::validation);
  CHECK(code_of([] { RunConfig::from_json({{"k", "five"}}); }) == ErrorCode::validation);
}

TEST_CASE("cold start seeds the labeled pool and queues k reports") {
  auto c = base_config();
  c.initial_label_count = 100;
  const Engine e = Engine::init_run(synthetic_corpus(), c);
  CHECK(e.pool().count(Membership::labeled) == 100);
  CHECK(e.pool().count(Membership::test) == 200);
  CHECK(e.queue().size() == 50);
  CHECK(e.pool().count(Membership::queried) == 50);
  CHECK(e.pool().count(Membership::unlabeled) == 1200 - 200 - 100 - 50);
  CHECK(e.initial_unlabeled() == 900);
  CHECK(e.phase() == Phase::awaiting_labels);
  for (std::size_t i = 1; i < e.queue().size(); ++i)
    CHECK(e.queue()[i - 1].score.aggregate >= e.queue()[i].score.aggregate);
  for (std::size_t i : e.pool().members(Membership::labeled)) CHECK(e.pool().label_state(i).kind == LabelKind::human);
}

TEST_CASE("one timestep removes k queried and k*s pseudo-labeled reports from the unlabeled pool") {
  auto c = base_config();
  c.timesteps = 1;
  Engine e = Engine::init_run(synthetic_corpus(), c);
  const std::size_t du0 = e.initial_unlabeled();
  const auto& r = e.run_timestep_oracle();
  CHECK(r.t == 1);
  CHECK(r.query_count() == 50);
  CHECK(r.pseudo_count() == 50);
  CHECK(r.du_size == du0 - 100);
  CHECK(r.dl_size == 50 + 50 + 50);
  CHECK(e.phase() == Phase::finished);
  CHECK(e.queue().empty());

  c.pseudo_s = 0;
  Engine z = Engine::init_run(synthetic_corpus(), c);
  const auto& rz = z.run_timestep_oracle();
  CHECK(rz.pseudo_count() == 0);
  CHECK(rz.du_size == z.initial_unlabeled() - 50);
}

TEST_CASE("advance is refused while labels are pending") {
  Engine e = Engine::init_run(synthetic_corpus(), base_config());
  const auto q = e.queue();
  for (std::size_t i = 0; i < 47; ++i) e.submit_label(q[i].id, Label::bug);
  CHECK(e.phase() == Phase::awaiting_labels);
  std::string msg;
  CHECK(code_of([&] { e.advance(); }, &msg) == ErrorCode::precondition_failed);
  for (std::size_t i = 47; i < 50; ++i) CHECK(msg.find(q[i].id) != std::string::npos);
  CHECK(msg.find(q[0].id) == std::string::npos);
  CHECK(e.completed_timesteps() == 0);
  for (std::size_t i = 47; i < 50; ++i) e.submit_label(q[i].id, Label::nonbug);
  CHECK(e.phase() == Phase::ready_to_advance);
  e.advance();
  CHECK(e.completed_timesteps() == 1);
}

TEST_CASE("labels must target queued reports exactly once") {
  Engine e = Engine::init_run(synthetic_corpus(), base_config());
  const std::string first = e.queue()[0].id;
  e.submit_label(first, Label::bug);
  CHECK_THROWS_AS(e.submit_label(first, Label::bug), Error);
  const std::size_t unl = e.pool().members(Membership::unlabeled).front();
  CHECK_THROWS_AS(e.submit_label(e.corpus()[unl].id, Label::bug), Error);
  CHECK(code_of([&] { e.submit_label("no-such-report", Label::bug); }) == ErrorCode::not_found);
}

TEST_CASE("a small pool depletes and the run stops early") {
  std::vector<Report> reports;
  for (int i = 0; i < 43; ++i)
    reports.push_back(make_report("d" + std::to_string(100 + i), "p", "word" + std::to_string(i) + " crash",
                                  "body text", i % 2 ? Label::bug : Label::nonbug));
  const Corpus corpus = testing_support::make_corpus(std::move(reports));
  RunConfig c = base_config();
  c.k = 5;
  c.test_size = 5;
  c.timesteps = 10;
  // 43 - 5 test - 5 seed = 33 unlabeled; each step takes 5 queried + 5 pseudo.
  const auto result = Engine::run_simulation(corpus, c, std::make_unique<ProbeBackend>());
  CHECK(result.depleted);
  REQUIRE(result.trace.size() == 4);
  CHECK(result.trace[2].du_size == 3);
  CHECK(result.trace[3].query_count() == 3);
  CHECK(result.trace[3].pseudo_count() == 0);
  CHECK(result.trace[3].du_size == 0);
}

TEST_CASE("simulation is deterministic for a fixed seed") {
  auto c = base_config();
  const auto a = Engine::run_simulation(synthetic_corpus(), c);
  const auto b = Engine::run_simulation(synthetic_corpus(), c);
  CHECK(a.trace == b.trace);
  CHECK(trace_csv({"effort-aware", 50, 1, 9}, a.trace) == trace_csv({"effort-aware", 50, 1, 9}, b.trace));
  c.seed = 10;
  const auto d = Engine::run_simulation(synthetic_corpus(), c);
  CHECK(d.trace[0].queried_ids != a.trace[0].queried_ids);
}

TEST_CASE("every strategy runs to completion") {
  for (auto st : {sampling::Strategy::uncertainty, sampling::Strategy::random, sampling::Strategy::confidence}) {
    auto c = base_config();
    c.strategy = st;
    c.timesteps = 2;
    const auto r = Engine::run_simulation(synthetic_corpus(), c);
    CHECK(r.trace.size() == 2);
    std::set<std::string> seen;
    for (const auto& rec : r.trace)
      for (const auto& id : rec.queried_ids) CHECK(seen.insert(id).second);
  }
}

TEST_CASE("a saved run resumes to the same trace") {
  testing_support::TempDir dir("engine");
  auto c = base_config();
  c.timesteps = 4;
  const auto straight = Engine::run_simulation(synthetic_corpus(), c);

  Engine e = Engine::init_run(synthetic_corpus(), c);
  e.run_timestep_oracle();
  // Stop part way through labeling the second batch.
  const auto q = e.queue();
  for (std::size_t i = 0; i < 20; ++i) e.submit_label(q[i].id, *e.corpus()[q[i].index].oracle_label);
  e.save(dir / "run.json");

  Engine resumed = Engine::load(synthetic_corpus(), dir / "run.json");
  CHECK(resumed.to_json() == e.to_json());
  CHECK(resumed.pending().size() == 30);
  while (resumed.phase() != Phase::finished) resumed.run_timestep_oracle();
  CHECK(resumed.trace() == straight.trace);
}

TEST_CASE("damaged or foreign run files are rejected") {
  testing_support::TempDir dir("engine-bad");
  auto c = base_config();
  c.timesteps = 1;
  Engine e = Engine::init_run(synthetic_corpus(), c);
  e.save(dir / "run.json");
  const std::string text = testing_support::slurp(dir / "run.json");

  testing_support::spit(dir / "truncated.json", text.substr(0, text.size() / 2));
  CHECK(code_of([&] { Engine::load(synthetic_corpus(), dir / "truncated.json"); }) == ErrorCode::corrupt);

  auto j = nlohmann::json::parse(text);
  j["format"] = "triage-run/0";
  testing_support::spit(dir / "old.json", j.dump());
  std::string msg;
  CHECK(code_of([&] { Engine::load(synthetic_corpus(), dir / "old.json"); }, &msg) == ErrorCode::config);
  CHECK(msg.find("triage-run/0") != std::string::npos);

  auto missing = nlohmann::json::parse(text);
  missing.erase("pool");
  testing_support::spit(dir / "missing.json", missing.dump());
  CHECK(code_of([&] { Engine::load(synthetic_corpus(), dir / "missing.json"); }) == ErrorCode::corrupt);

  const Corpus other = synthetic::generate({.count = 1200, .seed = 5});
  CHECK(code_of([&] { Engine::load(other, dir / "run.json"); }) == ErrorCode::validation);
  CHECK(code_of([&] { Engine::load(synthetic_corpus(), dir / "absent.json"); }) == ErrorCode::not_found);
}

TEST_CASE("corrections feed the next update") {
  auto c = base_config();
  c.timesteps = 3;
  auto owned = std::make_unique<ProbeBackend>();
  ProbeBackend* probe = owned.get();
  Engine e = Engine::init_run(synthetic_corpus(), c, std::move(owned));
  e.run_timestep_oracle();
  const auto& first = e.trace().back();
  const std::string human = first.queried_ids.front();
  const std::string pseudo_target = first.assignments.front().target_id;
  const Label human_label = *e.pool().label_state(e.corpus().index_of(human)).label;
  const Label flipped = human_label == Label::bug ? Label::nonbug : Label::bug;
  e.correct_label(human, flipped);
  e.correct_label(pseudo_target, Label::bug);

  REQUIRE(e.corrections().size() == 2);
  CHECK(e.corrections()[0].before == LabelState::human(human_label));
  CHECK(e.corrections()[0].t == 1);
  CHECK(e.corrections()[1].before.kind == LabelKind::pseudo);
  CHECK(e.pool().label_state(e.corpus().index_of(human)) == LabelState::corrected(flipped));

  e.run_timestep_oracle();
  bool saw = false;
  for (const auto& ex : probe->last_training)
    if (ex.report_id == human) {
      saw = true;
      CHECK(ex.label == flipped);
      CHECK(ex.provenance == LabelKind::corrected);
    }
  CHECK(saw);

  // Only labeled reports can be corrected.
  const std::size_t unl = e.pool().members(Membership::unlabeled).front();
  CHECK_THROWS_AS(e.correct_label(e.corpus()[unl].id, Label::bug), Error);
}

TEST_CASE("pool invariants hold after every phase") {
  std::vector<std::string> phases;
  auto c = base_config();
  c.timesteps = 2;
  Engine::run_simulation(synthetic_corpus(), c, nullptr, [&](std::string_view phase, const Pool& pool) {
    phases.emplace_back(phase);
    CHECK_NOTHROW(pool.check_invariants());
    CHECK(pool.count(Membership::unlabeled) + pool.count(Membership::queried) + pool.count(Membership::labeled) +
              pool.count(Membership::test) ==
          pool.corpus().size());
  });
  CHECK(phases.front() == "init");
  CHECK(std::count(phases.begin(), phases.end(), "pseudo-label") == 2);
  CHECK(std::count(phases.begin(), phases.end(), "final-update") == 2);
  CHECK(std::count(phases.begin(), phases.end(), "label") == 100);
}

TEST_CASE("a failed advance leaves the run unchanged") {
  auto c = base_config();
  auto owned = std::make_unique<ProbeBackend>();
  ProbeBackend* probe = owned.get();
  Engine e = Engine::init_run(synthetic_corpus(), c, std::move(owned));
  label_pending(e);
  const auto before = e.to_json();
  probe->fail_embed = true;  // the intermediate update succeeds, pseudo-labeling fails
  CHECK(code_of([&] { e.advance(); }) == ErrorCode::backend_unavailable);
  CHECK(e.to_json() == before);
  CHECK(e.phase() == Phase::ready_to_advance);
  probe->fail_embed = false;
  e.advance();
  CHECK(e.completed_timesteps() == 1);
}

TEST_CASE("remote backend runs, persists and rolls back") {
  testing_support::MockModelServer mock;
  auto c = base_config();
  c.backend = BackendConfig{"remote", mock.url(), 768};
  c.timesteps = 2;
  Engine e = Engine::init_run(synthetic_corpus(), c);
  CHECK(e.backend().kind() == "remote");
  e.run_timestep_oracle();
  const auto state = e.to_json();
  CHECK(state.at("backend").at("kind") == "remote");
  CHECK(state.at("backend").at("endpoint") == mock.url());
  CHECK(state.at("backend").at("version").get<std::uint64_t>() == e.backend().version());
  CHECK(e.backend().version() > 0);

  label_pending(e);
  const auto before = e.to_json();
  mock.fail_status = 503;
  CHECK(code_of([&] { e.advance(); }) == ErrorCode::backend_unavailable);
  CHECK(e.to_json() == before);
  mock.fail_status = 0;
  e.advance();
  CHECK(e.phase() == Phase::finished);
}

TEST_CASE("evaluate scores predictions against oracle labels") {
  const Corpus corpus = testing_support::make_corpus({token_report("a", "alpha", Label::bug),
                                                      token_report("b", "bravo", Label::bug),
                                                      token_report("c", "charlie", Label::nonbug),
                                                      token_report("d", "delta", Label::nonbug),
                                                      token_report("e", "echo", Label::nonbug)});
  testing_support::ScriptedBackend backend;
  backend.p_bug = {{"alpha", 0.9}, {"bravo", 0.2}, {"charlie", 0.7}, {"delta", 0.1}, {"echo", 0.3}};
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  const auto m = evaluate(backend, corpus, all);
  CHECK(m.precision == doctest::Approx(0.5));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(0.5));
  const std::vector<std::size_t> none;
  CHECK(code_of([&] { evaluate(backend, corpus, none); }) == ErrorCode::degenerate);
}

TEST_CASE("the classifier improves over the run") {
  auto c = base_config();
  c.timesteps = 10;
  c.k = 20;
  c.test_size = 300;
  const auto r = Engine::run_simulation(synthetic_corpus(), c);
  REQUIRE(r.trace.size() == 10);
  REQUIRE(r.trace.front().metrics);
  REQUIRE(r.trace.back().metrics);
  MESSAGE("f1 t=1 " << r.trace.front().metrics->f1 << "  t=10 " << r.trace.back().metrics->f1);
  CHECK(r.trace.back().metrics->f1 > r.trace.front().metrics->f1);
}
