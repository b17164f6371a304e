#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "mock_model_server.hpp"
#include "support.hpp"
#include "triage/builtin_backend.hpp"
#include "triage/error.hpp"
#include "triage/remote_backend.hpp"

using namespace triage;
using testing_support::MockModelServer;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::corrupt;
}

// 20 documents; bug exactly when "crash" appears.
std::vector<TrainingExample> toy_set() {
  const std::vector<std::string> filler = {"window", "menu", "save", "theme", "button", "login", "export", "scroll"};
  std::vector<TrainingExample> out;
  for (int i = 0; i < 20; ++i) {
    std::string text = filler[i % 8] + " " + filler[(i * 3 + 1) % 8];
    const bool bug = i % 2 == 0;
    if (bug) text += " crash";
    out.push_back({"d" + std::to_string(i), text, bug ? Label::bug : Label::nonbug, LabelKind::human});
  }
  return out;
}

std::vector<std::string_view> texts_of(const std::vector<TrainingExample>& ex) {
  std::vector<std::string_view> out;
  for (const auto& e : ex) out.push_back(e.text);
  return out;
}

// Independent reference: dense bag-of-words logistic regression over the exact
// vocabulary, fit by full-batch gradient descent.
struct DenseLogistic {
  std::map<std::string, std::size_t> vocab;
  std::vector<double> w;
  double b = 0.0;

  std::vector<double> features(const std::string& text) {
    std::vector<double> x(vocab.size(), 0.0);
    std::istringstream in(text);
    for (std::string tok; in >> tok;)
      if (auto it = vocab.find(tok); it != vocab.end()) x[it->second] += 1.0;
    return x;
  }

  void fit(const std::vector<TrainingExample>& ex) {
    for (const auto& e : ex) {
      std::istringstream in(e.text);
      for (std::string tok; in >> tok;) vocab.emplace(tok, vocab.size());
    }
    w.assign(vocab.size(), 0.0);
    std::vector<std::vector<double>> xs;
    for (const auto& e : ex) xs.push_back(features(e.text));
    for (int it = 0; it < 2000; ++it) {
      std::vector<double> gw(w.size(), 0.0);
      double gb = 0.0;
      for (std::size_t i = 0; i < ex.size(); ++i) {
        double z = b;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * xs[i][j];
        const double err = 1.0 / (1.0 + std::exp(-z)) - (ex[i].label == Label::bug ? 1.0 : 0.0);
        for (std::size_t j = 0; j < w.size(); ++j) gw[j] += err * xs[i][j];
        gb += err;
      }
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= 0.5 * gw[j] / ex.size();
      b -= 0.5 * gb / ex.size();
    }
  }

  Label predict(const std::string& text) {
    const auto x = features(text);
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * x[j];
    return z >= 0.0 ? Label::bug : Label::nonbug;
  }
};

}  // namespace

TEST_CASE("cold update separates the toy set") {
  const auto ex = toy_set();
  BuiltinBackend b;
  b.update(ex, UpdateMode::cold, 11);
  const auto probs = b.predict(texts_of(ex));
  for (std::size_t i = 0; i < ex.size(); ++i) CHECK(probs[i].argmax() == ex[i].label);
  CHECK(b.predict_one("crash crash crash").p_bug > 0.5);
}

TEST_CASE("builtin predictions agree with a dense reference fit") {
  const auto ex = toy_set();
  BuiltinBackend b;
  b.update(ex, UpdateMode::cold, 5);
  DenseLogistic ref;
  ref.fit(ex);
  for (const auto& e : ex) CHECK(b.predict_one(e.text).argmax() == ref.predict(e.text));
}

TEST_CASE("updates are deterministic per seed") {
  const auto ex = toy_set();
  BuiltinBackend a, b;
  a.update(ex, UpdateMode::cold, 3);
  b.update(ex, UpdateMode::cold, 3);
  for (const char* probe : {"crash", "menu save", "", "unknown words here"}) {
    CHECK(a.predict_one(probe).p_bug == b.predict_one(probe).p_bug);
  }
  BuiltinBackend c;
  c.update(ex, UpdateMode::cold, 4);
  CHECK(a.predict_one("menu crash").p_bug != c.predict_one("menu crash").p_bug);
}

TEST_CASE("update preconditions") {
  auto ex = toy_set();
  BuiltinBackend b;
  CHECK(code_of([&] { b.predict_one("x"); }) == ErrorCode::precondition_failed);
  std::vector<TrainingExample> bugs;
  for (const auto& e : ex)
    if (e.label == Label::bug) bugs.push_back(e);
  CHECK(code_of([&] { b.update(bugs, UpdateMode::cold, 1); }) == ErrorCode::validation);
  CHECK(code_of([&] { b.update({}, UpdateMode::cold, 1); }) == ErrorCode::validation);
}

TEST_CASE("probability pairs are normalized; empty text is the bias-only output") {
  const auto ex = toy_set();
  BuiltinBackend b;
  b.update(ex, UpdateMode::cold, 2);
  for (const char* probe : {"crash", "menu", "", "x y z", "crash menu theme"}) {
    const auto p = b.predict_one(probe);
    CHECK(std::abs(p.p_bug + p.p_nonbug - 1.0) < 1e-9);
    CHECK(p.p_bug >= 0.0);
    CHECK(p.p_bug <= 1.0);
  }
  CHECK(b.predict_one("").p_bug == doctest::Approx(features::sigmoid(b.model().bias)).epsilon(1e-15));
}

TEST_CASE("ties classify as bug") {
  CHECK(ProbabilityPair{0.5, 0.5}.argmax() == Label::bug);
  CHECK(ProbabilityPair::from_bug(0.49).argmax() == Label::nonbug);
}

TEST_CASE("warm update on nothing changes nothing; warm continues from current weights") {
  const auto ex = toy_set();
  BuiltinBackend b;
  b.update(ex, UpdateMode::cold, 2);
  const double before = b.predict_one("menu crash").p_bug;
  b.update({}, UpdateMode::warm, 9);
  CHECK(b.predict_one("menu crash").p_bug == before);
  b.update(ex, UpdateMode::warm, 9);
  BuiltinBackend fresh;
  fresh.update(ex, UpdateMode::cold, 9);
  CHECK(b.predict_one("menu crash").p_bug != fresh.predict_one("menu crash").p_bug);
}

TEST_CASE("embeddings are deterministic unit vectors of fixed width") {
  BuiltinBackend b;
  const auto e1 = b.embed_one("null pointer crash");
  const auto e2 = b.embed_one("null pointer crash");
  CHECK(e1 == e2);
  CHECK(e1.size() == 256);
  CHECK(b.embedding_dim() == 256);
  double norm = 0.0;
  for (double v : e1) norm += v * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);
  const auto zero = b.embed_one("");
  CHECK(zero == Embedding(256, 0.0));
}

TEST_CASE("saved state restores identical predictions") {
  const auto ex = toy_set();
  BuiltinBackend b;
  b.update(ex, UpdateMode::cold, 2);
  BuiltinBackend c;
  c.load_state(nlohmann::json::parse(b.save_state().dump()));
  CHECK(c.version() == b.version());
  for (const char* probe : {"crash", "menu save", "", "theme export crash"})
    CHECK(c.predict_one(probe).p_bug == b.predict_one(probe).p_bug);
  CHECK(code_of([&] { c.load_state(nlohmann::json{{"kind", "remote"}}); }) == ErrorCode::corrupt);
}

TEST_CASE("validation holdout is reported") {
  auto ex = toy_set();
  BuiltinBackend b(BuiltinOptions{.validation_fraction = 0.2});
  const auto report = b.update(ex, UpdateMode::cold, 1);
  CHECK(report.validated_on == 4);
  CHECK(report.trained_on == 16);
  CHECK(report.validation_accuracy >= 0.0);
  CHECK(report.validation_accuracy <= 1.0);
}

// ---------------------------------------------------------------------------
// Remote backend against an in-process mock server.


TEST_CASE("remote backend speaks the wire protocol") {
  MockModelServer mock;
  RemoteBackend b(mock.url(), 768);
  CHECK(b.trained());
  const auto ex = toy_set();
  const auto r1 = b.update(ex, UpdateMode::cold, 1);
  const auto r2 = b.update(ex, UpdateMode::warm, 2);
  CHECK(r2.version > r1.version);
  CHECK(b.version() == r2.version);
  const auto p = b.predict_one("a crash");
  CHECK(p.p_bug == doctest::Approx(0.9));
  const auto e = b.embed_one("abc");
  CHECK(e.size() == 768);
  CHECK(e[0] == 3.0);
}

TEST_CASE("remote embedding dimension mismatch is a configuration error") {
  MockModelServer mock;
  mock.embed_dim = 512;
  RemoteBackend b(mock.url(), 768);
  CHECK(code_of([&] { b.embed_one("x"); }) == ErrorCode::config);
}

TEST_CASE("remote transport failures are retryable") {
  RemoteBackend b("http://127.0.0.1:" + std::to_string(testing_support::free_port()), 768,
                  std::chrono::milliseconds(500));
  CHECK(code_of([&] { b.predict_one("x"); }) == ErrorCode::backend_unavailable);
  CHECK(code_of([&] { b.embed_one("x"); }) == ErrorCode::backend_unavailable);
  CHECK(b.version() == 0);

  MockModelServer mock;
  mock.fail_status = 503;
  RemoteBackend c(mock.url(), 768);
  CHECK(code_of([&] { c.update(toy_set(), UpdateMode::warm, 1); }) == ErrorCode::backend_unavailable);
  CHECK(c.version() == 0);
  mock.fail_status = 400;
  CHECK(code_of([&] { c.predict_one("x"); }) == ErrorCode::config);
  mock.fail_status = 0;
  mock.malformed = true;
  CHECK(code_of([&] { c.predict_one("x"); }) == ErrorCode::corrupt);
}

TEST_CASE("remote state records version, not weights") {
  MockModelServer mock;
  RemoteBackend b(mock.url(), 768);
  b.update(toy_set(), UpdateMode::warm, 1);
  const auto state = b.save_state();
  CHECK(state.at("version").get<std::uint64_t>() == b.version());
  CHECK_FALSE(state.contains("weights"));
  RemoteBackend c(mock.url(), 768);
  c.load_state(state);
  CHECK(c.version() == b.version());
}
