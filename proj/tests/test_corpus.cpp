#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "support.hpp"
#include "triage/csv.hpp"
#include "triage/error.hpp"

using namespace triage;
using namespace testing_support;

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

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

Corpus numbered(std::size_t n) {
  std::vector<Report> reports;
  for (std::size_t i = 0; i < n; ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "r%03zu", i);
    reports.push_back(token_report(id, "tok" + std::to_string(i), i % 2 ? Label::bug : Label::nonbug));
  }
  return make_corpus(std::move(reports));
}

}  // namespace

TEST_CASE("preprocess fixtures") {
  CHECK(preprocess("<b>Bug!</b> The APP crashes") == "bug app crashes");
  CHECK(preprocess("") == "");
  CHECK(preprocess("crash crash") == "crash crash");
  CHECK(preprocess("Null-pointer   in <code>main()</code>,\ttwice") == "null pointer main twice");
  CHECK(preprocess("```\nint x = 1;\n```") == "int x 1");
  CHECK(preprocess("a < b and c > zed") == "b c zed");
}

TEST_CASE("preprocess is idempotent") {
  for (const char* t : {"<b>Bug!</b> The APP crashes", "It's THE end.", "x<y>z", "<<nested>>", "ümlaut Café", "<!-- c -->ok"}) {
    const auto once = preprocess(t);
    CHECK(preprocess(once) == once);
  }
}

TEST_CASE("jsonl dataset with labels") {
  const std::string jsonl =
      R"({"id":"1","title":"Crash","body":"boom","label":"bug"})"
      "\n"
      R"({"id":"2","project":"p","title":"Crash 2","body":"boom","label":"bug"})"
      "\n"
      R"({"id":"3","title":"Idea","body":"add it","label":"nonbug"})"
      "\n";
  const Corpus c = parse_dataset(jsonl, DatasetFormat::jsonl, "mem");
  CHECK(c.manifest().report_count == 3);
  CHECK(c.manifest().bug_count == 2);
  CHECK(c.manifest().nonbug_count == 1);
  CHECK(c[0].raw_text == "Crash\nboom");
  CHECK(c[0].model_text == "crash boom");
  CHECK(c[1].project == "p");
  CHECK(c.index_of("3") == 2);
}

TEST_CASE("empty and unlabeled inputs") {
  const Corpus c = parse_dataset("", DatasetFormat::jsonl);
  CHECK(c.empty());
  CHECK(c.manifest().report_count == 0);
  const Corpus u = parse_dataset(R"({"id":"a","title":"t","body":"b","label":""})", DatasetFormat::jsonl);
  CHECK(u.manifest().report_count == 1);
  CHECK(u.manifest().bug_count + u.manifest().nonbug_count == 0);
  CHECK_FALSE(u.all_oracle_labeled());
}

TEST_CASE("dataset errors name the problem") {
  const std::string dup = R"({"id":"42","title":"a","body":"b"})"
                          "\n"
                          R"({"id":"42","title":"c","body":"d"})";
  CHECK(code_of([&] { parse_dataset(dup, DatasetFormat::jsonl); }) == ErrorCode::validation);
  CHECK(message_of([&] { parse_dataset(dup, DatasetFormat::jsonl); }).find("42") != std::string::npos);

  const std::string missing = R"({"id":"1","title":"a","body":"b"})"
                              "\n"
                              R"({"id":"2","body":"d"})";
  const auto msg = message_of([&] { parse_dataset(missing, DatasetFormat::jsonl); });
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("title") != std::string::npos);

  const std::string bad_label = R"({"id":"1","title":"a","body":"b","label":"maybe"})";
  CHECK(code_of([&] { parse_dataset(bad_label, DatasetFormat::jsonl); }) == ErrorCode::validation);
  CHECK(code_of([&] { parse_dataset("{not json", DatasetFormat::jsonl); }) == ErrorCode::validation);
}

TEST_CASE("csv dataset with quoting") {
  const std::string text =
      "id,project,title,body,label\r\n"
      "1,p,\"Crash, again\",\"line one\nline \"\"two\"\"\",bug\r\n"
      "2,p,Idea,more,nonbug\r\n"
      "3,p,Open,question,\r\n";
  const Corpus c = parse_dataset(text, DatasetFormat::csv);
  REQUIRE(c.size() == 3);
  CHECK(c[0].title == "Crash, again");
  CHECK(c[0].body == "line one\nline \"two\"");
  CHECK(c.manifest().bug_count == 1);
  CHECK(c.manifest().nonbug_count == 1);
  CHECK_FALSE(c[2].oracle_label.has_value());

  const auto msg = message_of([] { parse_dataset("id,title\n1,x\n", DatasetFormat::csv); });
  CHECK(msg.find("body") != std::string::npos);
}

TEST_CASE("csv escaping round-trips") {
  const csv::Row row{"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  const auto parsed = csv::parse(csv::join(row) + "\n");
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == row);
}

TEST_CASE("persisted corpus round-trips reports and label states") {
  TempDir dir("corpus");
  const Corpus c = numbered(5);
  std::vector<LabelState> states(5);
  states[1] = LabelState::human(Label::bug);
  states[2] = LabelState::pseudo(Label::nonbug, "r001");
  states[3] = LabelState::corrected(Label::nonbug);
  save_corpus(dir / "c.json", c, states);
  const auto loaded = load_corpus(dir / "c.json");
  REQUIRE(loaded.corpus.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(loaded.corpus[i].id == c[i].id);
    CHECK(loaded.corpus[i].raw_text == c[i].raw_text);
    CHECK(loaded.corpus[i].model_text == c[i].model_text);
    CHECK(loaded.corpus[i].oracle_label == c[i].oracle_label);
    CHECK(loaded.label_states[i] == states[i]);
  }
  CHECK(loaded.corpus.fingerprint() == c.fingerprint());

  spit(dir / "bad.json", slurp(dir / "c.json").substr(0, 40));
  CHECK(code_of([&] { load_corpus(dir / "bad.json"); }) == ErrorCode::corrupt);
}

TEST_CASE("init_partition draws a seeded test set") {
  const Corpus c = numbered(100);
  const Pool p = Pool::init_partition(c, 20, 7);
  const auto part = p.partition();
  CHECK(part.test.size() == 20);
  CHECK(part.unlabeled.size() == 80);
  CHECK(part.labeled.empty());
  CHECK(part.queried.empty());
  std::set<std::string> all(part.test.begin(), part.test.end());
  all.insert(part.unlabeled.begin(), part.unlabeled.end());
  CHECK(all.size() == 100);
  CHECK(Pool::init_partition(c, 20, 7).partition().test == part.test);
  CHECK(Pool::init_partition(c, 20, 8).partition().test != part.test);

  CHECK(Pool::init_partition(c, 0, 7).count(Membership::unlabeled) == 100);
  CHECK(code_of([&] { Pool::init_partition(c, 101, 7); }) == ErrorCode::validation);

  const std::vector<std::string> ids{"r003", "r050"};
  const Pool explicit_pool = Pool::init_partition(c, ids);
  CHECK(explicit_pool.partition().test == ids);
}

TEST_CASE("oracle labels are required on test reports when asked") {
  std::vector<Report> rs{token_report("a", "x", std::nullopt), token_report("b", "y", Label::bug)};
  const Corpus c = make_corpus(std::move(rs));
  CHECK(code_of([&] { Pool::init_partition(c, 2, 1, true); }) == ErrorCode::validation);
  CHECK_NOTHROW(Pool::init_partition(c, 2, 1, false));
}

TEST_CASE("label lifecycle moves") {
  const Corpus c = numbered(4);  // r000..r003
  Pool p(c);
  p.mark_queried(0);
  p.mark_queried(1);
  p.apply_human_label("r000", Label::bug);
  auto part = p.partition();
  CHECK(part.labeled == std::vector<std::string>{"r000"});
  CHECK(part.queried == std::vector<std::string>{"r001"});
  CHECK(p.label_state(0) == LabelState::human(Label::bug));

  CHECK(code_of([&] { p.apply_human_label("r002", Label::bug); }) == ErrorCode::conflict);
  CHECK(code_of([&] { p.apply_human_label("r000", Label::nonbug); }) == ErrorCode::conflict);
  CHECK(code_of([&] { p.apply_human_label("zzz", Label::nonbug); }) == ErrorCode::not_found);

  p.apply_pseudo_label(2, Label::bug, "r000");
  CHECK(p.label_state(2) == LabelState::pseudo(Label::bug, "r000"));
  p.correct_label("r002", Label::nonbug);
  CHECK(p.label_state(2) == LabelState::corrected(Label::nonbug));
  CHECK(p.membership(2) == Membership::labeled);
  p.correct_label("r002", Label::nonbug);
  CHECK(p.label_state(2) == LabelState::corrected(Label::nonbug));
  CHECK(code_of([&] { p.correct_label("r003", Label::bug); }) == ErrorCode::conflict);
  CHECK_NOTHROW(p.check_invariants());
  CHECK(p.count(Membership::labeled) + p.count(Membership::unlabeled) + p.count(Membership::queried) == 4);
}

TEST_CASE("pool state survives a json round trip") {
  const Corpus c = numbered(6);
  Pool p = Pool::init_partition(c, 2, 3);
  const auto un = p.members(Membership::unlabeled);
  p.seed_label(un[0], Label::bug);
  p.mark_queried(un[1]);
  p.apply_pseudo_label(un[2], Label::nonbug, c[un[0]].id);
  const Pool q = Pool::from_json(c, p.to_json());
  CHECK(q.partition().labeled == p.partition().labeled);
  CHECK(q.partition().queried == p.partition().queried);
  CHECK(q.partition().test == p.partition().test);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(q.label_state(i) == p.label_state(i));
}
