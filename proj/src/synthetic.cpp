#include "triage/synthetic.hpp"

#include <array>
#include <cstdio>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "triage/lexicon.hpp"
#include "triage/rng.hpp"

namespace triage::synthetic {

namespace {

using Words = std::span<const std::string_view>;

constexpr std::array<std::string_view, 32> kBugWords = {
    "stacktrace", "null",     "pointer",  "exception", "segfault", "freeze",    "hang",      "broken",
    "regression", "panic",    "corrupt",  "leak",      "timeout",  "wrong",     "incorrect", "throws",
    "deadlock",   "overflow", "nan",      "stuck",     "garbled",  "truncated", "missing",   "blank",
    "flaky",      "assert",   "abort",    "traceback", "invalid",  "glitch",    "lost",      "duplicate"};

constexpr std::array<std::string_view, 32> kFeatureWords = {
    "enhancement", "proposal",   "option",   "plugin",     "theme",    "dark",     "mode",     "roadmap",
    "suggestion",  "configurable", "integration", "idea",  "allow",    "export",   "customize", "shortcut",
    "extension",   "wishlist",   "optional", "preference", "new",      "nicer",    "api",      "polish",
    "tutorial",    "example",    "guide",    "translate",  "localize", "template", "widget",   "toggle"};

constexpr std::array<std::string_view, 24> kPlainWords = {
    "app", "page", "tab", "menu", "file", "list", "view", "save", "open", "load", "click", "form",
    "log", "row",  "key", "box",  "text", "icon", "user", "time", "run",  "step", "task", "map"};

constexpr std::array<std::string_view, 24> kDenseWords = {
    "configuration",  "initialization", "synchronization", "asynchronous",   "serialization", "infrastructure",
    "authentication", "compatibility",  "dependencies",    "visualization",  "optimization",  "interoperability",
    "representation", "parallelization", "virtualization", "instantiation",  "persistence",   "orchestration",
    "internationalization", "deterministic", "heterogeneous", "transactional", "repository",  "architecture"};

constexpr std::array<std::string_view, 8> kProjects = {"atlas", "beacon", "cinder", "delta",
                                                       "ember", "fjord",  "grove",  "harbor"};

std::string_view pick(Rng& rng, Words words) { return words[rng.below(words.size())]; }

struct Style {
  Words filler;
  std::size_t min_len, max_len;  // words per sentence
  std::size_t min_sentences, max_sentences;
};

std::string make_sentence(Rng& rng, const Style& style, Words topic, Words keywords, double keyword_rate,
                          Words leak, double leak_rate) {
  const std::size_t n = style.min_len + rng.below(style.max_len - style.min_len + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string_view w;
    const double u = rng.uniform();
    if (u < keyword_rate) w = pick(rng, keywords);
    else if (u < keyword_rate + leak_rate) w = pick(rng, leak);
    else if (u < keyword_rate + leak_rate + 0.35) w = pick(rng, topic);
    else w = pick(rng, style.filler);
    if (!out.empty()) out += ' ';
    out += w;
  }
  if (!out.empty()) out[0] = static_cast<char>(out[0] - 'a' + 'A');
  out += '.';
  return out;
}

}  // namespace

Corpus generate(const Options& options) {
  Rng rng(derive_seed(options.seed, "synthetic"));
  const Style plain{kPlainWords, 4, 8, 2, 5};
  const Style dense{kDenseWords, 12, 22, 1, 3};
  const Words relevant = lexicon::relevant_terms();
  const Words irrelevant = lexicon::irrelevant_terms();
  constexpr std::array<double, 4> kKeywordRates = {0.0, 0.04, 0.10, 0.20};

  std::vector<Report> reports;
  reports.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    const bool bug = rng.bernoulli(options.bug_fraction);
    const Style& style = rng.bernoulli(0.5) ? plain : dense;
    const double keyword_rate = kKeywordRates[rng.below(kKeywordRates.size())];
    const bool leaks = rng.bernoulli(options.keyword_leak);
    const Words topic = bug ? Words(kBugWords) : Words(kFeatureWords);
    const Words keywords = bug ? relevant : irrelevant;
    const Words other = bug ? irrelevant : relevant;
    const double leak_rate = leaks ? 0.08 : 0.0;

    std::string title;
    for (int w = 0; w < 3; ++w) title += std::string(w ? " " : "") + std::string(pick(rng, topic));
    title += ' ';
    title += pick(rng, style.filler);
    title[0] = static_cast<char>(title[0] - 'a' + 'A');

    std::string body;
    const std::size_t sentences =
        style.min_sentences + rng.below(style.max_sentences - style.min_sentences + 1);
    for (std::size_t s = 0; s < sentences; ++s) {
      if (!body.empty()) body += ' ';
      body += make_sentence(rng, style, topic, keywords, keyword_rate, other, leak_rate);
    }

    Label label = bug ? Label::bug : Label::nonbug;
    if (rng.bernoulli(options.label_noise)) label = bug ? Label::nonbug : Label::bug;

    char id[16];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    reports.push_back(make_report(id, std::string(pick(rng, kProjects)), std::move(title), std::move(body), label));
  }
  return Corpus(std::move(reports), "synthetic");
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const Report& r : corpus.reports()) {
    nlohmann::json row{{"id", r.id}, {"project", r.project}, {"title", r.title}, {"body", r.body}};
    row["label"] = r.oracle_label ? std::string(to_string(*r.oracle_label)) : std::string();
    out += row.dump();
    out += '\n';
  }
  return out;
}

}  // namespace triage::synthetic
