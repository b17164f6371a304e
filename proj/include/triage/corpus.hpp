#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace triage {

enum class Label : std::uint8_t { bug, nonbug };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view s);  // "bug" | "nonbug"; anything else is empty

enum class LabelKind : std::uint8_t { unlabeled, human, pseudo, corrected };

std::string_view to_string(LabelKind kind);

struct LabelState {
  LabelKind kind = LabelKind::unlabeled;
  std::optional<Label> label;
  std::string source_id;  // pseudo only: the human-labeled report the label was copied from

  static LabelState human(Label l) { return {LabelKind::human, l, {}}; }
  static LabelState pseudo(Label l, std::string source) { return {LabelKind::pseudo, l, std::move(source)}; }
  static LabelState corrected(Label l) { return {LabelKind::corrected, l, {}}; }

  friend bool operator==(const LabelState&, const LabelState&) = default;
};

struct Report {
  std::string id;
  std::string project;
  std::string title;
  std::string body;
  std::string raw_text;    // title + '\n' + body, never mutated
  std::string model_text;  // preprocess(raw_text)
  std::optional<Label> oracle_label;
};

struct DatasetManifest {
  std::string source_path;
  std::size_t report_count = 0;
  std::size_t bug_count = 0;
  std::size_t nonbug_count = 0;
};

enum class DatasetFormat { jsonl, csv };

std::optional<DatasetFormat> parse_format(std::string_view s);

// HTML tags stripped, non-alphanumerics replaced by spaces, lowercased, stop
// words dropped, tokens joined by single spaces. Bytes >= 0x80 are kept as word
// characters so UTF-8 text survives. Idempotent.
std::string preprocess(std::string_view raw_text);

// Fills raw_text and model_text from title and body.
Report make_report(std::string id, std::string project, std::string title, std::string body,
                   std::optional<Label> label);

// Immutable collection of reports with id lookup.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Report> reports, std::string source_path);

  std::size_t size() const { return reports_.size(); }
  bool empty() const { return reports_.empty(); }
  const Report& operator[](std::size_t i) const { return reports_[i]; }
  std::span<const Report> reports() const { return reports_; }
  const DatasetManifest& manifest() const { return manifest_; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws Error{not_found}

  bool all_oracle_labeled() const;

  // Stable hash over ids and raw texts, used to bind persisted runs to a corpus.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Report> reports_;
  std::unordered_map<std::string, std::size_t> index_;
  DatasetManifest manifest_;
};

// Parse a dataset. Rows need id, title and body; project and label are optional.
// Errors name the offending row (1-based) and field, or the duplicate id.
Corpus parse_dataset(std::string_view content, DatasetFormat format, std::string source_name = {});
Corpus load_dataset(const std::filesystem::path& path, DatasetFormat format);

// Self-describing persisted corpus: reports plus label states.
inline constexpr std::string_view kCorpusFormatTag = "triage-corpus/1";

struct PersistedCorpus {
  Corpus corpus;
  std::vector<LabelState> label_states;
};

nlohmann::json corpus_to_json(const Corpus& corpus, std::span<const LabelState> label_states = {});
PersistedCorpus corpus_from_json(const nlohmann::json& j);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus,
                 std::span<const LabelState> label_states = {});
PersistedCorpus load_corpus(const std::filesystem::path& path);

// Which pool a report currently sits in.
enum class Membership : std::uint8_t { unlabeled, queried, labeled, test };

std::string_view to_string(Membership m);

// D_l, D_u, D_q and the held-out test set, as sorted id lists.
struct PoolPartition {
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
  std::vector<std::string> queried;
  std::vector<std::string> test;
};

// Per-run label lifecycle over a corpus. One membership slot per report keeps
// the four pools disjoint and total; check_invariants() audits label states
// against membership.
class Pool {
 public:
  explicit Pool(const Corpus& corpus);

  // Seeded uniform test draw. With require_oracle, every test report must carry
  // an oracle label.
  static Pool init_partition(const Corpus& corpus, std::size_t test_size, std::uint64_t seed,
                             bool require_oracle = false);
  static Pool init_partition(const Corpus& corpus, std::span<const std::string> test_ids,
                             bool require_oracle = false);

  const Corpus& corpus() const { return *corpus_; }

  Membership membership(std::size_t i) const { return membership_[i]; }
  const LabelState& label_state(std::size_t i) const { return labels_[i]; }
  std::span<const LabelState> label_states() const { return labels_; }
  std::size_t count(Membership m) const { return counts_[static_cast<std::size_t>(m)]; }
  std::vector<std::size_t> members(Membership m) const;  // ascending index

  PoolPartition partition() const;

  // unlabeled -> queried
  void mark_queried(std::size_t i);
  // unlabeled -> labeled with human provenance (initial seed set).
  void seed_label(std::size_t i, Label label);
  // queried -> labeled
  void apply_human_label(std::string_view id, Label label);
  void apply_human_label(std::size_t i, Label label);
  // unlabeled -> labeled with pseudo provenance
  void apply_pseudo_label(std::size_t i, Label label, std::string source_id);
  // labeled stays labeled; state becomes corrected(label)
  void correct_label(std::string_view id, Label label);

  // Throws Error{corrupt} describing the first violation.
  void check_invariants() const;

  nlohmann::json to_json() const;
  static Pool from_json(const Corpus& corpus, const nlohmann::json& j);

 private:
  void move(std::size_t i, Membership to);

  const Corpus* corpus_;
  std::vector<Membership> membership_;
  std::vector<LabelState> labels_;
  std::array<std::size_t, 4> counts_{};
};

}  // namespace triage
