#include "triage/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "triage/csv.hpp"
#include "triage/error.hpp"
#include "triage/lexicon.hpp"
#include "triage/rng.hpp"

namespace triage {

using nlohmann::json;

std::string_view to_string(Label label) { return label == Label::bug ? "bug" : "nonbug"; }

std::optional<Label> parse_label(std::string_view s) {
  if (s == "bug") return Label::bug;
  if (s == "nonbug") return Label::nonbug;
  return std::nullopt;
}

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::unlabeled: return "unlabeled";
    case LabelKind::human: return "human";
    case LabelKind::pseudo: return "pseudo";
    case LabelKind::corrected: return "corrected";
  }
  return "?";
}

std::string_view to_string(Membership m) {
  switch (m) {
    case Membership::unlabeled: return "unlabeled";
    case Membership::queried: return "queried";
    case Membership::labeled: return "labeled";
    case Membership::test: return "test";
  }
  return "?";
}

std::optional<DatasetFormat> parse_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::jsonl;
  if (s == "csv") return DatasetFormat::csv;
  return std::nullopt;
}

namespace {

bool tag_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '/' || c == '!'; }

std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<' && i + 1 < text.size() && tag_start(text[i + 1])) {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '>' && text[j] != '<') ++j;
      if (j < text.size() && text[j] == '>') {
        out.push_back(' ');
        i = j + 1;
        continue;
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

bool word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

const lexicon::WordSet& stop_set() {
  static const lexicon::WordSet set = lexicon::to_set(lexicon::stop_words());
  return set;
}

json label_state_json(const LabelState& s) {
  json j{{"kind", to_string(s.kind)}};
  if (s.label) j["label"] = to_string(*s.label);
  if (!s.source_id.empty()) j["source_id"] = s.source_id;
  return j;
}

LabelState label_state_from_json(const json& j) {
  LabelState s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "unlabeled") s.kind = LabelKind::unlabeled;
  else if (kind == "human") s.kind = LabelKind::human;
  else if (kind == "pseudo") s.kind = LabelKind::pseudo;
  else if (kind == "corrected") s.kind = LabelKind::corrected;
  else fail(ErrorCode::corrupt, "unknown label state kind '" + kind + "'");
  if (j.contains("label")) {
    s.label = parse_label(j.at("label").get<std::string>());
    if (!s.label) fail(ErrorCode::corrupt, "bad label in label state");
  }
  if (j.contains("source_id")) s.source_id = j.at("source_id").get<std::string>();
  return s;
}


std::optional<Label> checked_label(std::string_view value, std::size_t row) {
  if (value.empty()) return std::nullopt;
  auto l = parse_label(value);
  if (!l)
    fail(ErrorCode::validation,
         "row " + std::to_string(row) + ": label '" + std::string(value) + "' is not one of bug, nonbug, empty");
  return l;
}

std::vector<Report> parse_jsonl(std::string_view content) {
  std::vector<Report> reports;
  std::size_t row = 0;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::validation, "row " + std::to_string(row) + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) fail(ErrorCode::validation, "row " + std::to_string(row) + ": expected a JSON object");
    auto text_field = [&](const char* name, bool required) -> std::string {
      auto it = j.find(name);
      if (it == j.end() || it->is_null()) {
        if (required) fail(ErrorCode::validation, "row " + std::to_string(row) + ": missing required field '" + name + "'");
        return {};
      }
      if (it->is_string()) return it->get<std::string>();
      if (std::string_view(name) == "id" && it->is_number_integer()) return std::to_string(it->get<long long>());
      fail(ErrorCode::validation, "row " + std::to_string(row) + ": field '" + name + "' must be a string");
    };
    std::string id = text_field("id", true);
    std::string title = text_field("title", true);
    std::string body = text_field("body", true);
    std::string project = text_field("project", false);
    std::string label = text_field("label", false);
    reports.push_back(make_report(std::move(id), std::move(project), std::move(title), std::move(body),
                                  checked_label(label, row)));
  }
  return reports;
}

std::vector<Report> parse_csv(std::string_view content) {
  auto rows = csv::parse(content);
  std::vector<Report> reports;
  if (rows.empty()) return reports;
  const csv::Row& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto id_col = column("id"), title_col = column("title"), body_col = column("body");
  const auto project_col = column("project"), label_col = column("label");
  for (auto [col, name] : {std::pair{id_col, "id"}, {title_col, "title"}, {body_col, "body"}})
    if (!col) fail(ErrorCode::validation, std::string("csv header lacks required column '") + name + "'");

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    auto get = [&](std::optional<std::size_t> col, const char* name, bool required) -> std::string {
      if (!col) return {};
      if (*col >= row.size()) {
        if (required) fail(ErrorCode::validation, "row " + std::to_string(r) + ": missing required field '" + name + "'");
        return {};
      }
      return row[*col];
    };
    std::string id = get(id_col, "id", true);
    if (id.empty()) fail(ErrorCode::validation, "row " + std::to_string(r) + ": missing required field 'id'");
    std::string title = get(title_col, "title", true);
    std::string body = get(body_col, "body", true);
    reports.push_back(make_report(std::move(id), get(project_col, "project", false), std::move(title),
                                  std::move(body), checked_label(get(label_col, "label", false), r)));
  }
  return reports;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::validation, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string preprocess(std::string_view raw_text) {
  std::string cleaned = strip_tags(raw_text);
  for (char& c : cleaned) {
    const auto u = static_cast<unsigned char>(c);
    c = word_byte(u) ? static_cast<char>(u < 0x80 ? std::tolower(u) : u) : ' ';
  }
  const auto& stops = stop_set();
  std::string out;
  out.reserve(cleaned.size());
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < cleaned.size() && cleaned[i] != ' ') ++i;
    if (i == start) break;
    const std::string_view token(cleaned.data() + start, i - start);
    if (stops.find(token) != stops.end()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(token);
  }
  return out;
}

Report make_report(std::string id, std::string project, std::string title, std::string body,
                   std::optional<Label> label) {
  Report r;
  r.id = std::move(id);
  r.project = std::move(project);
  r.title = std::move(title);
  r.body = std::move(body);
  r.raw_text = r.title + "\n" + r.body;
  r.model_text = preprocess(r.raw_text);
  r.oracle_label = label;
  return r;
}

Corpus::Corpus(std::vector<Report> reports, std::string source_path) : reports_(std::move(reports)) {
  manifest_.source_path = std::move(source_path);
  manifest_.report_count = reports_.size();
  index_.reserve(reports_.size());
  for (std::size_t i = 0; i < reports_.size(); ++i) {
    const Report& r = reports_[i];
    if (!index_.emplace(r.id, i).second) fail(ErrorCode::validation, "duplicate report id '" + r.id + "'");
    if (r.oracle_label == Label::bug) ++manifest_.bug_count;
    else if (r.oracle_label == Label::nonbug) ++manifest_.nonbug_count;
  }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) fail(ErrorCode::not_found, "unknown report id '" + std::string(id) + "'");
  return *i;
}

bool Corpus::all_oracle_labeled() const {
  return std::all_of(reports_.begin(), reports_.end(), [](const Report& r) { return r.oracle_label.has_value(); });
}

std::uint64_t Corpus::fingerprint() const {
  std::uint64_t h = fnv1a("corpus");
  for (const Report& r : reports_) {
    h = fnv1a(r.id, h);
    h = fnv1a(std::string_view("\x1f", 1), h);
    h = fnv1a(r.raw_text, h);
    h = fnv1a(std::string_view("\x1e", 1), h);
  }
  return h;
}

Corpus parse_dataset(std::string_view content, DatasetFormat format, std::string source_name) {
  auto reports = format == DatasetFormat::jsonl ? parse_jsonl(content) : parse_csv(content);
  return Corpus(std::move(reports), std::move(source_name));
}

Corpus load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  return parse_dataset(read_file(path), format, path.string());
}

json corpus_to_json(const Corpus& corpus, std::span<const LabelState> label_states) {
  if (!label_states.empty() && label_states.size() != corpus.size())
    fail(ErrorCode::validation, "label state count does not match corpus size");
  json reports = json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Report& r = corpus[i];
    json row{{"id", r.id}, {"project", r.project}, {"title", r.title}, {"body", r.body}};
    row["label"] = r.oracle_label ? json(to_string(*r.oracle_label)) : json(nullptr);
    row["label_state"] = label_state_json(label_states.empty() ? LabelState{} : label_states[i]);
    reports.push_back(std::move(row));
  }
  const auto& m = corpus.manifest();
  return json{{"format", kCorpusFormatTag},
              {"manifest",
               {{"source_path", m.source_path},
                {"report_count", m.report_count},
                {"bug_count", m.bug_count},
                {"nonbug_count", m.nonbug_count}}},
              {"reports", std::move(reports)}};
}

PersistedCorpus corpus_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != kCorpusFormatTag)
      fail(ErrorCode::corrupt, "not a " + std::string(kCorpusFormatTag) + " file");
    std::vector<Report> reports;
    std::vector<LabelState> states;
    for (const json& row : j.at("reports")) {
      std::optional<Label> label;
      if (!row.at("label").is_null()) label = parse_label(row.at("label").get<std::string>());
      reports.push_back(make_report(row.at("id").get<std::string>(), row.at("project").get<std::string>(),
                                    row.at("title").get<std::string>(), row.at("body").get<std::string>(), label));
      states.push_back(label_state_from_json(row.at("label_state")));
    }
    PersistedCorpus out{Corpus(std::move(reports), j.at("manifest").at("source_path").get<std::string>()),
                        std::move(states)};
    if (out.corpus.manifest().report_count != j.at("manifest").at("report_count").get<std::size_t>())
      fail(ErrorCode::corrupt, "manifest report_count does not match rows");
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("corpus file: ") + e.what());
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus, std::span<const LabelState> label_states) {
  const std::string text = corpus_to_json(corpus, label_states).dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::validation, "cannot write " + path.string());
  out << text << '\n';
  if (!out) fail(ErrorCode::validation, "write failed for " + path.string());
}

PersistedCorpus load_corpus(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::corrupt, path.string() + ": " + e.what());
  }
  return corpus_from_json(j);
}

// ---------------------------------------------------------------------------

Pool::Pool(const Corpus& corpus)
    : corpus_(&corpus), membership_(corpus.size(), Membership::unlabeled), labels_(corpus.size()) {
  counts_[static_cast<std::size_t>(Membership::unlabeled)] = corpus.size();
}

Pool Pool::init_partition(const Corpus& corpus, std::size_t test_size, std::uint64_t seed, bool require_oracle) {
  if (test_size > corpus.size())
    fail(ErrorCode::validation, "test size " + std::to_string(test_size) + " exceeds corpus size " +
                                    std::to_string(corpus.size()));
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "test-split"));
  rng.shuffle(order);
  std::vector<std::string> ids;
  ids.reserve(test_size);
  for (std::size_t i = 0; i < test_size; ++i) ids.push_back(corpus[order[i]].id);
  return init_partition(corpus, ids, require_oracle);
}

Pool Pool::init_partition(const Corpus& corpus, std::span<const std::string> test_ids, bool require_oracle) {
  Pool pool(corpus);
  for (const auto& id : test_ids) {
    const std::size_t i = corpus.index_of(id);
    if (pool.membership_[i] == Membership::test) fail(ErrorCode::validation, "test id '" + id + "' listed twice");
    if (require_oracle && !corpus[i].oracle_label)
      fail(ErrorCode::validation, "test report '" + id + "' has no oracle label");
    pool.move(i, Membership::test);
  }
  return pool;
}

void Pool::move(std::size_t i, Membership to) {
  --counts_[static_cast<std::size_t>(membership_[i])];
  ++counts_[static_cast<std::size_t>(to)];
  membership_[i] = to;
}

std::vector<std::size_t> Pool::members(Membership m) const {
  std::vector<std::size_t> out;
  out.reserve(count(m));
  for (std::size_t i = 0; i < membership_.size(); ++i)
    if (membership_[i] == m) out.push_back(i);
  return out;
}

PoolPartition Pool::partition() const {
  PoolPartition p;
  for (std::size_t i = 0; i < membership_.size(); ++i) {
    const std::string& id = (*corpus_)[i].id;
    switch (membership_[i]) {
      case Membership::labeled: p.labeled.push_back(id); break;
      case Membership::unlabeled: p.unlabeled.push_back(id); break;
      case Membership::queried: p.queried.push_back(id); break;
      case Membership::test: p.test.push_back(id); break;
    }
  }
  for (auto* v : {&p.labeled, &p.unlabeled, &p.queried, &p.test}) std::sort(v->begin(), v->end());
  return p;
}

void Pool::mark_queried(std::size_t i) {
  if (membership_.at(i) != Membership::unlabeled)
    fail(ErrorCode::conflict, "report '" + (*corpus_)[i].id + "' is not in the unlabeled pool");
  move(i, Membership::queried);
}

void Pool::seed_label(std::size_t i, Label label) {
  if (membership_.at(i) != Membership::unlabeled)
    fail(ErrorCode::conflict, "report '" + (*corpus_)[i].id + "' is not in the unlabeled pool");
  labels_[i] = LabelState::human(label);
  move(i, Membership::labeled);
}

void Pool::apply_human_label(std::string_view id, Label label) { apply_human_label(corpus_->index_of(id), label); }

void Pool::apply_human_label(std::size_t i, Label label) {
  const Membership m = membership_.at(i);
  if (m == Membership::labeled)
    fail(ErrorCode::conflict, "report '" + (*corpus_)[i].id + "' is already labeled; use a correction");
  if (m != Membership::queried)
    fail(ErrorCode::conflict, "report '" + (*corpus_)[i].id + "' is not in the query queue");
  labels_[i] = LabelState::human(label);
  move(i, Membership::labeled);
}

void Pool::apply_pseudo_label(std::size_t i, Label label, std::string source_id) {
  if (membership_.at(i) != Membership::unlabeled)
    fail(ErrorCode::conflict, "pseudo-label target '" + (*corpus_)[i].id + "' is not in the unlabeled pool");
  if (source_id.empty()) fail(ErrorCode::validation, "pseudo label needs a source id");
  labels_[i] = LabelState::pseudo(label, std::move(source_id));
  move(i, Membership::labeled);
}

void Pool::correct_label(std::string_view id, Label label) {
  const std::size_t i = corpus_->index_of(id);
  if (membership_[i] != Membership::labeled)
    fail(ErrorCode::conflict, "report '" + std::string(id) + "' is not labeled; only labeled reports can be corrected");
  labels_[i] = LabelState::corrected(label);
}

void Pool::check_invariants() const {
  std::array<std::size_t, 4> seen{};
  for (std::size_t i = 0; i < membership_.size(); ++i) {
    ++seen[static_cast<std::size_t>(membership_[i])];
    const LabelState& s = labels_[i];
    const std::string& id = (*corpus_)[i].id;
    if (membership_[i] == Membership::labeled) {
      if (s.kind == LabelKind::unlabeled || !s.label)
        fail(ErrorCode::corrupt, "labeled report '" + id + "' carries no label");
      if (s.kind == LabelKind::pseudo) {
        if (s.source_id.empty()) fail(ErrorCode::corrupt, "pseudo label on '" + id + "' lacks a source");
        auto src = corpus_->find(s.source_id);
        if (!src || membership_[*src] != Membership::labeled)
          fail(ErrorCode::corrupt, "pseudo label source of '" + id + "' is not labeled");
      }
    } else if (s.kind != LabelKind::unlabeled) {
      fail(ErrorCode::corrupt, "report '" + id + "' in " + std::string(to_string(membership_[i])) + " pool carries a label");
    }
  }
  if (seen != counts_) fail(ErrorCode::corrupt, "pool counters out of sync");
}

json Pool::to_json() const {
  json members = json::array();
  json states = json::array();
  for (std::size_t i = 0; i < membership_.size(); ++i) {
    members.push_back(static_cast<int>(membership_[i]));
    states.push_back(label_state_json(labels_[i]));
  }
  return json{{"membership", std::move(members)}, {"labels", std::move(states)}};
}

Pool Pool::from_json(const Corpus& corpus, const json& j) {
  Pool pool(corpus);
  const json& members = j.at("membership");
  const json& states = j.at("labels");
  if (members.size() != corpus.size() || states.size() != corpus.size())
    fail(ErrorCode::corrupt, "pool size does not match corpus");
  pool.counts_ = {};
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int m = members[i].get<int>();
    if (m < 0 || m > 3) fail(ErrorCode::corrupt, "bad membership value");
    pool.membership_[i] = static_cast<Membership>(m);
    ++pool.counts_[static_cast<std::size_t>(m)];
    pool.labels_[i] = label_state_from_json(states[i]);
  }
  pool.check_invariants();
  return pool;
}

}  // namespace triage
