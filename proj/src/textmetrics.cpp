#include "triage/textmetrics.hpp"

#include <cctype>
#include <string>

#include "triage/error.hpp"

namespace triage::text {
namespace {

bool is_ascii_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) fn(text.substr(start, i - start));
  }
}

bool has_alnum(std::string_view token) {
  for (char c : token)
    if (is_ascii_alnum(c)) return true;
  return false;
}

// Lowercased token with leading and trailing non-letters removed.
std::string normalize_term(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && !is_ascii_alpha(token[b])) ++b;
  while (e > b && !is_ascii_alpha(token[e - 1])) --e;
  std::string out(token.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Blank line: newline, optional horizontal whitespace, newline.
bool blank_line_at(std::string_view text, std::size_t i, std::size_t& end) {
  if (text[i] != '\n') return false;
  std::size_t j = i + 1;
  while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
  if (j < text.size() && text[j] == '\n') {
    end = j;
    return true;
  }
  return false;
}

std::size_t count_sentences(std::string_view text) {
  std::size_t sentences = 0;
  bool open = false;  // current segment holds a word character
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_ascii_alnum(c)) {
      open = true;
      continue;
    }
    std::size_t blank_end = 0;
    if (blank_line_at(text, i, blank_end)) {
      if (open) ++sentences;
      open = false;
      i = blank_end;
      continue;
    }
    if (is_terminator(c)) {
      std::size_t j = i;
      while (j + 1 < text.size() && is_terminator(text[j + 1])) ++j;
      const bool boundary = j + 1 == text.size() || is_space(text[j + 1]);
      if (boundary) {
        if (open) ++sentences;
        open = false;
      }
      i = j;
    }
  }
  if (open) ++sentences;
  return sentences;
}

}  // namespace

const TermLists& TermLists::defaults() {
  static const TermLists lists(lexicon::to_set(lexicon::relevant_terms()),
                               lexicon::to_set(lexicon::irrelevant_terms()));
  return lists;
}

std::size_t syllables_of_word(std::string_view word) {
  std::string letters;
  letters.reserve(word.size());
  for (char c : word)
    if (is_ascii_alpha(c)) letters.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (letters.empty()) return 1;

  std::size_t groups = 0;
  bool in_group = false;
  for (char c : letters) {
    const bool v = is_vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }

  const std::size_t n = letters.size();
  if (n >= 3 && letters[n - 1] == 'e') {
    const bool consonant_le = letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
    if (!consonant_le && groups > 0) --groups;
  }
  return groups == 0 ? 1 : groups;
}

TextCounts count_text(std::string_view raw_text) {
  TextCounts counts;
  for_each_token(raw_text, [&](std::string_view token) {
    if (!has_alnum(token)) return;
    ++counts.words;
    counts.syllables += syllables_of_word(token);
  });
  if (counts.words > 0) {
    counts.sentences = count_sentences(raw_text);
    if (counts.sentences == 0) counts.sentences = 1;
  }
  return counts;
}

double flesch_score(const TextCounts& counts) {
  if (counts.words == 0) fail(ErrorCode::degenerate, "flesch score undefined for text without words");
  const double w = static_cast<double>(counts.words);
  const double se = static_cast<double>(counts.sentences);
  const double sy = static_cast<double>(counts.syllables);
  return 206.83 - 1.015 * (w / se) - 84.6 * (sy / w);
}

Identifiability identifiability_score(std::string_view raw_text, const TermLists& terms) {
  Identifiability out;
  for_each_token(raw_text, [&](std::string_view token) {
    if (!has_alnum(token)) return;
    ++out.words;
    const std::string term = normalize_term(token);
    if (terms.is_relevant(term)) ++out.terms.relevant;
    else if (terms.is_irrelevant(term)) ++out.terms.irrelevant;
  });
  if (out.words > 0)
    out.value = static_cast<double>(out.terms.relevant + out.terms.irrelevant) / static_cast<double>(out.words);
  return out;
}

EffortScores effort_scores(std::string_view raw_text, const TermLists& terms) {
  EffortScores out;
  out.counts = count_text(raw_text);
  if (out.counts.words > 0) out.readability = flesch_score(out.counts);
  const Identifiability id = identifiability_score(raw_text, terms);
  out.identifiability = id.value;
  out.terms = id.terms;
  return out;
}

}  // namespace triage::text
