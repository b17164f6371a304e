#include "triage/lexicon.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "triage/error.hpp"

namespace triage::lexicon {
namespace {

constexpr std::string_view kStopWords[] = {"a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could", "d", "did", "do", "does", "doing", "down", "during", "each", "etc", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "ll", "m", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "shall", "she", "should", "so", "some", "such", "t", "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until", "up", "us", "ve", "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "y", "you", "your", "yours", "yourself", "yourselves",};

constexpr std::string_view kRelevant[] = {"error", "bug", "reproduce", "issue", "behavior", "debug", "failed", "expected", "crash",};

constexpr std::string_view kIrrelevant[] = {"add", "would", "like", "use", "feature", "request", "support", "improvement", "want", "documentation",};

}  // namespace

std::span<const std::string_view> stop_words() { return kStopWords; }
std::span<const std::string_view> relevant_terms() { return kRelevant; }
std::span<const std::string_view> irrelevant_terms() { return kIrrelevant; }

WordSet to_set(std::span<const std::string_view> words) {
  WordSet out;
  for (auto w : words) out.emplace(w);
  return out;
}

std::vector<std::string> read_term_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::validation, "cannot open term file " + path.string());
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string term = line.substr(first, last - first + 1);
    std::transform(term.begin(), term.end(), term.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    terms.push_back(std::move(term));
  }
  return terms;
}

}  // namespace triage::lexicon
