#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace triage::lexicon {

// Bumped whenever any embedded list changes; recorded in run state.
inline constexpr std::string_view kVersion = "lexicon-v1";

// Embedded copies of data/stopwords.txt, data/relevant_terms.txt and
// data/irrelevant_terms.txt. A unit test keeps them in sync with the files.
std::span<const std::string_view> stop_words();
std::span<const std::string_view> relevant_terms();
std::span<const std::string_view> irrelevant_terms();

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

using WordSet = std::unordered_set<std::string, StringHash, std::equal_to<>>;

WordSet to_set(std::span<const std::string_view> words);

// One term per line; blank lines and lines starting with '#' are skipped.
// Terms are lowercased and trimmed.
std::vector<std::string> read_term_file(const std::filesystem::path& path);

}  // namespace triage::lexicon
