#pragma once

#include <cstdio>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "triage/corpus.hpp"
#include "triage/model.hpp"

namespace testing_support {

using namespace triage;

// A loopback port that nothing listens on once this returns.
inline int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Backend whose answers are scripted per model_text; unknown texts get the
// defaults. Updates only bump the version.
class ScriptedBackend final : public ModelBackend {
 public:
  std::map<std::string, double, std::less<>> p_bug;
  std::map<std::string, Embedding, std::less<>> vectors;
  std::size_t dim = 2;
  double default_p = 0.5;
  std::size_t updates = 0;

  std::string_view kind() const override { return "scripted"; }
  UpdateReport update(std::span<const TrainingExample> examples, UpdateMode, std::uint64_t) override {
    ++updates;
    return UpdateReport{examples.size(), 0, 0.0, updates};
  }
  std::vector<ProbabilityPair> predict(std::span<const std::string_view> texts) const override {
    std::vector<ProbabilityPair> out;
    for (auto t : texts) {
      auto it = p_bug.find(t);
      out.push_back(ProbabilityPair::from_bug(it == p_bug.end() ? default_p : it->second));
    }
    return out;
  }
  std::vector<Embedding> embed(std::span<const std::string_view> texts) const override {
    std::vector<Embedding> out;
    for (auto t : texts) {
      auto it = vectors.find(t);
      out.push_back(it == vectors.end() ? Embedding(dim, 0.0) : it->second);
    }
    return out;
  }
  std::size_t embedding_dim() const override { return dim; }
  std::uint64_t version() const override { return updates; }
  bool trained() const override { return true; }
  nlohmann::json save_state() const override { return {{"kind", "scripted"}}; }
  void load_state(const nlohmann::json&) override {}
};

// Report whose model_text is exactly `token` (title only, no stop words).
inline Report token_report(const std::string& id, const std::string& token, std::optional<Label> label = Label::bug) {
  return make_report(id, "p", token, "", label);
}

inline Corpus make_corpus(std::vector<Report> reports) { return Corpus(std::move(reports), "test"); }

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("triage-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::FILE* f = std::fopen(p.c_str(), "rb");
  if (!f) return {};
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) out.append(buf, n);
  std::fclose(f);
  return out;
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::FILE* f = std::fopen(p.c_str(), "wb");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

}  // namespace testing_support
