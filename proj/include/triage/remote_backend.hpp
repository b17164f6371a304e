#pragma once

#include <chrono>
#include <string>

#include "triage/model.hpp"

namespace triage {

// Client for an external model server speaking the JSON protocol:
//   POST /v1/update  {mode, examples:[{id,text,label}]} -> {status:"ok", version}
//   POST /v1/predict {texts:[...]}                       -> {probs:[[p_bug,p_nonbug],...]}
//   POST /v1/embed   {texts:[...]}                       -> {dim, vectors:[[...],...]}
// Transport failures and 5xx answers raise Error{backend_unavailable}; a wrong
// embedding dimension raises Error{config}; unparsable answers raise Error{corrupt}.
class RemoteBackend final : public ModelBackend {
 public:
  RemoteBackend(std::string endpoint, std::size_t declared_dim,
                std::chrono::milliseconds timeout = std::chrono::seconds(600));

  std::string_view kind() const override { return "remote"; }
  UpdateReport update(std::span<const TrainingExample> examples, UpdateMode mode, std::uint64_t seed) override;
  std::vector<ProbabilityPair> predict(std::span<const std::string_view> texts) const override;
  std::vector<Embedding> embed(std::span<const std::string_view> texts) const override;
  std::size_t embedding_dim() const override { return dim_; }
  std::uint64_t version() const override { return version_; }
  // External models arrive pre-trained.
  bool trained() const override { return true; }

  // Weights live on the server; only endpoint, dimension and version persist.
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

  const std::string& endpoint() const { return endpoint_; }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

  std::string endpoint_;
  std::size_t dim_;
  std::chrono::milliseconds timeout_;
  std::uint64_t version_ = 0;
};

}  // namespace triage
