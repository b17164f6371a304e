#include "triage/remote_backend.hpp"

#include <cmath>

#include "httplib.h"
#include "triage/error.hpp"

namespace triage {

using nlohmann::json;

RemoteBackend::RemoteBackend(std::string endpoint, std::size_t declared_dim, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), dim_(declared_dim), timeout_(timeout) {
  if (dim_ == 0) fail(ErrorCode::config, "remote backend needs a positive embedding dimension");
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

json RemoteBackend::post(const std::string& path, const json& body) const {
  httplib::Client client(endpoint_);
  if (!client.is_valid()) fail(ErrorCode::config, "invalid backend endpoint '" + endpoint_ + "'");
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res)
    fail(ErrorCode::backend_unavailable,
         "backend " + endpoint_ + path + " unreachable: " + httplib::to_string(res.error()));
  if (res->status >= 500)
    fail(ErrorCode::backend_unavailable, "backend " + endpoint_ + path + " answered " + std::to_string(res->status));
  if (res->status >= 400)
    fail(ErrorCode::config, "backend " + endpoint_ + path + " rejected request: " + std::to_string(res->status));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::corrupt, "backend " + endpoint_ + path + " sent malformed JSON: " + e.what());
  }
}

UpdateReport RemoteBackend::update(std::span<const TrainingExample> examples, UpdateMode mode, std::uint64_t) {
  json rows = json::array();
  for (const auto& e : examples) rows.push_back({{"id", e.report_id}, {"text", e.text}, {"label", to_string(e.label)}});
  const json res = post("/v1/update", {{"mode", to_string(mode)}, {"examples", std::move(rows)}});
  try {
    if (res.at("status").get<std::string>() != "ok") fail(ErrorCode::corrupt, "backend update status not ok");
    const auto v = res.at("version").get<std::uint64_t>();
    if (v <= version_) fail(ErrorCode::corrupt, "backend version did not increase after update");
    version_ = v;
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("malformed update response: ") + e.what());
  }
  return UpdateReport{examples.size(), 0, 0.0, version_};
}

std::vector<ProbabilityPair> RemoteBackend::predict(std::span<const std::string_view> texts) const {
  if (texts.empty()) return {};
  json req = json::array();
  for (auto t : texts) req.push_back(t);
  const json res = post("/v1/predict", {{"texts", std::move(req)}});
  std::vector<ProbabilityPair> out;
  try {
    const json& probs = res.at("probs");
    if (probs.size() != texts.size()) fail(ErrorCode::corrupt, "predict response has wrong row count");
    for (const json& p : probs) {
      const double pb = p.at(0).get<double>();
      const double pn = p.at(1).get<double>();
      if (!(pb >= 0.0 && pb <= 1.0 && pn >= 0.0 && pn <= 1.0) || std::abs(pb + pn - 1.0) > 1e-6)
        fail(ErrorCode::corrupt, "predict response is not a probability pair");
      out.push_back(ProbabilityPair::from_bug(pb));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("malformed predict response: ") + e.what());
  }
  return out;
}

std::vector<Embedding> RemoteBackend::embed(std::span<const std::string_view> texts) const {
  if (texts.empty()) return {};
  json req = json::array();
  for (auto t : texts) req.push_back(t);
  const json res = post("/v1/embed", {{"texts", std::move(req)}});
  std::vector<Embedding> out;
  try {
    const auto dim = res.at("dim").get<std::size_t>();
    if (dim != dim_)
      fail(ErrorCode::config, "backend embedding dimension " + std::to_string(dim) + " does not match declared " +
                                  std::to_string(dim_));
    const json& vectors = res.at("vectors");
    if (vectors.size() != texts.size()) fail(ErrorCode::corrupt, "embed response has wrong row count");
    for (const json& v : vectors) {
      auto e = v.get<Embedding>();
      if (e.size() != dim_)
        fail(ErrorCode::config, "backend embedding of length " + std::to_string(e.size()) +
                                    " does not match declared " + std::to_string(dim_));
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("malformed embed response: ") + e.what());
  }
  return out;
}

json RemoteBackend::save_state() const {
  return json{{"kind", "remote"}, {"endpoint", endpoint_}, {"dim", dim_}, {"version", version_}};
}

void RemoteBackend::load_state(const json& state) {
  try {
    if (state.at("kind").get<std::string>() != "remote") fail(ErrorCode::corrupt, "state is not a remote backend");
    if (state.at("dim").get<std::size_t>() != dim_) fail(ErrorCode::config, "saved embedding dimension differs");
    version_ = state.at("version").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::corrupt, std::string("remote backend state: ") + e.what());
  }
}

}  // namespace triage
