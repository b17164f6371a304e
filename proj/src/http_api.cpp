#include "triage/http_api.hpp"

#include "httplib.h"

namespace triage::http {

using nlohmann::json;

std::string_view wire_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::config:
    case ErrorCode::degenerate: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::precondition_failed: return "precondition_failed";
    case ErrorCode::backend_unavailable: return "backend_unavailable";
    case ErrorCode::corrupt: return "internal";
  }
  return "internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation:
    case ErrorCode::config:
    case ErrorCode::degenerate: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::precondition_failed: return 412;
    case ErrorCode::backend_unavailable: return 503;
    case ErrorCode::corrupt: return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message, json extra = json::object()) {
  json err{{"code", wire_code(code)}, {"message", message}};
  err.update(extra);
  send_json(res, http_status(code), json{{"error", std::move(err)}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::validation, std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::corrupt, e.what());
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, service::RunService& svc) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Accept");
    res.status = 204;
  });

  server.Post("/runs", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = svc.create_run(parse_body(req));
    send_json(res, 201, svc.get_run(id).to_json());
  }));

  server.Get(R"(/runs/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, svc.get_run(req.matches[1]).to_json());
  }));

  server.Get(R"(/runs/([^/]+)/queue)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto summary = svc.get_run(id);
    json items = json::array();
    for (const auto& q : svc.get_queue(id)) items.push_back(q.to_json());
    send_json(res, 200, json{{"run_id", id}, {"phase", summary.phase}, {"queue_size", summary.queue_size},
                             {"pending", std::move(items)}});
  }));

  server.Post(R"(/runs/([^/]+)/labels)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto submission = service::LabelSubmission::from_json(parse_body(req));
    svc.submit_label(id, submission);
    const auto summary = svc.get_run(id);
    send_json(res, 200, json{{"accepted", submission.report_id}, {"queue_pending", summary.queue_pending},
                             {"phase", summary.phase}});
  }));

  server.Post(R"(/runs/([^/]+)/corrections)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const json body = parse_body(req);
    if (!body.contains("report_id") || !body["report_id"].is_string())
      fail(ErrorCode::validation, "report_id: required string");
    const auto label = body.contains("label") && body["label"].is_string()
                           ? parse_label(body["label"].get<std::string>())
                           : std::nullopt;
    if (!label) fail(ErrorCode::validation, "label: must be bug or nonbug");
    svc.correct_label(id, body["report_id"].get<std::string>(), *label);
    send_json(res, 200, json{{"corrected", body["report_id"]}, {"label", to_string(*label)}});
  }));

  server.Post(R"(/runs/([^/]+)/advance)", [&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    try {
      const auto job = svc.advance(id);
      send_json(res, 202, json{{"job_id", job.job_id}, {"state", service::to_string(job.state)}, {"poll", "/runs/" + id}});
    } catch (const Error& e) {
      json extra = json::object();
      if (e.code() == ErrorCode::precondition_failed) {
        json pending = json::array();
        for (const auto& q : svc.get_queue(id)) pending.push_back(q.id);
        extra["pending"] = std::move(pending);
      }
      send_error(res, e.code(), e.what(), std::move(extra));
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::corrupt, e.what());
    }
  });

  server.Get(R"(/runs/([^/]+)/trace)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const std::string accept = req.get_header_value("Accept");
    const bool wants_csv = accept.find("text/csv") != std::string::npos || req.get_param_value("format") == "csv";
    if (wants_csv) {
      res.status = 200;
      res.set_content(svc.trace_csv(id), "text/csv");
    } else {
      send_json(res, 200, svc.trace_json(id));
    }
  }));

  server.Get(R"(/runs/([^/]+)/annotations)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    res.status = 200;
    res.set_content(svc.annotations_csv(req.matches[1]), "text/csv");
  }));
}

}  // namespace triage::http
