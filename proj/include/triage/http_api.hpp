#pragma once

#include <string_view>

#include "triage/error.hpp"
#include "triage/service.hpp"

namespace httplib {
class Server;
}

namespace triage::http {

// Wire error code and HTTP status for an error class. Codes outside the public
// set (config, corrupt, degenerate) are reported as validation or internal.
std::string_view wire_code(ErrorCode code);
int http_status(ErrorCode code);

// JSON API:
//   POST /runs                     create a run
//   GET  /runs/{id}                summary, including the advance job
//   GET  /runs/{id}/queue          pending reports
//   POST /runs/{id}/labels         LabelSubmission
//   POST /runs/{id}/corrections    {report_id, label}
//   POST /runs/{id}/advance        202 with the job handle
//   GET  /runs/{id}/trace          JSON, or CSV when Accept asks for text/csv
//   GET  /runs/{id}/annotations    CSV
// Errors are {"error": {"code", "message"}}; advance refusals add "pending".
void register_routes(httplib::Server& server, service::RunService& svc);

}  // namespace triage::http
