#include "triage/error.hpp"

namespace triage {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::precondition_failed: return "precondition_failed";
    case ErrorCode::backend_unavailable: return "backend_unavailable";
    case ErrorCode::config: return "config";
    case ErrorCode::corrupt: return "corrupt";
    case ErrorCode::degenerate: return "degenerate";
  }
  return "unknown";
}

}  // namespace triage
