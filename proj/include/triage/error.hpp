#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triage {

// Machine-readable error classes. The service maps these onto wire codes.
enum class ErrorCode {
  validation,
  not_found,
  conflict,
  precondition_failed,
  backend_unavailable,  // retryable: transport failure talking to a backend
  config,               // fatal misconfiguration, e.g. embedding dimension mismatch
  corrupt,              // persisted file unreadable or truncated
  degenerate,           // input outside the domain of a formula (zero words, empty set)
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace triage
