#pragma once

#include <stdexcept>
#include <string>

namespace maan {

enum class ErrorCode {
  ContractViolation,
  DegenerateInput,
  EnumerationLimit,
  Precondition,
  Divergence,
  Io,
  Parse,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code is what the C API and the
// CLI map to status values and exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::ContractViolation, what);
}

}  // namespace maan
