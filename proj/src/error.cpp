#include "maan/error.hpp"

namespace maan {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ContractViolation: return "contract violation";
    case ErrorCode::DegenerateInput: return "degenerate input";
    case ErrorCode::EnumerationLimit: return "enumeration limit";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Config: return "config error";
  }
  return "unknown";
}

}  // namespace maan
