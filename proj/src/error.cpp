#include "waveformer/error.hpp"

namespace waveformer {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::input_too_short: return "input too short";
    case ErrorKind::length: return "length error";
    case ErrorKind::level: return "level error";
    case ErrorKind::pyramid_shape: return "pyramid shape error";
    case ErrorKind::division_hazard: return "division hazard";
    case ErrorKind::tape: return "tape error";
    case ErrorKind::unsupported_family: return "unsupported wavelet family";
    case ErrorKind::fusion: return "fusion error";
    case ErrorKind::config: return "config error";
    case ErrorKind::not_found: return "not found";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::label_range: return "label range error";
    case ErrorKind::unsupported_feature: return "unsupported feature";
    case ErrorKind::idempotence: return "idempotence error";
    case ErrorKind::spec: return "spec error";
    case ErrorKind::compatibility: return "compatibility error";
    case ErrorKind::bounds: return "bounds error";
    case ErrorKind::numeric: return "numeric failure";
    case ErrorKind::io: return "io error";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::unsupported_family:
      return 2;
    case ErrorKind::not_found:
    case ErrorKind::parse:
    case ErrorKind::integrity:
    case ErrorKind::label_range:
    case ErrorKind::unsupported_feature:
    case ErrorKind::idempotence:
    case ErrorKind::spec:
    case ErrorKind::compatibility:
    case ErrorKind::bounds:
    case ErrorKind::io:
      return 3;
    default:
      return 4;
  }
}

}  // namespace waveformer
