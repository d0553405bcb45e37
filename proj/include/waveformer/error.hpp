#pragma once

#include <stdexcept>
#include <string>

namespace waveformer {

enum class ErrorKind {
  dimension,
  input_too_short,
  length,
  level,
  pyramid_shape,
  division_hazard,
  tape,
  unsupported_family,
  fusion,
  config,
  not_found,
  parse,
  integrity,
  label_range,
  unsupported_feature,
  idempotence,
  spec,
  compatibility,
  bounds,
  numeric,
  io,
};

const char* error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

// Process exit code for a failure of this kind: 2 usage/config, 3 data, 4 numeric.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace waveformer
