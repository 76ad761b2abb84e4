#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace esn {

enum class ErrorKind {
  InvalidParams,
  InvalidConfig,
  InvalidScaling,
  IntegrationBlowup,
  PredictionDivergence,
  IllConditioned,
  UndefinedNormalization,
  EmptyData,
  Incompatible,
  Io,
};

/// Single exception type for the library. `kind()` drives CLI exit codes;
/// numerical failures that happen inside a loop also carry the step index.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(what), kind_(kind), step_(step) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> step_;
};

const char* to_string(ErrorKind kind) noexcept;

/// 2 = config/validation, 3 = numerical failure, 4 = I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace esn
