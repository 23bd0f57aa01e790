#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spreadlab {

enum class ErrorKind {
  MissingColumn,
  ParseError,
  InvariantViolation,
  UnknownPredictor,
  InvalidConfig,
  Io,
  RankDeficient,
  InsufficientData,
  NonConvergence,
  DimensionMismatch,
  InvalidHyperparams,
  EmptyAfterSubsample,
  SchemaMismatch,
  EmptyInput,
  DegenerateSplit,
  ConstantFeature,
  UnknownFeature,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 2 = usage/config, 3 = I/O, 4 = numeric failure.
int exit_code(ErrorKind kind);

}  // namespace spreadlab
