#include "spreadlab/error.hpp"

namespace spreadlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::UnknownPredictor: return "UnknownPredictor";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidHyperparams: return "InvalidHyperparams";
    case ErrorKind::EmptyAfterSubsample: return "EmptyAfterSubsample";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::ConstantFeature: return "ConstantFeature";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
  }
  return "Error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 3;
    case ErrorKind::RankDeficient:
    case ErrorKind::NonConvergence:
      return 4;
    default:
      return 2;
  }
}

}  // namespace spreadlab
