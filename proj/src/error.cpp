#include "readlens/error.hpp"

namespace readlens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::PhaseOrderError: return "PhaseOrderError";
    case ErrorCode::DanglingStandard: return "DanglingStandard";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoSignal: return "NoSignal";
    case ErrorCode::EmptyCohort: return "EmptyCohort";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::UnknownQuestion: return "UnknownQuestion";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::MalformedReport: return "MalformedReport";
    case ErrorCode::UnknownStudent: return "UnknownStudent";
    case ErrorCode::MalformedEvaluation: return "MalformedEvaluation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)),
      code_(code),
      line_(line) {}

}  // namespace readlens
