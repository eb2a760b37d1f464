#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace readlens {

enum class ErrorCode {
  // ingest
  MalformedRow,
  NonMonotonicTime,
  SchemaError,
  OverlapError,
  PhaseOrderError,
  DanglingStandard,
  // gaze events / features
  InsufficientData,
  NoSignal,
  EmptyCohort,
  // clustering
  DegenerateData,
  SingularCovariance,
  DisconnectedGraph,
  SingleCluster,
  // text metrics
  UnknownQuestion,
  EmptyText,
  // agents
  TemplateError,
  BackendError,
  MalformedReport,
  UnknownStudent,
  MalformedEvaluation,
  // environment
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure the library reports is an Error carrying a code. Parsers
/// attach the 1-based source line where one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  /// Config and I/O failures are environment errors (CLI exit status 2).
  bool is_environment_error() const noexcept {
    return code_ == ErrorCode::IoError || code_ == ErrorCode::ConfigError;
  }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace readlens
