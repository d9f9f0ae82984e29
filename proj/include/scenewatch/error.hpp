#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scenewatch {

enum class ErrorCode {
  // vocabulary
  DuplicatePhrase,
  EmptyVocabulary,
  MalformedDocument,
  // detection
  NonPositiveImageSize,
  NonFiniteCoordinate,
  InvalidBox,
  InvalidThreshold,
  UnresolvableQueryIndex,
  // prompt
  UnknownTemplate,
  InvalidContext,
  // gateway
  Timeout,
  TransportFailure,
  Rejected,
  InvalidResponse,
  NoLabelFound,
  NoConfidenceFound,
  ConfidenceOutOfRange,
  AllEndpointsFailed,
  InvalidEndpoint,
  // harness
  DetectorUnavailable,
  FixtureMissing,
  FixtureSchemaMismatch,
  EmptyResults,
  UnknownFormat,
  UndecodableImage,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure mode named by a module maps to one
/// ErrorCode so callers (and the CLI exit path) can branch without parsing
/// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace scenewatch
