#include "scenewatch/error.hpp"

namespace scenewatch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicatePhrase: return "DuplicatePhrase";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::NonPositiveImageSize: return "NonPositiveImageSize";
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::UnresolvableQueryIndex: return "UnresolvableQueryIndex";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::InvalidContext: return "InvalidContext";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportFailure: return "TransportFailure";
    case ErrorCode::Rejected: return "Rejected";
    case ErrorCode::InvalidResponse: return "InvalidResponse";
    case ErrorCode::NoLabelFound: return "NoLabelFound";
    case ErrorCode::NoConfidenceFound: return "NoConfidenceFound";
    case ErrorCode::ConfidenceOutOfRange: return "ConfidenceOutOfRange";
    case ErrorCode::AllEndpointsFailed: return "AllEndpointsFailed";
    case ErrorCode::InvalidEndpoint: return "InvalidEndpoint";
    case ErrorCode::DetectorUnavailable: return "DetectorUnavailable";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::FixtureSchemaMismatch: return "FixtureSchemaMismatch";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::UndecodableImage: return "UndecodableImage";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace scenewatch
