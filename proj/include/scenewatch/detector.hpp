#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "scenewatch/detection.hpp"
#include "scenewatch/vocabulary.hpp"

namespace scenewatch {

// Wire records of the detector sidecar (POST /detect, GET /healthz).

struct DetectRequest {
  std::string image_base64;
  std::vector<std::string> normal_queries;
  std::vector<std::string> anomaly_queries;
  ImageSize original;
};

struct DetectResponse {
  std::vector<RawDetection> detections;
  std::string model_name;
  int input_resolution = 0;

  bool operator==(const DetectResponse&) const = default;
};

nlohmann::json to_json(const DetectRequest& request);
nlohmann::json to_json(const DetectResponse& response);

/// Validates and decodes a /detect response. With a bundle, every query
/// index must resolve against it. Throws Error{InvalidResponse} naming the
/// offending field.
DetectResponse parse_detect_response(const nlohmann::json& j, const QueryBundle* bundle = nullptr);

/// Minimal HTTP client for the detector sidecar.
class DetectorClient {
 public:
  explicit DetectorClient(std::string base_url, double timeout_s = 30.0);

  /// True when GET /healthz answers 200.
  bool healthy() const;
  /// Throws DetectorUnavailable on connection failure or 503,
  /// Error{Rejected} on other non-200 answers, InvalidResponse on bad bodies.
  DetectResponse detect(const DetectRequest& request, const QueryBundle& bundle) const;

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  double timeout_s_;
};

}  // namespace scenewatch
