#include "scenewatch/detector.hpp"

#include <httplib.h>

#include <cmath>

#include "scenewatch/error.hpp"

namespace scenewatch {

nlohmann::json to_json(const DetectRequest& request) {
  return {{"image", request.image_base64},
          {"normal_queries", request.normal_queries},
          {"anomaly_queries", request.anomaly_queries},
          {"original_width", request.original.width},
          {"original_height", request.original.height}};
}

nlohmann::json to_json(const DetectResponse& response) {
  nlohmann::json dets = nlohmann::json::array();
  for (const auto& d : response.detections) {
    dets.push_back({{"query_kind", std::string(to_string(d.query_kind))},
                    {"query_index", d.query_index},
                    {"score", d.score},
                    {"box", {{"cx", d.box.cx}, {"cy", d.box.cy}, {"w", d.box.w}, {"h", d.box.h}}}});
  }
  return {{"detections", std::move(dets)},
          {"model_name", response.model_name},
          {"input_resolution", response.input_resolution}};
}

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidResponse, field + ": " + what);
}

double finite_number(const nlohmann::json& parent, const char* key, const std::string& path) {
  if (!parent.contains(key)) schema_error(path + "." + key, "missing");
  const auto& v = parent.at(key);
  if (!v.is_number()) schema_error(path + "." + key, "not a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_error(path + "." + key, "not finite");
  return d;
}

}  // namespace

DetectResponse parse_detect_response(const nlohmann::json& j, const QueryBundle* bundle) {
  if (!j.is_object()) schema_error("$", "not an object");
  DetectResponse out;

  if (!j.contains("model_name") || !j.at("model_name").is_string()) {
    schema_error("model_name", "missing or not a string");
  }
  out.model_name = j.at("model_name").get<std::string>();
  if (!j.contains("input_resolution") || !j.at("input_resolution").is_number_integer()) {
    schema_error("input_resolution", "missing or not an integer");
  }
  out.input_resolution = j.at("input_resolution").get<int>();

  if (!j.contains("detections") || !j.at("detections").is_array()) {
    schema_error("detections", "missing or not a list");
  }
  const auto& dets = j.at("detections");
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto path = "detections[" + std::to_string(i) + "]";
    const auto& d = dets[i];
    if (!d.is_object()) schema_error(path, "not an object");

    RawDetection raw;
    if (!d.contains("query_kind") || !d.at("query_kind").is_string()) {
      schema_error(path + ".query_kind", "missing or not a string");
    }
    const auto kind = parse_query_kind(d.at("query_kind").get<std::string>());
    if (!kind) schema_error(path + ".query_kind", "must be 'normal' or 'anomaly'");
    raw.query_kind = *kind;

    if (!d.contains("query_index") || !d.at("query_index").is_number_integer() ||
        d.at("query_index").get<long long>() < 0) {
      schema_error(path + ".query_index", "missing or not a non-negative integer");
    }
    raw.query_index = d.at("query_index").get<std::size_t>();
    if (bundle != nullptr && raw.query_index >= bundle->prompt(raw.query_kind).size()) {
      schema_error(path + ".query_index", "out of range for the " +
                                              std::string(to_string(raw.query_kind)) + " query list");
    }

    raw.score = finite_number(d, "score", path);
    if (raw.score < 0.0 || raw.score > 1.0) schema_error(path + ".score", "outside [0, 1]");

    if (!d.contains("box") || !d.at("box").is_object()) schema_error(path + ".box", "missing or not an object");
    const auto& b = d.at("box");
    raw.box = NormalizedBox{finite_number(b, "cx", path + ".box"), finite_number(b, "cy", path + ".box"),
                            finite_number(b, "w", path + ".box"), finite_number(b, "h", path + ".box")};
    if (raw.box.w < 0.0 || raw.box.h < 0.0) schema_error(path + ".box", "negative extent");
    out.detections.push_back(raw);
  }
  return out;
}

DetectorClient::DetectorClient(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

namespace {

void set_timeouts(httplib::Client& client, double timeout_s) {
  const auto t = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
  client.set_connection_timeout(t);
  client.set_read_timeout(t);
  client.set_write_timeout(t);
}

}  // namespace

bool DetectorClient::healthy() const {
  httplib::Client client(base_url_);
  set_timeouts(client, std::min(timeout_s_, 5.0));
  const auto res = client.Get("/healthz");
  return res && res->status == 200;
}

DetectResponse DetectorClient::detect(const DetectRequest& request, const QueryBundle& bundle) const {
  httplib::Client client(base_url_);
  set_timeouts(client, timeout_s_);
  const auto res = client.Post("/detect", to_json(request).dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::DetectorUnavailable, base_url_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 503) throw Error(ErrorCode::DetectorUnavailable, base_url_ + ": model not ready");
  if (res->status != 200) {
    throw Error(ErrorCode::Rejected, "detector HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidResponse, std::string("detector body: ") + e.what());
  }
  return parse_detect_response(body, &bundle);
}

}  // namespace scenewatch
