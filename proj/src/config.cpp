#include "scenewatch/config.hpp"

#include <cstdlib>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

#ifndef SCENEWATCH_DEFAULT_DATA_DIR
#define SCENEWATCH_DEFAULT_DATA_DIR "data"
#endif

namespace scenewatch {

namespace fs = std::filesystem;

ThresholdPolicy RunConfig::thresholds_for(int case_id) const {
  const auto it = per_case_thresholds.find(case_id);
  return it == per_case_thresholds.end() ? thresholds : it->second;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal();
}

ThresholdPolicy read_policy(const nlohmann::json& j, const ThresholdPolicy& fallback) {
  return ThresholdPolicy(j.value("normal", fallback.normal()), j.value("anomaly", fallback.anomaly()));
}

std::optional<fs::path> optional_path(const nlohmann::json& doc, const char* key, const fs::path& base) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return resolve(base, doc.at(key).get<std::string>());
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be an object");
  RunConfig c;
  try {
    RequestParams defaults;
    if (doc.contains("request_defaults")) {
      nlohmann::json probe = doc.at("request_defaults");
      probe["model_id"] = "_";
      defaults = endpoint_from_json(probe).params;
    }
    if (!doc.contains("endpoints") || !doc.at("endpoints").is_array()) {
      throw Error(ErrorCode::InvalidConfig, "'endpoints' list is required");
    }
    for (const auto& e : doc.at("endpoints")) c.endpoints.push_back(endpoint_from_json(e, defaults));
    validate_endpoints(c.endpoints);

    if (doc.contains("thresholds")) {
      const auto& t = doc.at("thresholds");
      c.thresholds = read_policy(t, c.thresholds);
      if (t.contains("per_case")) {
        for (const auto& [key, value] : t.at("per_case").items()) {
          c.per_case_thresholds.emplace(std::stoi(key), read_policy(value, c.thresholds));
        }
      }
    }

    c.vocabulary_path = resolve(base_dir, doc.at("vocabulary").get<std::string>());
    c.templates_dir = resolve(base_dir, doc.at("templates_dir").get<std::string>());
    c.template_name = doc.value("template", c.template_name);
    c.dataset_path = resolve(base_dir, doc.at("dataset").get<std::string>());

    if (doc.contains("parallelism")) {
      const auto& p = doc.at("parallelism");
      c.case_parallelism = p.value("cases", c.case_parallelism);
      c.request_parallelism = p.value("requests", c.request_parallelism);
    }
    if (c.case_parallelism == 0 || c.request_parallelism == 0) {
      throw Error(ErrorCode::InvalidConfig, "parallelism must be at least 1");
    }
    c.cache_dir = optional_path(doc, "cache_dir", base_dir);
    c.images_dir = optional_path(doc, "images_dir", base_dir);
    if (doc.contains("detector")) {
      const auto& d = doc.at("detector");
      c.detector_url = d.value("url", c.detector_url);
      c.detector_timeout_s = d.value("timeout_s", c.detector_timeout_s);
    }
    if (doc.contains("suppress_overlaps")) {
      const auto& s = doc.at("suppress_overlaps");
      c.suppress_overlaps = s.value("enabled", c.suppress_overlaps);
      c.suppress_iou = s.value("iou_threshold", c.suppress_iou);
    }
    if (doc.contains("scene")) {
      const auto& s = doc.at("scene");
      c.scene.collapse_duplicates = s.value("collapse_duplicates", c.scene.collapse_duplicates);
      c.scene.order_by_score = s.value("order_by_score", c.scene.order_by_score);
    }
    if (doc.contains("platform")) {
      const auto& p = doc.at("platform");
      c.platform.vehicle_profile = p.value("vehicle_profile", c.platform.vehicle_profile);
      c.platform.operating_domain = p.value("operating_domain", c.platform.operating_domain);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::InvalidConfig, "per_case keys must be case ids");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return config_from_json(doc, fs::absolute(path).parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json endpoints = nlohmann::json::array();
  for (const auto& e : c.endpoints) endpoints.push_back(to_json(e));
  nlohmann::json per_case = nlohmann::json::object();
  for (const auto& [id, p] : c.per_case_thresholds) {
    per_case[std::to_string(id)] = {{"normal", p.normal()}, {"anomaly", p.anomaly()}};
  }
  const auto opt = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
  };
  return {
      {"endpoints", std::move(endpoints)},
      {"thresholds",
       {{"normal", c.thresholds.normal()}, {"anomaly", c.thresholds.anomaly()}, {"per_case", per_case}}},
      {"vocabulary", c.vocabulary_path.string()},
      {"templates_dir", c.templates_dir.string()},
      {"template", c.template_name},
      {"dataset", c.dataset_path.string()},
      {"parallelism", {{"cases", c.case_parallelism}, {"requests", c.request_parallelism}}},
      {"cache_dir", opt(c.cache_dir)},
      {"images_dir", opt(c.images_dir)},
      {"detector", {{"url", c.detector_url}, {"timeout_s", c.detector_timeout_s}}},
      {"suppress_overlaps", {{"enabled", c.suppress_overlaps}, {"iou_threshold", c.suppress_iou}}},
      {"scene",
       {{"collapse_duplicates", c.scene.collapse_duplicates}, {"order_by_score", c.scene.order_by_score}}},
      {"platform",
       {{"vehicle_profile", c.platform.vehicle_profile}, {"operating_domain", c.platform.operating_domain}}},
  };
}

fs::path data_dir() {
  if (const char* env = std::getenv("SCENEWATCH_DATA_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  return fs::path(SCENEWATCH_DEFAULT_DATA_DIR);
}

RunConfig default_config() {
  return load_config(data_dir() / "config" / "reference.json");
}

}  // namespace scenewatch
