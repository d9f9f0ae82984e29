#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenewatch/detection.hpp"
#include "scenewatch/gateway.hpp"
#include "scenewatch/prompt.hpp"
#include "scenewatch/scene.hpp"

namespace scenewatch {

/// Everything a run depends on. Paths are absolute once loaded.
struct RunConfig {
  std::vector<ModelEndpoint> endpoints;
  ThresholdPolicy thresholds;
  std::map<int, ThresholdPolicy> per_case_thresholds;
  std::filesystem::path vocabulary_path;
  std::filesystem::path templates_dir;
  std::string template_name = "default";
  std::filesystem::path dataset_path;
  std::size_t case_parallelism = 2;
  std::size_t request_parallelism = 4;
  std::optional<std::filesystem::path> cache_dir;
  std::string detector_url = "http://127.0.0.1:8008";
  double detector_timeout_s = 60.0;
  std::optional<std::filesystem::path> images_dir;
  bool suppress_overlaps = false;
  double suppress_iou = 0.5;
  SceneOptions scene;
  PlatformContext platform = PlatformContext::reference();

  ThresholdPolicy thresholds_for(int case_id) const;
};

/// Relative paths resolve against `base_dir`; `request_defaults` fills
/// endpoint fields left unset. Throws Error{InvalidConfig}.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Self-contained snapshot; config_from_json(to_json(c), any) == c.
nlohmann::json to_json(const RunConfig& config);

/// SCENEWATCH_DATA_DIR when set, else the data directory of the source tree.
std::filesystem::path data_dir();
/// The reference configuration shipped under data_dir().
RunConfig default_config();

}  // namespace scenewatch
