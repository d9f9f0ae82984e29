#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenewatch {

enum class Subsystem { Perception, Planning };

std::string_view to_string(Subsystem s) noexcept;
std::optional<Subsystem> parse_subsystem(std::string_view text) noexcept;

struct EdgeCaseRecord {
  int case_id = 0;
  std::string description;
  std::vector<Subsystem> affected_subsystems;
  std::string anomaly_query;
  /// Absolute when loaded from a file with a relative entry.
  std::optional<std::filesystem::path> image_path;

  bool operator==(const EdgeCaseRecord&) const = default;
};

/// Parses `{"cases": [...]}`; relative image paths resolve against
/// `base_dir`. Throws Error{MalformedDocument} on duplicate ids, ids below 1,
/// or an empty subsystem list.
std::vector<EdgeCaseRecord> parse_dataset(const nlohmann::json& doc,
                                          const std::filesystem::path& base_dir = {});
std::vector<EdgeCaseRecord> load_dataset(const std::filesystem::path& path);

nlohmann::json to_json(const EdgeCaseRecord& record);

}  // namespace scenewatch
