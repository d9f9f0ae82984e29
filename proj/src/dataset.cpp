#include "scenewatch/dataset.hpp"

#include <set>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

std::string_view to_string(Subsystem s) noexcept {
  return s == Subsystem::Perception ? "Perception" : "Planning";
}

std::optional<Subsystem> parse_subsystem(std::string_view text) noexcept {
  const auto lowered = to_lower(text);
  if (lowered == "perception") return Subsystem::Perception;
  if (lowered == "planning") return Subsystem::Planning;
  return std::nullopt;
}

std::vector<EdgeCaseRecord> parse_dataset(const nlohmann::json& doc,
                                          const std::filesystem::path& base_dir) {
  if (!doc.is_object() || !doc.contains("cases") || !doc.at("cases").is_array()) {
    throw Error(ErrorCode::MalformedDocument, "dataset must be an object with a 'cases' list");
  }
  std::vector<EdgeCaseRecord> out;
  std::set<int> ids;
  for (const auto& c : doc.at("cases")) {
    EdgeCaseRecord r;
    try {
      r.case_id = c.at("case_id").get<int>();
      r.description = c.value("description", std::string{});
      r.anomaly_query = c.at("anomaly_query").get<std::string>();
      for (const auto& s : c.at("affected_subsystems")) {
        const auto parsed = parse_subsystem(s.get<std::string>());
        if (!parsed) {
          throw Error(ErrorCode::MalformedDocument,
                      "case " + std::to_string(r.case_id) + ": unknown subsystem '" +
                          s.get<std::string>() + "'");
        }
        r.affected_subsystems.push_back(*parsed);
      }
      if (c.contains("image_path") && c.at("image_path").is_string()) {
        std::filesystem::path p = c.at("image_path").get<std::string>();
        r.image_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedDocument, std::string("dataset record: ") + e.what());
    }
    if (r.case_id < 1) {
      throw Error(ErrorCode::MalformedDocument, "case_id must be positive");
    }
    if (!ids.insert(r.case_id).second) {
      throw Error(ErrorCode::MalformedDocument, "duplicate case_id " + std::to_string(r.case_id));
    }
    if (r.affected_subsystems.empty()) {
      throw Error(ErrorCode::MalformedDocument,
                  "case " + std::to_string(r.case_id) + ": no affected subsystems");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EdgeCaseRecord> load_dataset(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, path.string() + ": " + e.what());
  }
  return parse_dataset(doc, path.parent_path());
}

nlohmann::json to_json(const EdgeCaseRecord& record) {
  nlohmann::json subsystems = nlohmann::json::array();
  for (auto s : record.affected_subsystems) subsystems.push_back(std::string(to_string(s)));
  return {{"case_id", record.case_id},
          {"description", record.description},
          {"affected_subsystems", std::move(subsystems)},
          {"anomaly_query", record.anomaly_query},
          {"image_path", record.image_path ? nlohmann::json(record.image_path->string())
                                           : nlohmann::json(nullptr)}};
}

}  // namespace scenewatch
