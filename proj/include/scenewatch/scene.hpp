#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenewatch/detection.hpp"

namespace scenewatch {

struct ScenePhrase {
  std::string text;
  QueryKind kind = QueryKind::Normal;
  double score = 0.0;  // highest score among the collapsed detections
  std::string label;   // vocabulary phrase the text was built from
  std::size_t multiplicity = 1;

  bool operator==(const ScenePhrase&) const = default;
};

struct SceneDescription {
  std::vector<ScenePhrase> phrases;
  bool has_anomaly_phrase = false;
  std::optional<int> case_id;

  bool empty() const noexcept { return phrases.empty(); }
  /// One line per phrase, in order.
  std::vector<std::string> lines() const;

  bool operator==(const SceneDescription&) const = default;
};

/// Ordering and collapsing rules can be switched off for experiments.
struct SceneOptions {
  bool collapse_duplicates = true;
  bool order_by_score = true;
};

/// "a"/"an" for a phrase, decided by its first word: an exception table for
/// words whose sound disagrees with their first letter, otherwise the vowel
/// letter rule.
std::string_view indefinite_article(std::string_view phrase);

/// Pluralizes the last word of a noun phrase ("traffic light" -> "traffic lights").
std::string pluralize(std::string_view noun_phrase);

/// "two".."ten", decimal numerals above ten.
std::string count_word(std::size_t n);

/// Normal detections become "a car" / "an ambulance"; anomaly phrases stay
/// verbatim and only gain an article when they read as a bare singular noun
/// phrase ("maintenance truck ..." -> "a maintenance truck ...").
std::string phrase_for(const Detection& det);

SceneDescription describe_scene(std::span<const Detection> dets,
                                std::optional<int> case_id = std::nullopt,
                                const SceneOptions& options = {});

nlohmann::json to_json(const SceneDescription& scene);
/// Throws Error{MalformedDocument} on schema violations.
SceneDescription scene_from_json(const nlohmann::json& j);

}  // namespace scenewatch
