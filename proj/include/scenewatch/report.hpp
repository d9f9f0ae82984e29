#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scenewatch/detection.hpp"
#include "scenewatch/gateway.hpp"
#include "scenewatch/scene.hpp"
#include "scenewatch/verdict.hpp"

namespace scenewatch {

/// Complete: every endpoint answered. Partial: at least one verdict, some
/// endpoints failed. Failed: no verdict at all.
enum class CaseStatus { Complete, Partial, Failed };

std::string_view to_string(CaseStatus status) noexcept;

struct ModelError {
  std::string model_id;
  EndpointError error;

  bool operator==(const ModelError&) const = default;
};

/// Paths relative to the run directory.
struct CaseArtifacts {
  std::optional<std::string> prompt;
  std::optional<std::string> overlay;

  bool operator==(const CaseArtifacts&) const = default;
};

struct CaseResult {
  int case_id = 0;
  SceneDescription scene;
  std::vector<Detection> detections;
  std::string template_id;
  std::string prompt_sha256;
  std::vector<LlmVerdict> verdicts;  // configured model order, distinct model ids
  std::vector<ModelError> errors;
  CaseStatus status = CaseStatus::Failed;
  CaseArtifacts artifacts;

  const LlmVerdict* verdict_for(std::string_view model_id) const noexcept;

  bool operator==(const CaseResult&) const = default;
};

struct CaseTop {
  int case_id = 0;
  std::vector<std::string> models;  // sorted; empty when no Anomaly verdict
  std::optional<Confidence> confidence;

  bool operator==(const CaseTop&) const = default;
};

struct Summary {
  /// Cases in which each model held the highest Anomaly confidence, ties
  /// crediting every tied model.
  std::map<std::string, int> top_counts;
  std::vector<CaseTop> per_case;

  bool operator==(const Summary&) const = default;
};

/// Pure function of the verdicts. `models` seeds zero counts. Cases without
/// any verdict are skipped. Throws Error{EmptyResults}.
Summary summarize(std::span<const CaseResult> results, std::span<const std::string> models = {});

struct RunReport {
  std::string run_id;
  std::string mode;  // "replay" or "live"
  nlohmann::json config;
  std::vector<std::string> models;
  std::vector<CaseResult> results;  // ascending case id
  std::vector<int> missing_cases;
  Summary summary;
  std::string started_at;
  std::string finished_at;

  bool operator==(const RunReport&) const = default;
};

/// First 16 hex digits of the SHA-256 of the report without run_id and
/// timestamps.
std::string compute_run_id(const RunReport& report);

nlohmann::json to_json(const Detection& det);
Detection detection_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelError& error);
nlohmann::json to_json(const CaseResult& result);
CaseResult case_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Summary& summary);
nlohmann::json to_json(const RunReport& report);
/// Throws Error{MalformedDocument}, including when the stored summary
/// differs from the one recomputed from the results.
RunReport report_from_json(const nlohmann::json& j);

enum class ReportFormat { Json, Csv, Markdown };

/// Throws Error{UnknownFormat}.
ReportFormat parse_report_format(std::string_view name);

/// Throws Error{EmptyResults} when the report has no results.
std::string emit_report(const RunReport& report, ReportFormat format);

}  // namespace scenewatch
