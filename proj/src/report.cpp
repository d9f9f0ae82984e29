#include "scenewatch/report.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

using nlohmann::json;

std::string_view to_string(CaseStatus status) noexcept {
  switch (status) {
    case CaseStatus::Complete: return "complete";
    case CaseStatus::Partial: return "partial";
    case CaseStatus::Failed: return "failed";
  }
  return "failed";
}

namespace {

CaseStatus parse_status(const std::string& s) {
  if (s == "complete") return CaseStatus::Complete;
  if (s == "partial") return CaseStatus::Partial;
  if (s == "failed") return CaseStatus::Failed;
  throw Error(ErrorCode::MalformedDocument, "unknown case status '" + s + "'");
}

json optional_string(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> read_optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

const LlmVerdict* CaseResult::verdict_for(std::string_view model_id) const noexcept {
  for (const auto& v : verdicts) {
    if (v.model_id == model_id) return &v;
  }
  return nullptr;
}

Summary summarize(std::span<const CaseResult> results, std::span<const std::string> models) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no case results to summarize");
  Summary summary;
  for (const auto& m : models) summary.top_counts[m] = 0;

  for (const auto& r : results) {
    if (r.verdicts.empty()) continue;
    CaseTop top{r.case_id, {}, std::nullopt};
    for (const auto& v : r.verdicts) {
      if (v.label != Label::Anomaly) continue;
      if (!top.confidence || v.confidence > *top.confidence) {
        top.confidence = v.confidence;
        top.models = {v.model_id};
      } else if (v.confidence == *top.confidence) {
        top.models.push_back(v.model_id);
      }
    }
    std::sort(top.models.begin(), top.models.end());
    for (const auto& m : top.models) ++summary.top_counts[m];
    summary.per_case.push_back(std::move(top));
  }
  std::sort(summary.per_case.begin(), summary.per_case.end(),
            [](const CaseTop& a, const CaseTop& b) { return a.case_id < b.case_id; });
  return summary;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const Detection& det) {
  return {{"label", det.label},
          {"kind", std::string(to_string(det.kind))},
          {"score", det.score},
          {"box", {det.box.x0, det.box.y0, det.box.x1, det.box.y1}}};
}

Detection detection_from_json(const json& j) {
  Detection d;
  d.label = j.at("label").get<std::string>();
  const auto kind = parse_query_kind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::MalformedDocument, "detection kind");
  d.kind = *kind;
  d.score = j.at("score").get<double>();
  const auto& b = j.at("box");
  d.box = PixelBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                   b.at(3).get<double>()};
  return d;
}

json to_json(const ModelError& error) {
  json j = to_json(error.error);
  j["model_id"] = error.model_id;
  return j;
}

json to_json(const CaseResult& r) {
  json dets = json::array();
  for (const auto& d : r.detections) dets.push_back(to_json(d));
  json verdicts = json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  json errors = json::array();
  for (const auto& e : r.errors) errors.push_back(to_json(e));
  return {{"case_id", r.case_id},
          {"status", std::string(to_string(r.status))},
          {"scene", to_json(r.scene)},
          {"detections", std::move(dets)},
          {"template_id", r.template_id},
          {"prompt_sha256", r.prompt_sha256},
          {"verdicts", std::move(verdicts)},
          {"errors", std::move(errors)},
          {"artifacts",
           {{"prompt", optional_string(r.artifacts.prompt)},
            {"overlay", optional_string(r.artifacts.overlay)}}}};
}

CaseResult case_result_from_json(const json& j) {
  CaseResult r;
  r.case_id = j.at("case_id").get<int>();
  r.status = parse_status(j.at("status").get<std::string>());
  r.scene = scene_from_json(j.at("scene"));
  for (const auto& d : j.at("detections")) r.detections.push_back(detection_from_json(d));
  r.template_id = j.at("template_id").get<std::string>();
  r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
  for (const auto& v : j.at("verdicts")) r.verdicts.push_back(verdict_from_json(v));
  for (const auto& e : j.at("errors")) {
    r.errors.push_back({e.at("model_id").get<std::string>(), endpoint_error_from_json(e)});
  }
  const auto& a = j.at("artifacts");
  r.artifacts.prompt = read_optional_string(a, "prompt");
  r.artifacts.overlay = read_optional_string(a, "overlay");
  return r;
}

json to_json(const Summary& summary) {
  json per_case = json::array();
  for (const auto& t : summary.per_case) {
    per_case.push_back({{"case_id", t.case_id},
                        {"models", t.models},
                        {"confidence_pct", t.confidence ? json(t.confidence->to_string()) : json(nullptr)}});
  }
  return {{"top_counts", summary.top_counts}, {"per_case", std::move(per_case)}};
}

namespace {

json report_body(const RunReport& report) {
  json results = json::array();
  for (const auto& r : report.results) results.push_back(to_json(r));
  return {{"mode", report.mode},
          {"config", report.config},
          {"models", report.models},
          {"results", std::move(results)},
          {"missing_cases", report.missing_cases},
          {"summary", to_json(report.summary)}};
}

}  // namespace

std::string compute_run_id(const RunReport& report) {
  return sha256_hex(report_body(report).dump()).substr(0, 16);
}

json to_json(const RunReport& report) {
  json j = report_body(report);
  j["run_id"] = report.run_id;
  j["started_at"] = report.started_at;
  j["finished_at"] = report.finished_at;
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport report;
  try {
    report.run_id = j.at("run_id").get<std::string>();
    report.mode = j.at("mode").get<std::string>();
    report.config = j.at("config");
    report.models = j.at("models").get<std::vector<std::string>>();
    for (const auto& r : j.at("results")) report.results.push_back(case_result_from_json(r));
    report.missing_cases = j.at("missing_cases").get<std::vector<int>>();
    report.started_at = j.at("started_at").get<std::string>();
    report.finished_at = j.at("finished_at").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("report: ") + e.what());
  }
  if (!report.results.empty()) report.summary = summarize(report.results, report.models);
  if (to_json(report.summary) != j.at("summary")) {
    throw Error(ErrorCode::MalformedDocument, "report summary does not match its results");
  }
  return report;
}

// ---------------------------------------------------------------------------
// emission

ReportFormat parse_report_format(std::string_view name) {
  const auto lowered = to_lower(name);
  if (lowered == "json") return ReportFormat::Json;
  if (lowered == "csv") return ReportFormat::Csv;
  if (lowered == "markdown" || lowered == "md") return ReportFormat::Markdown;
  throw Error(ErrorCode::UnknownFormat, std::string(name));
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += (c == '\n' ? ' ' : c);
  }
  return out;
}

const ModelError* error_for(const CaseResult& r, const std::string& model) {
  for (const auto& e : r.errors) {
    if (e.model_id == model) return &e;
  }
  return nullptr;
}

std::string emit_csv(const RunReport& report) {
  std::ostringstream out;
  out << "case_id,model_id,label,confidence_pct,error\n";
  for (const auto& r : report.results) {
    for (const auto& m : report.models) {
      out << r.case_id << ',' << csv_field(m) << ',';
      if (const auto* v = r.verdict_for(m)) {
        out << to_string(v->label) << ',' << v->confidence.to_string() << ",\n";
      } else {
        const auto* e = error_for(r, m);
        out << ",," << (e ? std::string(to_string(e->error.code)) : std::string("Missing")) << '\n';
      }
    }
  }
  return out.str();
}

std::string emit_markdown(const RunReport& report, const Summary& summary) {
  std::map<int, const CaseTop*> tops;
  for (const auto& t : summary.per_case) tops[t.case_id] = &t;

  std::ostringstream out;
  out << "# Run " << report.run_id << " (" << report.mode << ")\n\n";
  out << "| Case | Scene description |";
  for (const auto& m : report.models) out << ' ' << md_cell(m) << " |";
  out << "\n| ---: | --- |";
  for (std::size_t i = 0; i < report.models.size(); ++i) out << " ---: |";
  out << '\n';

  for (const auto& r : report.results) {
    std::string scene;
    for (const auto& line : r.scene.lines()) scene += (scene.empty() ? "" : "; ") + line;
    if (scene.empty()) scene = "(no objects detected)";
    out << "| " << r.case_id << " | " << md_cell(scene) << " |";
    const auto it = tops.find(r.case_id);
    for (const auto& m : report.models) {
      std::string cell;
      if (const auto* v = r.verdict_for(m)) {
        cell = v->confidence.compact();
        const bool top = it != tops.end() &&
                         std::find(it->second->models.begin(), it->second->models.end(), m) !=
                             it->second->models.end();
        if (top) cell = "**" + cell + "**";
        if (v->label == Label::Normal) cell += " (Normal)";
      } else {
        const auto* e = error_for(r, m);
        cell = "_" + (e ? std::string(to_string(e->error.code)) : std::string("missing")) + "_";
      }
      out << ' ' << cell << " |";
    }
    out << '\n';
  }

  out << "\n| Model | Top-or-tied cases | Case ids |\n| --- | ---: | --- |\n";
  for (const auto& m : report.models) {
    std::string ids;
    for (const auto& t : summary.per_case) {
      if (std::find(t.models.begin(), t.models.end(), m) != t.models.end()) {
        ids += (ids.empty() ? "" : ", ") + std::to_string(t.case_id);
      }
    }
    const auto c = summary.top_counts.find(m);
    out << "| " << md_cell(m) << " | " << (c == summary.top_counts.end() ? 0 : c->second) << " | " << ids
        << " |\n";
  }
  if (!report.missing_cases.empty()) {
    out << "\nMissing cases:";
    for (int id : report.missing_cases) out << ' ' << id;
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
  if (report.results.empty()) throw Error(ErrorCode::EmptyResults, "report has no case results");
  switch (format) {
    case ReportFormat::Json: return to_json(report).dump(2) + "\n";
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Markdown: return emit_markdown(report, summarize(report.results, report.models));
  }
  throw Error(ErrorCode::UnknownFormat, "unhandled format");
}

}  // namespace scenewatch
