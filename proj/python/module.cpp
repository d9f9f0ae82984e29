#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "scenewatch/config.hpp"
#include "scenewatch/detection.hpp"
#include "scenewatch/error.hpp"
#include "scenewatch/image.hpp"
#include "scenewatch/pipeline.hpp"
#include "scenewatch/prompt.hpp"
#include "scenewatch/report.hpp"
#include "scenewatch/scene.hpp"
#include "scenewatch/verdict.hpp"
#include "scenewatch/vocabulary.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace scenewatch;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

RunConfig config_or_default(const std::optional<fs::path>& path) {
  return path ? load_config(*path) : default_config();
}

fs::path fixtures_or_default(const std::optional<fs::path>& path) {
  return path ? *path : data_dir() / "fixtures" / "reference";
}

std::vector<Detection> detections_from(const py::list& items) {
  std::vector<Detection> out;
  for (const auto& item : items) out.push_back(detection_from_json(from_python(item)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_scenewatch, m) {
  m.doc() = "Semantic anomaly detection pipeline for driving scenes";

  static py::exception<Error> error_type(m, "ScenewatchError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type;
      PyErr_SetObject(exc.ptr(), py::make_tuple(std::string(to_string(e.code())), e.detail()).ptr());
    }
  });

  m.def("data_dir", &data_dir, "Directory holding the shipped vocabulary, templates and fixtures.");

  m.def(
      "load_vocabulary",
      [](const std::string& document) {
        const auto vocab = load_vocabulary(document);
        py::dict d;
        d["version"] = vocab.version();
        d["normal_queries"] = vocab.normal_queries();
        d["anomaly_queries"] = vocab.anomaly_queries();
        d["normal_groups"] = vocab.normal_groups();
        return d;
      },
      py::arg("document"));

  m.def(
      "to_pixel_box",
      [](double cx, double cy, double w, double h, int width, int height) {
        const auto b = to_pixel_box({cx, cy, w, h}, width, height);
        return py::make_tuple(b.x0, b.y0, b.x1, b.y1);
      },
      py::arg("cx"), py::arg("cy"), py::arg("w"), py::arg("h"), py::arg("width"), py::arg("height"),
      "Normalized center box to clamped corner pixels (x0, y0, x1, y1).");

  m.def(
      "filter_detections",
      [](const py::dict& response, const std::vector<std::string>& normal_queries,
         const std::vector<std::string>& anomaly_queries, int width, int height, double normal_threshold,
         double anomaly_threshold) {
        const QueryBundle bundle{normal_queries, anomaly_queries};
        const auto parsed = parse_detect_response(from_python(response), &bundle);
        const auto dets = filter_detections(parsed.detections, ThresholdPolicy(normal_threshold, anomaly_threshold),
                                            bundle, {width, height});
        py::list out;
        for (const auto& d : dets) out.append(to_python(to_json(d)));
        return out;
      },
      py::arg("response"), py::arg("normal_queries"), py::arg("anomaly_queries"), py::arg("width"),
      py::arg("height"), py::arg("normal_threshold") = ThresholdPolicy::kDefaultNormal,
      py::arg("anomaly_threshold") = ThresholdPolicy::kDefaultAnomaly,
      "Validates a detector /detect response and keeps detections above the per-kind thresholds.");

  m.def(
      "describe_scene",
      [](const py::list& detections, std::optional<int> case_id) {
        return to_python(to_json(describe_scene(detections_from(detections), case_id)));
      },
      py::arg("detections"), py::arg("case_id") = py::none());

  m.def(
      "render_prompt",
      [](const py::dict& scene, const std::string& template_name, std::optional<fs::path> templates_dir,
         std::optional<std::string> vehicle_profile, std::optional<std::string> operating_domain) {
        TemplateRegistry registry;
        registry.add_directory(templates_dir ? *templates_dir : data_dir() / "templates");
        auto ctx = PlatformContext::reference();
        if (vehicle_profile) ctx.vehicle_profile = *vehicle_profile;
        if (operating_domain) ctx.operating_domain = *operating_domain;
        return render(build_prompt(scene_from_json(from_python(scene)), ctx, template_name, registry));
      },
      py::arg("scene"), py::arg("template") = "default", py::arg("templates_dir") = py::none(),
      py::arg("vehicle_profile") = py::none(), py::arg("operating_domain") = py::none());

  m.def(
      "parse_verdict",
      [](const std::string& model_id, const std::string& text) { return to_python(to_json(parse_verdict(model_id, text))); },
      py::arg("model_id"), py::arg("text"));

  m.def(
      "render_overlay",
      [](const py::bytes& image, const py::list& detections) {
        const std::string data = image;
        const auto decoded = decode_image(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
        const auto png = encode_png(render_overlay(decoded, detections_from(detections)));
        return py::bytes(reinterpret_cast<const char*>(png.data()), png.size());
      },
      py::arg("image"), py::arg("detections"), "Draws detection boxes on a PNG, JPEG or PPM image; returns PNG bytes.");

  m.def(
      "replay",
      [](std::optional<fs::path> fixtures, std::optional<fs::path> config, std::vector<int> cases,
         std::optional<fs::path> out) {
        RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = replay(fixtures_or_default(fixtures), config_or_default(config), RunOptions{cases, out});
        }
        py::dict d = to_python(to_json(outcome.report));
        d["run_dir"] = outcome.run_dir ? py::cast(outcome.run_dir->string()) : py::none();
        return d;
      },
      py::arg("fixtures") = py::none(), py::arg("config") = py::none(), py::arg("cases") = std::vector<int>{},
      py::arg("out") = py::none(), "Replays recorded fixtures through the full pipeline; returns the report.");

  m.def(
      "validate_fixtures",
      [](std::optional<fs::path> fixtures, std::optional<fs::path> config) {
        const auto cfg = config_or_default(config);
        const auto res = load_resources(cfg);
        std::vector<int> ids;
        for (const auto& r : res.dataset) ids.push_back(r.case_id);
        validate_fixtures(fixtures_or_default(fixtures), cfg, res, ids);
        return ids;
      },
      py::arg("fixtures") = py::none(), py::arg("config") = py::none());

  m.def(
      "summarize",
      [](const py::dict& report) {
        auto j = from_python(report);
        j.erase("run_dir");
        std::vector<CaseResult> results;
        for (const auto& r : j.at("results")) results.push_back(case_result_from_json(r));
        return to_python(to_json(summarize(results, j.at("models").get<std::vector<std::string>>())));
      },
      py::arg("report"), "Recomputes the top-model summary from a report's results.");

  m.def(
      "emit_report",
      [](const py::dict& report, const std::string& format) {
        auto j = from_python(report);
        j.erase("run_dir");
        return emit_report(report_from_json(j), parse_report_format(format));
      },
      py::arg("report"), py::arg("format") = "markdown");
}
