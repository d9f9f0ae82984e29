#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scenewatch/config.hpp"
#include "scenewatch/error.hpp"
#include "scenewatch/pipeline.hpp"
#include "scenewatch/report.hpp"
#include "scenewatch/util.hpp"

namespace fs = std::filesystem;
using namespace scenewatch;

namespace {

struct CommonArgs {
  std::string config;
  std::string fixtures;
  std::string out;
  std::string format = "markdown";
  std::string thresholds;
  std::string cases;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) parts.emplace_back(trim(item));
  return parts;
}

std::vector<int> parse_cases(const std::string& s) {
  std::vector<int> ids;
  if (s.empty()) return ids;
  for (const auto& part : split_commas(s)) {
    try {
      std::size_t used = 0;
      const int id = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      ids.push_back(id);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--cases: '" + part + "' is not a case id");
    }
  }
  return ids;
}

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig config = args.config.empty() ? default_config() : load_config(args.config);
  if (!args.thresholds.empty()) {
    const auto parts = split_commas(args.thresholds);
    if (parts.size() != 2) throw Error(ErrorCode::InvalidThreshold, "--thresholds expects NORMAL,ANOMALY");
    try {
      config.thresholds = ThresholdPolicy(std::stod(parts[0]), std::stod(parts[1]));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidThreshold, "--thresholds: '" + args.thresholds + "'");
    }
    config.per_case_thresholds.clear();
  }
  return config;
}

fs::path fixtures_dir(const CommonArgs& args) {
  return args.fixtures.empty() ? data_dir() / "fixtures" / "reference" : fs::path(args.fixtures);
}

RunOptions run_options(const CommonArgs& args) {
  RunOptions options;
  options.cases = parse_cases(args.cases);
  options.out_dir = fs::path(args.out.empty() ? "runs" : args.out);
  return options;
}

void print_outcome(const RunOutcome& outcome, const std::string& format) {
  std::cout << emit_report(outcome.report, parse_report_format(format));
  if (outcome.run_dir) std::cerr << "run directory: " << outcome.run_dir->string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic anomaly detection pipeline for driving scenes"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config, "Run configuration (defaults to the shipped reference)");
  };
  const auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", args.format, "json, csv or markdown")->capture_default_str();
  };
  const auto add_selection = [&](CLI::App* cmd) {
    cmd->add_option("--thresholds", args.thresholds, "NORMAL,ANOMALY score thresholds");
    cmd->add_option("--cases", args.cases, "Comma-separated case ids");
  };

  auto* run = app.add_subcommand("run", "Live run against the detector and LLM endpoints");
  add_config(run);
  add_selection(run);
  add_format(run);
  run->add_option("--out", args.out, "Directory receiving run directories (default: runs)");

  auto* rep = app.add_subcommand("replay", "Replay recorded detections and LLM responses");
  add_config(rep);
  add_selection(rep);
  add_format(rep);
  rep->add_option("--fixtures", args.fixtures, "Fixture directory (defaults to the reference fixtures)");
  rep->add_option("--out", args.out, "Directory receiving run directories (default: runs)");

  auto* report = app.add_subcommand("report", "Re-emit the report of a run directory");
  report->add_option("--out", args.out, "Run directory holding report.json")->required();
  add_format(report);

  auto* render_cmd = app.add_subcommand("render", "Render detection overlays from fixtures");
  add_config(render_cmd);
  add_selection(render_cmd);
  render_cmd->add_option("--fixtures", args.fixtures, "Fixture directory");
  render_cmd->add_option("--out", args.out, "Output directory for overlays")->required();

  auto* validate = app.add_subcommand("validate-fixtures", "Check fixtures against config and vocabulary");
  add_config(validate);
  validate->add_option("--fixtures", args.fixtures, "Fixture directory");
  validate->add_option("--cases", args.cases, "Comma-separated case ids");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_outcome(run_live(resolve_config(args), run_options(args)), args.format);
    } else if (rep->parsed()) {
      print_outcome(replay(fixtures_dir(args), resolve_config(args), run_options(args)), args.format);
    } else if (report->parsed()) {
      const auto path = fs::path(args.out) / "report.json";
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(read_file(path));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::MalformedDocument, path.string() + ": " + e.what());
      }
      std::cout << emit_report(report_from_json(doc), parse_report_format(args.format));
    } else if (render_cmd->parsed()) {
      const auto config = resolve_config(args);
      const auto res = load_resources(config);
      const auto dir = fixtures_dir(args);
      auto ids = parse_cases(args.cases);
      if (ids.empty()) {
        for (const auto& r : res.dataset) ids.push_back(r.case_id);
      }
      FixtureDetectionSource source(dir, config.images_dir);
      for (int id : ids) {
        const auto* record = res.find_case(id);
        if (record == nullptr) throw Error(ErrorCode::InvalidConfig, "case " + std::to_string(id) + " is not in the dataset");
        const auto input = source.acquire(*record, res.bundle);
        const auto dets = filter_detections(input.response.detections, config.thresholds_for(id), res.bundle, input.size);
        const auto path = fs::path(args.out) / (case_dir_name(id) + ".png");
        fs::create_directories(path.parent_path());
        save_image(render_case_overlay(input, dets), path);
        std::cout << path.string() << '\n';
      }
    } else if (validate->parsed()) {
      const auto config = resolve_config(args);
      const auto res = load_resources(config);
      auto ids = parse_cases(args.cases);
      if (ids.empty()) {
        for (const auto& r : res.dataset) ids.push_back(r.case_id);
      }
      validate_fixtures(fixtures_dir(args), config, res, ids);
      std::cout << ids.size() << " case fixture(s) valid in " << fixtures_dir(args).string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
