#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>

#include "scenewatch/config.hpp"
#include "scenewatch/error.hpp"
#include "scenewatch/pipeline.hpp"
#include "scenewatch/report.hpp"
#include "scenewatch/util.hpp"

using namespace scenewatch;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path reference_fixtures() { return data_dir() / "fixtures" / "reference"; }

/// Fresh temporary directory removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("scenewatch_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path copy_fixtures(const TempDir& tmp) {
  const auto dir = tmp.path / "fixtures";
  fs::copy(reference_fixtures(), dir, fs::copy_options::recursive);
  return dir;
}

LlmVerdict verdict(std::string model, Label label, int hundredths) {
  return {std::move(model), label, Confidence::from_hundredths(hundredths), "", {}};
}

CaseResult case_with(int id, std::vector<LlmVerdict> verdicts) {
  CaseResult r;
  r.case_id = id;
  r.verdicts = std::move(verdicts);
  r.status = r.verdicts.empty() ? CaseStatus::Failed : CaseStatus::Complete;
  return r;
}

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no error thrown");
  return Error(ErrorCode::Io, "");
}

}  // namespace

TEST_CASE("dataset loads with twelve cases") {
  const auto cases = load_dataset(data_dir() / "edge_cases.json");
  REQUIRE(cases.size() == 12);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CHECK(cases[i].case_id == static_cast<int>(i) + 1);
    CHECK_FALSE(cases[i].affected_subsystems.empty());
  }
  CHECK(cases[4].anomaly_query == "maintenance truck carrying portable traffic lights");
}

TEST_CASE("dataset invariants") {
  const auto bad = [](const char* text) { return error_of([&] { parse_dataset(json::parse(text)); }).code(); };
  CHECK(bad(R"({"cases": [{"case_id": 1, "anomaly_query": "x", "affected_subsystems": []}]})") ==
        ErrorCode::MalformedDocument);
  CHECK(bad(R"({"cases": [{"case_id": 1, "anomaly_query": "x", "affected_subsystems": ["Perception"]},
                          {"case_id": 1, "anomaly_query": "y", "affected_subsystems": ["Planning"]}]})") ==
        ErrorCode::MalformedDocument);
  CHECK(bad(R"({"cases": [{"case_id": 2, "anomaly_query": "x", "affected_subsystems": ["Steering"]}]})") ==
        ErrorCode::MalformedDocument);
}

TEST_CASE("config resolution, overrides and snapshot round trip") {
  const auto config = default_config();
  REQUIRE(config.endpoints.size() == 4);
  CHECK(config.endpoints[3].model_id == "Meta-Llama-3.1-8B-Instruct-Turbo");
  CHECK(config.endpoints[0].params.retry_budget == 3);
  CHECK(config.vocabulary_path.is_absolute());
  CHECK(fs::exists(config.dataset_path));
  CHECK(config.thresholds == ThresholdPolicy{});

  auto doc = to_json(config);
  doc["thresholds"]["per_case"]["6"] = {{"anomaly", 0.3}};
  const auto reread = config_from_json(doc, "/nowhere");
  CHECK(reread.thresholds_for(6) == ThresholdPolicy(0.25, 0.3));
  CHECK(reread.thresholds_for(5) == ThresholdPolicy{});
  CHECK(to_json(config_from_json(to_json(config), "/nowhere")) == to_json(config));

  json broken = to_json(config);
  broken["thresholds"]["normal"] = 2.0;
  CHECK(error_of([&] { config_from_json(broken, "/"); }).code() == ErrorCode::InvalidConfig);
  broken = to_json(config);
  broken["endpoints"] = json::array();
  CHECK(error_of([&] { config_from_json(broken, "/"); }).code() == ErrorCode::InvalidConfig);
}

TEST_CASE("summarize: single case single model") {
  const std::vector<CaseResult> results{case_with(1, {verdict("m", Label::Anomaly, 4000)})};
  const auto s = summarize(results);
  CHECK(s.top_counts.at("m") == 1);
}

TEST_CASE("summarize: ties credit every tied model") {
  const std::vector<CaseResult> results{
      case_with(1, {verdict("a", Label::Anomaly, 8000), verdict("b", Label::Anomaly, 8000)})};
  const auto s = summarize(results);
  CHECK(s.top_counts.at("a") == 1);
  CHECK(s.top_counts.at("b") == 1);
  CHECK(s.per_case[0].models == std::vector<std::string>{"a", "b"});
}

TEST_CASE("summarize ignores Normal verdicts and arrival order") {
  std::vector<LlmVerdict> vs{verdict("a", Label::Normal, 9900), verdict("b", Label::Anomaly, 6000),
                             verdict("c", Label::Anomaly, 7000), verdict("d", Label::Anomaly, 7000)};
  const std::vector<std::string> models{"a", "b", "c", "d"};
  const std::vector<CaseResult> base{case_with(1, vs)};
  const auto expected = summarize(base, models);
  CHECK(expected.top_counts.at("a") == 0);
  CHECK(expected.top_counts.at("c") == 1);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(vs.begin(), vs.end(), rng);
    const std::vector<CaseResult> shuffled{case_with(1, vs)};
    CHECK(summarize(shuffled, models) == expected);
  }
}

TEST_CASE("summarize errors and skipped cases") {
  CHECK(error_of([] { summarize({}); }).code() == ErrorCode::EmptyResults);
  const std::vector<CaseResult> results{case_with(1, {}), case_with(2, {verdict("a", Label::Anomaly, 100)})};
  const auto s = summarize(results, std::vector<std::string>{"a"});
  CHECK(s.per_case.size() == 1);
  CHECK(s.top_counts.at("a") == 1);
}

TEST_CASE("replay report is deterministic and lossless") {
  TempDir tmp("replay_det");
  const auto config = default_config();
  const auto first = replay(reference_fixtures(), config, {{}, tmp.path});
  const auto second = replay(reference_fixtures(), config, {{}, tmp.path});
  CHECK(first.report.run_id == second.report.run_id);
  CHECK(first.run_dir == second.run_dir);
  auto a = to_json(first.report), b = to_json(second.report);
  for (auto* j : {&a, &b}) {
    j->erase("started_at");
    j->erase("finished_at");
  }
  CHECK(a.dump() == b.dump());

  const auto doc = emit_report(first.report, ReportFormat::Json);
  CHECK(emit_report(report_from_json(json::parse(doc)), ReportFormat::Json) == doc);
  CHECK(report_from_json(json::parse(read_file(*first.run_dir / "report.json"))) == first.report);

  REQUIRE(first.run_dir);
  for (const char* f : {"config.json", "report.json", "records.ndjson", "prompts/case_06.txt", "overlays/case_06.png"}) {
    CHECK(fs::exists(*first.run_dir / f));
  }
  const auto snapshot = json::parse(read_file(*first.run_dir / "config.json"));
  CHECK(to_json(config_from_json(snapshot, "/")) == to_json(config));
  CHECK(snapshot.at("resolved").at("template_id") == first.report.results[0].template_id);
}

TEST_CASE("case 6 replay values") {
  const auto out = replay(reference_fixtures(), default_config(), {{6}, std::nullopt});
  REQUIRE(out.report.results.size() == 1);
  const auto& r = out.report.results[0];
  CHECK(r.verdict_for("Meta-Llama-3.1-8B-Instruct-Turbo")->confidence.to_string() == "95.00");
  CHECK(r.verdict_for("Mixtral-8x7B-Instruct-v0.1")->confidence.to_string() == "90.00");
  CHECK(r.verdict_for("Qwen2.5-7B-Instruct-Turbo")->confidence.to_string() == "14.28");
  CHECK(r.verdict_for("Nvidia-Llama-3.1-Nemotron-70B-Instruct-HF")->confidence.to_string() == "45.00");
  CHECK(out.report.missing_cases.size() == 11);
  CHECK(r.status == CaseStatus::Complete);
  CHECK_FALSE(r.artifacts.prompt.has_value());
}

TEST_CASE("corrupted fixtures are named") {
  TempDir tmp("fixture_bad");
  const auto dir = copy_fixtures(tmp);
  const auto file = dir / "case_03" / "detections.json";
  auto doc = json::parse(read_file(file));
  doc["response"]["detections"][0]["score"] = "high";
  write_file(file, doc.dump());
  const auto e = error_of([&] { replay(dir, default_config()); });
  CHECK(e.code() == ErrorCode::FixtureSchemaMismatch);
  CHECK(e.detail().find(file.string()) != std::string::npos);
  CHECK(e.detail().find("detections[0].score") != std::string::npos);

  write_file(file, "{ not json");
  CHECK(error_of([&] { replay(dir, default_config()); }).code() == ErrorCode::FixtureSchemaMismatch);
}

TEST_CASE("missing fixtures and models") {
  TempDir tmp("fixture_missing");
  const auto dir = copy_fixtures(tmp);
  fs::remove(dir / "case_09" / "responses.json");
  const auto e = error_of([&] { replay(dir, default_config()); });
  CHECK(e.code() == ErrorCode::FixtureMissing);
  CHECK(e.detail().find("case_09") != std::string::npos);
  CHECK(replay(dir, default_config(), {{1, 2}, std::nullopt}).report.results.size() == 2);

  const auto file = dir / "case_02" / "responses.json";
  auto doc = json::parse(read_file(file));
  doc["responses"].erase(1);
  write_file(file, doc.dump());
  const auto m = error_of([&] { replay(dir, default_config(), {{2}, std::nullopt}); });
  CHECK(m.code() == ErrorCode::FixtureSchemaMismatch);
  CHECK(m.detail().find("Qwen2.5-7B-Instruct-Turbo") != std::string::npos);
}

TEST_CASE("empty detections give the empty-scene prompt") {
  TempDir tmp("fixture_empty");
  const auto dir = copy_fixtures(tmp);
  const auto file = dir / "case_04" / "detections.json";
  auto doc = json::parse(read_file(file));
  doc["response"]["detections"] = json::array();
  write_file(file, doc.dump());
  const auto out = replay(dir, default_config(), {{4}, tmp.path / "runs"});
  const auto& r = out.report.results.at(0);
  CHECK(r.scene.empty());
  CHECK(r.verdicts.size() == 4);
  const auto prompt = read_file(*out.run_dir / *r.artifacts.prompt);
  CHECK(prompt.find("No objects were detected in the scene.") != std::string::npos);
}

TEST_CASE("unparseable responses become per-model errors") {
  TempDir tmp("fixture_partial");
  const auto dir = copy_fixtures(tmp);
  const auto file = dir / "case_01" / "responses.json";
  auto doc = json::parse(read_file(file));
  doc["responses"][0]["raw_text"] = "I cannot tell.";
  write_file(file, doc.dump());
  auto out = replay(dir, default_config(), {{1}, std::nullopt});
  auto& r = out.report.results.at(0);
  CHECK(r.status == CaseStatus::Partial);
  CHECK(r.verdicts.size() == 3);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].error.raw_text == "I cannot tell.");
  const auto csv = emit_report(out.report, ReportFormat::Csv);
  CHECK(csv.find("1,Mixtral-8x7B-Instruct-v0.1,,,NoConfidenceFound\n") != std::string::npos);

  for (auto& rr : doc["responses"]) rr["raw_text"] = "no idea";
  write_file(file, doc.dump());
  out = replay(dir, default_config(), {{1, 2}, std::nullopt});
  CHECK(out.report.results.at(0).status == CaseStatus::Failed);
  CHECK(out.report.summary.per_case.size() == 1);
}

TEST_CASE("report formats") {
  const auto out = replay(reference_fixtures(), default_config());
  const auto csv = emit_report(out.report, ReportFormat::Csv);
  CHECK(csv.starts_with("case_id,model_id,label,confidence_pct,error\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 49);
  CHECK(csv.find("6,Qwen2.5-7B-Instruct-Turbo,Normal,14.28,\n") != std::string::npos);
  const auto md = emit_report(out.report, ReportFormat::Markdown);
  CHECK(md.find("| **90** |") != std::string::npos);
  CHECK(md.find("| Meta-Llama-3.1-8B-Instruct-Turbo | 7 | 1, 2, 4, 5, 6, 7, 11 |") != std::string::npos);
  CHECK(parse_report_format("MARKDOWN") == ReportFormat::Markdown);
  CHECK(error_of([] { parse_report_format("yaml"); }).code() == ErrorCode::UnknownFormat);
  RunReport empty;
  CHECK(error_of([&] { emit_report(empty, ReportFormat::Json); }).code() == ErrorCode::EmptyResults);
}

TEST_CASE("tampered summary is rejected") {
  const auto out = replay(reference_fixtures(), default_config(), {{1, 2}, std::nullopt});
  auto doc = to_json(out.report);
  doc["summary"]["top_counts"]["Qwen2.5-7B-Instruct-Turbo"] = 5;
  CHECK(error_of([&] { report_from_json(doc); }).code() == ErrorCode::MalformedDocument);
}

TEST_CASE("threshold override changes the scene") {
  auto config = default_config();
  config.thresholds = ThresholdPolicy(0.25, 0.30);
  const auto out = replay(reference_fixtures(), config, {{6}, std::nullopt});
  CHECK_FALSE(out.report.results[0].scene.has_anomaly_phrase);
  const auto base = replay(reference_fixtures(), default_config(), {{6}, std::nullopt});
  CHECK(base.report.results[0].scene.has_anomaly_phrase);
  CHECK(base.report.run_id != out.report.run_id);
}

TEST_CASE("live mode fails fast without a detector") {
  auto config = default_config();
  config.detector_url = "http://127.0.0.1:1";
  config.detector_timeout_s = 1.0;
  CHECK(error_of([&] { run_live(config); }).code() == ErrorCode::DetectorUnavailable);
}

TEST_CASE("warm cache issues no requests and reproduces the case") {
  const auto config = default_config();
  const auto res = load_resources(config);
  FixtureDetectionSource source(reference_fixtures());

  struct Counting final : ChatTransport {
    FixtureChatTransport inner{load_response_fixture(data_dir() / "fixtures" / "reference", 7)};
    std::atomic<int> calls{0};
    HttpResponse post(const ModelEndpoint& e, const std::string& body) override {
      ++calls;
      return inner.post(e, body);
    }
  } transport;

  MemoryResponseCache cache;
  CaseContext ctx{config, res, source, transport, &cache, nullptr, real_sleep};
  const auto cold = run_case(*res.find_case(7), ctx);
  CHECK(transport.calls == 4);
  const auto warm = run_case(*res.find_case(7), ctx);
  CHECK(transport.calls == 4);
  CHECK(warm == cold);
}

TEST_CASE("overlays render on a neutral canvas without images") {
  const auto config = default_config();
  const auto res = load_resources(config);
  FixtureDetectionSource source(reference_fixtures());
  const auto input = source.acquire(*res.find_case(5), res.bundle);
  CHECK_FALSE(input.image.has_value());
  const auto dets = filter_detections(input.response.detections, config.thresholds, res.bundle, input.size);
  const auto img = render_case_overlay(input, dets);
  CHECK(img.width() == 1280);
  CHECK(img.height() == 720);
  CHECK(render_case_overlay(input, {}) == Image(1280, 720, Rgb{128, 128, 128}));
}
