#include "scenewatch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <fstream>
#include <random>
#include <thread>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

namespace fs = std::filesystem;
using nlohmann::json;

const EdgeCaseRecord* Resources::find_case(int case_id) const noexcept {
  for (const auto& r : dataset) {
    if (r.case_id == case_id) return &r;
  }
  return nullptr;
}

Resources load_resources(const RunConfig& config) {
  Resources res{
      .vocabulary = load_vocabulary_file(config.vocabulary_path),
      .bundle = {},
      .templates = {},
      .template_id = {},
      .vocabulary_sha256 = sha256_hex(read_file(config.vocabulary_path)),
      .dataset = load_dataset(config.dataset_path),
  };
  res.bundle = compose_queries(res.vocabulary);
  res.templates.add_directory(config.templates_dir);
  res.template_id = res.templates.get(config.template_name).id;
  for (const auto& r : res.dataset) {
    const auto& anomalies = res.bundle.anomaly_prompt;
    if (std::find(anomalies.begin(), anomalies.end(), r.anomaly_query) == anomalies.end()) {
      throw Error(ErrorCode::InvalidConfig, "case " + std::to_string(r.case_id) +
                                                ": anomaly query is not in the vocabulary");
    }
  }
  return res;
}

json config_snapshot(const RunConfig& config, const Resources& resources) {
  json j = to_json(config);
  j["resolved"] = {{"template_id", resources.template_id},
                   {"vocabulary_sha256", resources.vocabulary_sha256},
                   {"vocabulary_version", resources.vocabulary.version()}};
  return j;
}

std::string case_dir_name(int case_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%02d", case_id);
  return buf;
}

std::optional<fs::path> find_case_image(const EdgeCaseRecord& record,
                                        const std::optional<fs::path>& images_dir) {
  if (images_dir) {
    for (const char* ext : {".png", ".jpg", ".jpeg", ".ppm"}) {
      auto p = *images_dir / (case_dir_name(record.case_id) + ext);
      if (fs::exists(p)) return p;
    }
  }
  if (record.image_path && fs::exists(*record.image_path)) return record.image_path;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// fixtures

namespace {

[[noreturn]] void mismatch(const fs::path& file, const std::string& what) {
  throw Error(ErrorCode::FixtureSchemaMismatch, file.string() + ": " + what);
}

json read_fixture(const fs::path& file) {
  if (!fs::exists(file)) throw Error(ErrorCode::FixtureMissing, file.string());
  try {
    return json::parse(read_file(file), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    mismatch(file, e.what());
  }
}

struct DetectionFixture {
  DetectResponse response;
  ImageSize size;
};

DetectionFixture load_detection_fixture(const fs::path& fixture_dir, int case_id, const QueryBundle& bundle) {
  const auto file = fixture_dir / case_dir_name(case_id) / "detections.json";
  const auto doc = read_fixture(file);
  if (!doc.is_object()) mismatch(file, "not an object");
  if (!doc.contains("case_id") || !doc.at("case_id").is_number_integer() ||
      doc.at("case_id").get<int>() != case_id) {
    mismatch(file, "case_id must be " + std::to_string(case_id));
  }
  DetectionFixture out;
  if (!doc.contains("image") || !doc.at("image").is_object()) mismatch(file, "image: missing");
  const auto& img = doc.at("image");
  for (const char* key : {"width", "height"}) {
    if (!img.contains(key) || !img.at(key).is_number_integer() || img.at(key).get<int>() <= 0) {
      mismatch(file, std::string("image.") + key + ": must be a positive integer");
    }
  }
  out.size = {img.at("width").get<int>(), img.at("height").get<int>()};
  if (!doc.contains("response")) mismatch(file, "response: missing");
  try {
    out.response = parse_detect_response(doc.at("response"), &bundle);
  } catch (const Error& e) {
    mismatch(file, "response." + e.detail());
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> load_response_fixture(const fs::path& fixture_dir, int case_id) {
  const auto file = fixture_dir / case_dir_name(case_id) / "responses.json";
  const auto doc = read_fixture(file);
  if (!doc.is_object()) mismatch(file, "not an object");
  if (!doc.contains("case_id") || !doc.at("case_id").is_number_integer() ||
      doc.at("case_id").get<int>() != case_id) {
    mismatch(file, "case_id must be " + std::to_string(case_id));
  }
  if (!doc.contains("responses") || !doc.at("responses").is_array()) mismatch(file, "responses: missing");
  std::map<std::string, std::string> out;
  const auto& list = doc.at("responses");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& r = list[i];
    const auto path = "responses[" + std::to_string(i) + "]";
    if (!r.is_object() || !r.contains("model_id") || !r.at("model_id").is_string()) {
      mismatch(file, path + ".model_id: missing or not a string");
    }
    if (!r.contains("raw_text") || !r.at("raw_text").is_string()) {
      mismatch(file, path + ".raw_text: missing or not a string");
    }
    if (!out.emplace(r.at("model_id").get<std::string>(), r.at("raw_text").get<std::string>()).second) {
      mismatch(file, path + ".model_id: duplicate");
    }
  }
  return out;
}

void validate_fixtures(const fs::path& fixture_dir, const RunConfig& config, const Resources& resources,
                       const std::vector<int>& case_ids) {
  if (!fs::is_directory(fixture_dir)) throw Error(ErrorCode::FixtureMissing, fixture_dir.string());
  for (int id : case_ids) {
    load_detection_fixture(fixture_dir, id, resources.bundle);
    const auto responses = load_response_fixture(fixture_dir, id);
    for (const auto& e : config.endpoints) {
      if (!responses.contains(e.model_id)) {
        mismatch(fixture_dir / case_dir_name(id) / "responses.json", "no response for model '" + e.model_id + "'");
      }
    }
  }
}

FixtureDetectionSource::FixtureDetectionSource(fs::path fixture_dir, std::optional<fs::path> images_dir)
    : dir_(std::move(fixture_dir)), images_dir_(std::move(images_dir)) {}

SceneInput FixtureDetectionSource::acquire(const EdgeCaseRecord& record, const QueryBundle& bundle) {
  auto fixture = load_detection_fixture(dir_, record.case_id, bundle);
  SceneInput input{std::move(fixture.response), fixture.size, std::nullopt};
  if (const auto path = find_case_image(record, images_dir_)) {
    input.image = load_image(*path);
    input.size = input.image->size();
  }
  return input;
}

LiveDetectionSource::LiveDetectionSource(DetectorClient client, std::optional<fs::path> images_dir)
    : client_(std::move(client)), images_dir_(std::move(images_dir)) {}

SceneInput LiveDetectionSource::acquire(const EdgeCaseRecord& record, const QueryBundle& bundle) {
  const auto path = find_case_image(record, images_dir_);
  if (!path) throw Error(ErrorCode::Io, "no image for case " + std::to_string(record.case_id));
  const auto bytes = read_file(*path);
  auto image = decode_image(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  DetectRequest request{base64_encode(bytes), bundle.normal_prompt, bundle.anomaly_prompt, image.size()};
  SceneInput input{client_.detect(request, bundle), image.size(), std::move(image)};
  return input;
}

FixtureChatTransport::FixtureChatTransport(std::map<std::string, std::string> raw_by_model)
    : raw_by_model_(std::move(raw_by_model)) {}

HttpResponse FixtureChatTransport::post(const ModelEndpoint& endpoint, const std::string&) {
  const auto it = raw_by_model_.find(endpoint.model_id);
  if (it == raw_by_model_.end()) {
    return {404, R"({"error":"no recorded response for this model"})"};
  }
  const json body{{"object", "chat.completion"},
                  {"model", endpoint.wire_model()},
                  {"choices", json::array({{{"index", 0},
                                            {"message", {{"role", "assistant"}, {"content", it->second}}},
                                            {"finish_reason", "stop"}}})}};
  return {200, body.dump()};
}

// ---------------------------------------------------------------------------
// run directory

RunStore::RunStore(fs::path out_dir) : out_dir_(std::move(out_dir)) {
  std::random_device rd;
  char suffix[20];
  std::snprintf(suffix, sizeof suffix, "%08x%08x", rd(), rd());
  staging_ = out_dir_ / (std::string(".staging-") + suffix);
  fs::create_directories(staging_);
}

RunStore::~RunStore() {
  if (!finalized_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void RunStore::write_text(const std::string& relative, std::string_view contents) {
  std::lock_guard lock(mutex_);
  write_file(staging_ / relative, contents);
}

void RunStore::write_image(const std::string& relative, const Image& image) {
  const auto png = encode_png(image);
  std::lock_guard lock(mutex_);
  write_file(staging_ / relative, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
}

void RunStore::append_records(const std::vector<json>& records) {
  std::lock_guard lock(mutex_);
  std::ofstream out(staging_ / "records.ndjson", std::ios::app | std::ios::binary);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "cannot append to records.ndjson");
}

fs::path RunStore::finalize(const RunReport& report) {
  std::lock_guard lock(mutex_);
  write_file(staging_ / "config.json", report.config.dump(2) + "\n");
  write_file(staging_ / "report.json", emit_report(report, ReportFormat::Json));
  const auto target = out_dir_ / report.run_id;
  finalized_ = true;
  if (fs::exists(target)) {
    fs::remove_all(staging_);
  } else {
    fs::rename(staging_, target);
  }
  return target;
}

// ---------------------------------------------------------------------------
// pipeline

Image render_case_overlay(const SceneInput& input, const std::vector<Detection>& detections) {
  const Image base = input.image ? *input.image : Image(input.size.width, input.size.height, Rgb{128, 128, 128});
  return render_overlay(base, detections);
}

CaseResult run_case(const EdgeCaseRecord& record, CaseContext& ctx) {
  const auto& res = ctx.resources;
  const auto input = ctx.source.acquire(record, res.bundle);

  CaseResult result;
  result.case_id = record.case_id;
  result.detections = filter_detections(input.response.detections, ctx.config.thresholds_for(record.case_id),
                                        res.bundle, input.size);
  if (ctx.config.suppress_overlaps) {
    result.detections = suppress_overlaps(result.detections, ctx.config.suppress_iou);
  }
  result.scene = describe_scene(result.detections, record.case_id, ctx.config.scene);

  const auto envelope = build_prompt(result.scene, ctx.config.platform, res.template_id, res.templates);
  const auto prompt = render(envelope);
  result.template_id = envelope.template_id;
  result.prompt_sha256 = sha256_hex(prompt);

  std::vector<EndpointOutcome> outcomes;
  try {
    outcomes = fan_out(ctx.config.endpoints, prompt, ctx.transport,
                       FanOutOptions{ctx.config.request_parallelism, ctx.cache, ctx.sleep});
  } catch (const AllEndpointsFailed& e) {
    outcomes = e.outcomes();
  }
  for (const auto& o : outcomes) {
    if (o.verdict) {
      result.verdicts.push_back(*o.verdict);
    } else if (o.error) {
      result.errors.push_back({o.model_id, *o.error});
    }
  }
  result.status = result.verdicts.empty() ? CaseStatus::Failed
                  : result.errors.empty() ? CaseStatus::Complete
                                          : CaseStatus::Partial;

  if (ctx.store != nullptr) {
    const auto name = case_dir_name(record.case_id);
    result.artifacts.prompt = "prompts/" + name + ".txt";
    result.artifacts.overlay = "overlays/" + name + ".png";
    ctx.store->write_text(*result.artifacts.prompt, prompt);
    ctx.store->write_image(*result.artifacts.overlay, render_case_overlay(input, result.detections));

    std::vector<json> records;
    records.push_back({{"type", "detections"},
                       {"case_id", record.case_id},
                       {"image", {{"width", input.size.width}, {"height", input.size.height}}},
                       {"response", to_json(input.response)}});
    records.push_back({{"type", "prompt"},
                       {"case_id", record.case_id},
                       {"template_id", result.template_id},
                       {"sha256", result.prompt_sha256},
                       {"path", *result.artifacts.prompt}});
    for (const auto& o : outcomes) {
      json r{{"type", "response"},   {"case_id", record.case_id}, {"model_id", o.model_id},
             {"retries", o.retries}, {"from_cache", o.from_cache}};
      if (o.verdict) {
        r["raw_text"] = o.verdict->raw_text;
        r["verdict"] = to_json(*o.verdict);
      } else if (o.error) {
        r["raw_text"] = o.error->raw_text ? json(*o.error->raw_text) : json(nullptr);
        r["error"] = to_json(*o.error);
      }
      records.push_back(std::move(r));
    }
    records.push_back({{"type", "case"}, {"case_id", record.case_id}, {"status", std::string(to_string(result.status))}});
    ctx.store->append_records(records);
  }
  return result;
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<int> select_cases(const RunOptions& options, const Resources& res) {
  if (options.cases.empty()) {
    std::vector<int> ids;
    for (const auto& r : res.dataset) ids.push_back(r.case_id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }
  std::vector<int> ids = options.cases;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) {
    if (res.find_case(id) == nullptr) {
      throw Error(ErrorCode::InvalidConfig, "case " + std::to_string(id) + " is not in the dataset");
    }
  }
  return ids;
}

/// Runs `fn` over the ids with at most `parallelism` workers; results come
/// back in id order and the first failure (by id) is rethrown.
template <typename Fn>
std::vector<CaseResult> run_bounded(const std::vector<int>& ids, std::size_t parallelism, Fn fn) {
  std::vector<std::optional<CaseResult>> slots(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> workers;
    const auto n = std::min(std::max<std::size_t>(parallelism, 1), ids.size());
    for (std::size_t w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) {
          try {
            slots[i] = fn(ids[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  std::vector<CaseResult> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

RunOutcome assemble(std::string mode, const RunConfig& config, const Resources& res,
                    std::vector<CaseResult> results, const std::vector<int>& ran, std::string started_at,
                    RunStore* store) {
  RunReport report;
  report.mode = std::move(mode);
  report.config = config_snapshot(config, res);
  for (const auto& e : config.endpoints) report.models.push_back(e.model_id);
  report.results = std::move(results);
  for (const auto& r : res.dataset) {
    if (std::find(ran.begin(), ran.end(), r.case_id) == ran.end()) report.missing_cases.push_back(r.case_id);
  }
  std::sort(report.missing_cases.begin(), report.missing_cases.end());
  report.summary = summarize(report.results, report.models);
  report.run_id = compute_run_id(report);
  report.started_at = std::move(started_at);
  report.finished_at = now_utc();

  RunOutcome outcome{std::move(report), std::nullopt};
  if (store != nullptr) outcome.run_dir = store->finalize(outcome.report);
  return outcome;
}

}  // namespace

RunOutcome replay(const fs::path& fixture_dir, const RunConfig& config, const RunOptions& options) {
  const auto started = now_utc();
  const auto res = load_resources(config);
  const auto ids = select_cases(options, res);
  validate_fixtures(fixture_dir, config, res, ids);

  std::optional<RunStore> store;
  if (options.out_dir) store.emplace(*options.out_dir);
  FixtureDetectionSource source(fixture_dir, config.images_dir);

  auto results = run_bounded(ids, config.case_parallelism, [&](int id) {
    FixtureChatTransport transport(load_response_fixture(fixture_dir, id));
    CaseContext ctx{config, res, source, transport, nullptr, store ? &*store : nullptr,
                    [](std::chrono::duration<double>) {}};
    return run_case(*res.find_case(id), ctx);
  });
  return assemble("replay", config, res, std::move(results), ids, started, store ? &*store : nullptr);
}

RunOutcome run_live(const RunConfig& config, const RunOptions& options) {
  const auto started = now_utc();
  const auto res = load_resources(config);
  DetectorClient client(config.detector_url, config.detector_timeout_s);
  if (!client.healthy()) {
    throw Error(ErrorCode::DetectorUnavailable, config.detector_url + " is not ready");
  }

  std::vector<int> ids;
  for (int id : select_cases(options, res)) {
    if (find_case_image(*res.find_case(id), config.images_dir)) ids.push_back(id);
  }
  if (ids.empty()) throw Error(ErrorCode::EmptyResults, "no selected case has an image");

  std::optional<RunStore> store;
  if (options.out_dir) store.emplace(*options.out_dir);
  std::optional<DirectoryResponseCache> cache;
  if (config.cache_dir) cache.emplace(*config.cache_dir);
  LiveDetectionSource source(client, config.images_dir);
  HttpChatTransport transport;

  auto results = run_bounded(ids, config.case_parallelism, [&](int id) {
    CaseContext ctx{config, res, source, transport, cache ? &*cache : nullptr, store ? &*store : nullptr, real_sleep};
    return run_case(*res.find_case(id), ctx);
  });
  return assemble("live", config, res, std::move(results), ids, started, store ? &*store : nullptr);
}

}  // namespace scenewatch
