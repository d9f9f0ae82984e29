#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "scenewatch/config.hpp"
#include "scenewatch/dataset.hpp"
#include "scenewatch/detector.hpp"
#include "scenewatch/image.hpp"
#include "scenewatch/report.hpp"
#include "scenewatch/vocabulary.hpp"

namespace scenewatch {

/// Loaded, validated inputs shared by every case of a run.
struct Resources {
  QueryVocabulary vocabulary;
  QueryBundle bundle;
  TemplateRegistry templates;
  std::string template_id;
  std::string vocabulary_sha256;
  std::vector<EdgeCaseRecord> dataset;

  const EdgeCaseRecord* find_case(int case_id) const noexcept;
};

Resources load_resources(const RunConfig& config);

/// Config snapshot plus the resolved template id and vocabulary digest.
nlohmann::json config_snapshot(const RunConfig& config, const Resources& resources);

struct SceneInput {
  DetectResponse response;
  ImageSize size;
  std::optional<Image> image;  // absent when no source image is available
};

class DetectionSource {
 public:
  virtual ~DetectionSource() = default;
  virtual SceneInput acquire(const EdgeCaseRecord& record, const QueryBundle& bundle) = 0;
};

/// Reads `<dir>/case_NN/detections.json`; loads the case image when one is
/// configured and present.
class FixtureDetectionSource final : public DetectionSource {
 public:
  FixtureDetectionSource(std::filesystem::path fixture_dir,
                         std::optional<std::filesystem::path> images_dir = std::nullopt);
  SceneInput acquire(const EdgeCaseRecord& record, const QueryBundle& bundle) override;

 private:
  std::filesystem::path dir_;
  std::optional<std::filesystem::path> images_dir_;
};

/// Sends the case image to the detector sidecar.
class LiveDetectionSource final : public DetectionSource {
 public:
  LiveDetectionSource(DetectorClient client, std::optional<std::filesystem::path> images_dir);
  SceneInput acquire(const EdgeCaseRecord& record, const QueryBundle& bundle) override;

 private:
  DetectorClient client_;
  std::optional<std::filesystem::path> images_dir_;
};

/// Image for a case: `images_dir/case_NN.{png,jpg,jpeg,ppm}` first, then the
/// record's own image_path.
std::optional<std::filesystem::path> find_case_image(const EdgeCaseRecord& record,
                                                     const std::optional<std::filesystem::path>& images_dir);

std::string case_dir_name(int case_id);

/// Serves recorded raw responses as chat completions.
class FixtureChatTransport final : public ChatTransport {
 public:
  explicit FixtureChatTransport(std::map<std::string, std::string> raw_by_model);
  HttpResponse post(const ModelEndpoint& endpoint, const std::string& body) override;

 private:
  std::map<std::string, std::string> raw_by_model_;
};

/// Reads `<dir>/case_NN/responses.json`. Throws FixtureMissing or
/// FixtureSchemaMismatch naming the file.
std::map<std::string, std::string> load_response_fixture(const std::filesystem::path& fixture_dir,
                                                         int case_id);

/// Checks detection and response fixtures of the given cases against the
/// vocabulary and configured models. Throws FixtureMissing or
/// FixtureSchemaMismatch naming the offending file.
void validate_fixtures(const std::filesystem::path& fixture_dir, const RunConfig& config,
                       const Resources& resources, const std::vector<int>& case_ids);

/// Writes one run directory. Files land in a staging directory that is
/// renamed to `<out>/<run_id>` by finalize(); an existing run directory with
/// the same id is kept as is. All writes are serialized.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path out_dir);
  ~RunStore();
  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  void write_text(const std::string& relative, std::string_view contents);
  void write_image(const std::string& relative, const Image& image);
  void append_records(const std::vector<nlohmann::json>& records);
  std::filesystem::path finalize(const RunReport& report);

 private:
  std::filesystem::path out_dir_;
  std::filesystem::path staging_;
  std::mutex mutex_;
  bool finalized_ = false;
};

struct CaseContext {
  const RunConfig& config;
  const Resources& resources;
  DetectionSource& source;
  ChatTransport& transport;
  ResponseCache* cache = nullptr;
  RunStore* store = nullptr;
  Sleeper sleep = real_sleep;
};

/// detect, filter, describe, prompt, fan out. Per-model failures are
/// recorded in the result; only detection-stage errors propagate.
CaseResult run_case(const EdgeCaseRecord& record, CaseContext& ctx);

struct RunOptions {
  std::vector<int> cases;  // empty: every dataset case
  std::optional<std::filesystem::path> out_dir;
};

struct RunOutcome {
  RunReport report;
  std::optional<std::filesystem::path> run_dir;
};

/// Full pipeline with detections and LLM answers read from fixtures.
RunOutcome replay(const std::filesystem::path& fixture_dir, const RunConfig& config,
                  const RunOptions& options = {});

/// Full pipeline against the detector sidecar and the configured endpoints.
/// Throws DetectorUnavailable before any LLM call when the detector is down.
RunOutcome run_live(const RunConfig& config, const RunOptions& options = {});

/// Overlay for one detection fixture; a neutral canvas of the recorded size
/// stands in when no image is available.
Image render_case_overlay(const SceneInput& input, const std::vector<Detection>& detections);

}  // namespace scenewatch
