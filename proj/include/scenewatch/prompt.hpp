#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scenewatch/scene.hpp"

namespace scenewatch {

struct PlatformContext {
  std::string vehicle_profile;
  std::string operating_domain;

  /// The context used when a run does not configure one.
  static PlatformContext reference();

  bool operator==(const PlatformContext&) const = default;
};

/// A prompt template document. Headings and fixed text are data so that runs
/// can pin an exact template version.
struct PromptTemplate {
  std::string id;  // "<stem>-<first 8 hex of sha256(document)>"
  std::string system_preamble;
  std::string platform_heading;
  std::string reasoning_heading;
  std::vector<std::string> reasoning_scaffold;
  std::string scene_heading;
  std::string empty_scene_text;
  std::string output_contract;
};

/// Parses a template document (JSON object, comments allowed). The output
/// contract must name "Normal" and "Anomaly" exactly once each and ask for a
/// percentage. Throws Error{MalformedDocument}.
PromptTemplate parse_template(std::string_view stem, std::string_view document);

class TemplateRegistry {
 public:
  /// Registers a template; returns its id.
  const std::string& add(PromptTemplate tmpl);
  const std::string& add_document(std::string_view stem, std::string_view document);
  /// Registers every *.json file in `dir`.
  void add_directory(const std::filesystem::path& dir);

  /// Exact id, or a bare stem when exactly one registered id has that stem.
  /// Throws Error{UnknownTemplate}.
  const PromptTemplate& get(std::string_view id_or_stem) const;
  bool contains(std::string_view id_or_stem) const noexcept;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct PromptEnvelope {
  std::string template_id;  // metadata; not part of the rendered text
  std::string system_preamble;
  std::string platform_section;
  std::string reasoning_heading;
  std::vector<std::string> reasoning_scaffold;
  std::string scene_section;
  std::string output_contract;

  bool operator==(const PromptEnvelope&) const = default;
};

/// Throws UnknownTemplate or InvalidContext (empty vehicle profile).
PromptEnvelope build_prompt(const SceneDescription& scene, const PlatformContext& ctx,
                            std::string_view template_id, const TemplateRegistry& registry);

/// Sections in order preamble, platform, scaffold, scene, contract; separated
/// by one blank line; empty sections omitted; exactly one trailing newline.
std::string render(const PromptEnvelope& envelope);

}  // namespace scenewatch
