#include "scenewatch/prompt.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <regex>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

PlatformContext PlatformContext::reference() {
  return PlatformContext{
      "Passenger car with an automated driving system that relies on camera-based perception "
      "for object detection, traffic light and traffic sign recognition, and lane keeping. "
      "It follows traffic rules literally and stops for any detected stop sign or red light.",
      "Public roads: urban streets, rural roads and highways, in mixed traffic.",
  };
}

namespace {

std::size_t count_word_occurrences(const std::string& text, const std::string& word) {
  const std::regex re("\\b" + word + "\\b");
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

std::string chomp(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) {
    s.remove_suffix(1);
  }
  return std::string(s);
}

}  // namespace

PromptTemplate parse_template(std::string_view stem, std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, "template '" + std::string(stem) + "': " + e.what());
  }

  PromptTemplate t;
  try {
    t.system_preamble = doc.at("system_preamble").get<std::string>();
    t.platform_heading = doc.value("platform_heading", std::string("Platform context"));
    t.reasoning_heading = doc.value("reasoning_heading", std::string("Reasoning steps"));
    t.reasoning_scaffold = doc.value("reasoning_scaffold", std::vector<std::string>{});
    t.scene_heading = doc.value("scene_heading", std::string("Scene description"));
    t.empty_scene_text = doc.at("empty_scene_text").get<std::string>();
    t.output_contract = doc.at("output_contract").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, "template '" + std::string(stem) + "': " + e.what());
  }

  if (count_word_occurrences(t.output_contract, "Normal") != 1 ||
      count_word_occurrences(t.output_contract, "Anomaly") != 1) {
    throw Error(ErrorCode::MalformedDocument,
                "template '" + std::string(stem) +
                    "': output contract must name Normal and Anomaly exactly once each");
  }
  if (t.output_contract.find('%') == std::string::npos &&
      to_lower(t.output_contract).find("percent") == std::string::npos) {
    throw Error(ErrorCode::MalformedDocument,
                "template '" + std::string(stem) + "': output contract must request a percentage");
  }

  t.id = std::string(stem) + "-" + sha256_hex(document).substr(0, 8);
  return t;
}

const std::string& TemplateRegistry::add(PromptTemplate tmpl) {
  auto id = tmpl.id;
  auto [it, inserted] = templates_.insert_or_assign(std::move(id), std::move(tmpl));
  return it->first;
}

const std::string& TemplateRegistry::add_document(std::string_view stem, std::string_view document) {
  return add(parse_template(stem, document));
}

void TemplateRegistry::add_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::Io, "template directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add_document(f.stem().string(), read_file(f));
}

const PromptTemplate& TemplateRegistry::get(std::string_view id_or_stem) const {
  if (const auto it = templates_.find(id_or_stem); it != templates_.end()) return it->second;

  const PromptTemplate* match = nullptr;
  for (const auto& [id, tmpl] : templates_) {
    const auto dash = id.rfind('-');
    if (dash != std::string::npos && std::string_view(id).substr(0, dash) == id_or_stem) {
      if (match != nullptr) {
        throw Error(ErrorCode::UnknownTemplate,
                    "'" + std::string(id_or_stem) + "' matches several template versions");
      }
      match = &tmpl;
    }
  }
  if (match == nullptr) throw Error(ErrorCode::UnknownTemplate, std::string(id_or_stem));
  return *match;
}

bool TemplateRegistry::contains(std::string_view id_or_stem) const noexcept {
  try {
    get(id_or_stem);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

PromptEnvelope build_prompt(const SceneDescription& scene, const PlatformContext& ctx,
                            std::string_view template_id, const TemplateRegistry& registry) {
  const auto& tmpl = registry.get(template_id);
  if (trim(ctx.vehicle_profile).empty()) {
    throw Error(ErrorCode::InvalidContext, "vehicle profile is empty");
  }

  PromptEnvelope env;
  env.template_id = tmpl.id;
  env.system_preamble = chomp(tmpl.system_preamble);

  env.platform_section = tmpl.platform_heading + ":\nVehicle: " + chomp(ctx.vehicle_profile);
  if (!trim(ctx.operating_domain).empty()) {
    env.platform_section += "\nOperating domain: " + chomp(ctx.operating_domain);
  }

  env.reasoning_heading = tmpl.reasoning_heading;
  env.reasoning_scaffold = tmpl.reasoning_scaffold;

  env.scene_section = tmpl.scene_heading + ":";
  if (scene.empty()) {
    env.scene_section += "\n" + chomp(tmpl.empty_scene_text);
  } else {
    for (const auto& line : scene.lines()) env.scene_section += "\n- " + line;
  }

  env.output_contract = chomp(tmpl.output_contract);
  return env;
}

std::string render(const PromptEnvelope& envelope) {
  std::vector<std::string> sections;
  const auto push = [&](std::string s) {
    if (!s.empty()) sections.push_back(std::move(s));
  };

  push(chomp(envelope.system_preamble));
  push(chomp(envelope.platform_section));
  if (!envelope.reasoning_scaffold.empty()) {
    std::string scaffold = envelope.reasoning_heading + ":";
    for (std::size_t i = 0; i < envelope.reasoning_scaffold.size(); ++i) {
      scaffold += "\n" + std::to_string(i + 1) + ". " + chomp(envelope.reasoning_scaffold[i]);
    }
    push(std::move(scaffold));
  }
  push(chomp(envelope.scene_section));
  push(chomp(envelope.output_contract));

  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += sections[i];
  }
  out += "\n";
  return out;
}

}  // namespace scenewatch
