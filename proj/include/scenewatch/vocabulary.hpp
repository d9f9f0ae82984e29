#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenewatch {

enum class QueryKind { Normal, Anomaly };

std::string_view to_string(QueryKind kind) noexcept;
/// Accepts "normal"/"anomaly" (any case).
std::optional<QueryKind> parse_query_kind(std::string_view text) noexcept;

/// One detector query phrase. `group` is the vocabulary-document key the
/// phrase was listed under (e.g. "common_road_objects", "edge_cases").
struct VocabularyEntry {
  std::string phrase;
  std::string group;

  bool operator==(const VocabularyEntry&) const = default;
};

/// Validated pair of query lists. Construction enforces: both lists
/// non-empty, phrases trimmed and single-line, no case-insensitive duplicate
/// anywhere across the two lists. A phrase's position is its detector query
/// index within its list.
class QueryVocabulary {
 public:
  static constexpr std::string_view kAnomalyGroup = "edge_cases";

  static QueryVocabulary create(std::vector<VocabularyEntry> normal,
                                std::vector<VocabularyEntry> anomaly,
                                std::string version = {});

  const std::vector<VocabularyEntry>& normal() const noexcept { return normal_; }
  const std::vector<VocabularyEntry>& anomaly() const noexcept { return anomaly_; }
  const std::string& version() const noexcept { return version_; }

  std::vector<std::string> normal_queries() const;
  std::vector<std::string> anomaly_queries() const;

  /// Normal-group keys in first-appearance order.
  std::vector<std::string> normal_groups() const;

  bool operator==(const QueryVocabulary&) const = default;

 private:
  QueryVocabulary() = default;

  std::vector<VocabularyEntry> normal_;
  std::vector<VocabularyEntry> anomaly_;
  std::string version_;
};

/// Parses a vocabulary document: a JSON object (comments allowed) whose
/// `edge_cases` key lists anomaly phrases and whose other array-valued keys
/// are normal-object groups, flattened in document order. An optional
/// `version` key is carried through; keys starting with '_' are ignored.
QueryVocabulary load_vocabulary(std::string_view document);
QueryVocabulary load_vocabulary_file(const std::filesystem::path& path);

/// Inverse of load_vocabulary (modulo comments and whitespace).
std::string render_vocabulary(const QueryVocabulary& vocab);

/// The two text-query lists issued per image.
struct QueryBundle {
  std::vector<std::string> normal_prompt;
  std::vector<std::string> anomaly_prompt;

  const std::vector<std::string>& prompt(QueryKind kind) const noexcept {
    return kind == QueryKind::Normal ? normal_prompt : anomaly_prompt;
  }

  /// Throws Error{UnresolvableQueryIndex} when out of range.
  const std::string& resolve(QueryKind kind, std::size_t index) const;

  bool operator==(const QueryBundle&) const = default;
};

QueryBundle compose_queries(const QueryVocabulary& vocab);

}  // namespace scenewatch
