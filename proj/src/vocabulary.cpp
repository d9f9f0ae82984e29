#include "scenewatch/vocabulary.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_set>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(QueryKind kind) noexcept {
  return kind == QueryKind::Normal ? "normal" : "anomaly";
}

std::optional<QueryKind> parse_query_kind(std::string_view text) noexcept {
  const auto lowered = to_lower(text);
  if (lowered == "normal") return QueryKind::Normal;
  if (lowered == "anomaly") return QueryKind::Anomaly;
  return std::nullopt;
}

namespace {

void check_phrase(const std::string& phrase, const std::string& group) {
  if (phrase.empty()) {
    throw Error(ErrorCode::MalformedDocument, "empty phrase in group '" + group + "'");
  }
  if (trim(phrase).size() != phrase.size()) {
    throw Error(ErrorCode::MalformedDocument,
                "phrase '" + phrase + "' has leading or trailing whitespace");
  }
  for (unsigned char c : phrase) {
    if (c < 0x20 || c == 0x7f) {
      throw Error(ErrorCode::MalformedDocument,
                  "phrase in group '" + group + "' contains a control character");
    }
  }
}

}  // namespace

QueryVocabulary QueryVocabulary::create(std::vector<VocabularyEntry> normal,
                                        std::vector<VocabularyEntry> anomaly,
                                        std::string version) {
  if (normal.empty()) throw Error(ErrorCode::EmptyVocabulary, "no normal-object phrases");
  if (anomaly.empty()) throw Error(ErrorCode::EmptyVocabulary, "no anomaly phrases");

  std::unordered_set<std::string> seen;
  for (const auto* list : {&normal, &anomaly}) {
    for (const auto& entry : *list) {
      check_phrase(entry.phrase, entry.group);
      if (!seen.insert(to_lower(entry.phrase)).second) {
        throw Error(ErrorCode::DuplicatePhrase, entry.phrase);
      }
    }
  }

  QueryVocabulary vocab;
  vocab.normal_ = std::move(normal);
  vocab.anomaly_ = std::move(anomaly);
  vocab.version_ = std::move(version);
  return vocab;
}

std::vector<std::string> QueryVocabulary::normal_queries() const {
  std::vector<std::string> out;
  out.reserve(normal_.size());
  for (const auto& e : normal_) out.push_back(e.phrase);
  return out;
}

std::vector<std::string> QueryVocabulary::anomaly_queries() const {
  std::vector<std::string> out;
  out.reserve(anomaly_.size());
  for (const auto& e : anomaly_) out.push_back(e.phrase);
  return out;
}

std::vector<std::string> QueryVocabulary::normal_groups() const {
  std::vector<std::string> groups;
  for (const auto& e : normal_) {
    if (std::find(groups.begin(), groups.end(), e.group) == groups.end()) {
      groups.push_back(e.group);
    }
  }
  return groups;
}

QueryVocabulary load_vocabulary(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::MalformedDocument, "vocabulary document must be an object");
  }

  const auto read_list = [](const ordered_json& value, const std::string& group) {
    if (!value.is_array()) {
      throw Error(ErrorCode::MalformedDocument, "group '" + group + "' is not a list");
    }
    std::vector<VocabularyEntry> out;
    for (const auto& item : value) {
      if (!item.is_string()) {
        throw Error(ErrorCode::MalformedDocument,
                    "group '" + group + "' contains a non-string entry");
      }
      out.push_back({item.get<std::string>(), group});
    }
    return out;
  };

  std::vector<VocabularyEntry> normal;
  std::optional<std::vector<VocabularyEntry>> anomaly;
  std::string version;
  for (const auto& [key, value] : doc.items()) {
    if (key.starts_with('_')) continue;
    if (key == "version") {
      if (value.is_string()) {
        version = value.get<std::string>();
      } else if (value.is_number_integer()) {
        version = std::to_string(value.get<long long>());
      } else {
        throw Error(ErrorCode::MalformedDocument, "version must be a string or integer");
      }
      continue;
    }
    auto entries = read_list(value, key);
    if (key == QueryVocabulary::kAnomalyGroup) {
      anomaly = std::move(entries);
    } else {
      normal.insert(normal.end(), std::make_move_iterator(entries.begin()),
                    std::make_move_iterator(entries.end()));
    }
  }
  if (!anomaly) {
    throw Error(ErrorCode::MalformedDocument,
                std::string("missing '") + std::string(QueryVocabulary::kAnomalyGroup) + "' list");
  }
  return QueryVocabulary::create(std::move(normal), std::move(*anomaly), std::move(version));
}

QueryVocabulary load_vocabulary_file(const std::filesystem::path& path) {
  return load_vocabulary(read_file(path));
}

std::string render_vocabulary(const QueryVocabulary& vocab) {
  ordered_json doc = ordered_json::object();
  if (!vocab.version().empty()) doc["version"] = vocab.version();
  for (const auto& e : vocab.normal()) {
    auto& group = doc[e.group];
    if (group.is_null()) group = ordered_json::array();
    group.push_back(e.phrase);
  }
  auto& edge = doc[std::string(QueryVocabulary::kAnomalyGroup)];
  edge = ordered_json::array();
  for (const auto& e : vocab.anomaly()) edge.push_back(e.phrase);
  return doc.dump(2) + "\n";
}

const std::string& QueryBundle::resolve(QueryKind kind, std::size_t index) const {
  const auto& list = prompt(kind);
  if (index >= list.size()) {
    throw Error(ErrorCode::UnresolvableQueryIndex,
                std::string(to_string(kind)) + " query index " + std::to_string(index) +
                    " out of range (size " + std::to_string(list.size()) + ")");
  }
  return list[index];
}

QueryBundle compose_queries(const QueryVocabulary& vocab) {
  return QueryBundle{vocab.normal_queries(), vocab.anomaly_queries()};
}

}  // namespace scenewatch
