#include "scenewatch/scene.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <unordered_map>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

namespace {

// Words whose article does not follow the vowel-letter rule.
const std::unordered_map<std::string_view, std::string_view>& article_exceptions() {
  static const std::unordered_map<std::string_view, std::string_view> table{
      {"suv", "an"},      {"hour", "an"},       {"honest", "an"},   {"heir", "an"},
      {"x-ray", "an"},    {"mri", "an"},        {"one", "a"},       {"one-way", "a"},
      {"unit", "a"},      {"uniform", "a"},     {"union", "a"},     {"university", "a"},
      {"utility", "a"},   {"used", "a"},        {"user", "a"},      {"usb", "a"},
      {"u-turn", "a"},    {"european", "a"},    {"euro", "a"},      {"ufo", "a"},
  };
  return table;
}

// First words after which an anomaly phrase already reads as a complete noun
// phrase: determiners, quantifiers, partitive heads ("rear of ...") and
// compound heads that are usually plural or mass ("road ...").
bool takes_no_article(std::string_view first_word) {
  static constexpr std::array<std::string_view, 18> kBare{
      "a",    "an",    "the",   "this", "that",  "these",   "those",   "some",     "rear",
      "front", "side", "top",   "road", "two",   "several", "many",    "multiple", "no"};
  return std::find(kBare.begin(), kBare.end(), first_word) != kBare.end();
}

std::string_view first_word(std::string_view phrase) {
  phrase = trim(phrase);
  const auto end = phrase.find(' ');
  return end == std::string_view::npos ? phrase : phrase.substr(0, end);
}

bool is_acronym(std::string_view word) {
  if (word.size() < 2) return false;
  return std::all_of(word.begin(), word.end(), [](unsigned char c) {
    return std::isupper(c) || std::isdigit(c) || c == '-';
  });
}

// Lowercases every word except all-caps acronyms ("SUV" stays "SUV").
std::string lowercase_label(std::string_view label) {
  std::string out;
  std::size_t start = 0;
  while (start <= label.size()) {
    const auto end = std::min(label.find(' ', start), label.size());
    const auto word = label.substr(start, end - start);
    if (!out.empty()) out.push_back(' ');
    out += is_acronym(word) ? std::string(word) : to_lower(word);
    start = end + 1;
  }
  return out;
}

bool is_vowel(char c) {
  switch (std::tolower(static_cast<unsigned char>(c))) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return true;
    default: return false;
  }
}

std::string with_article(std::string_view phrase) {
  return std::string(indefinite_article(phrase)) + " " + std::string(phrase);
}

}  // namespace

std::string_view indefinite_article(std::string_view phrase) {
  const auto word = to_lower(first_word(phrase));
  if (word.empty()) return "a";
  const auto& table = article_exceptions();
  if (const auto it = table.find(word); it != table.end()) return it->second;
  return is_vowel(word.front()) ? "an" : "a";
}

std::string pluralize(std::string_view noun_phrase) {
  static const std::unordered_map<std::string_view, std::string_view> kIrregular{
      {"person", "people"}, {"man", "men"},     {"woman", "women"},
      {"child", "children"}, {"sheep", "sheep"}, {"signage", "signage"},
  };
  const auto split = noun_phrase.rfind(' ');
  const auto head = split == std::string_view::npos ? std::string_view{}
                                                    : noun_phrase.substr(0, split + 1);
  const std::string word(split == std::string_view::npos ? noun_phrase
                                                         : noun_phrase.substr(split + 1));
  if (word.empty()) return std::string(noun_phrase);

  const auto lower = to_lower(word);
  if (const auto it = kIrregular.find(lower); it != kIrregular.end()) {
    return std::string(head) + std::string(it->second);
  }
  if (is_acronym(word)) return std::string(head) + word + "s";

  const auto ends_with = [&](std::string_view suffix) { return lower.ends_with(suffix); };
  std::string plural = word;
  if (ends_with("ss") || ends_with("us") || ends_with("x") || ends_with("z") ||
      ends_with("ch") || ends_with("sh")) {
    plural += "es";
  } else if (ends_with("s")) {
    // already plural ("sign panels")
  } else if (lower.size() >= 2 && lower.back() == 'y' && !is_vowel(lower[lower.size() - 2])) {
    plural.pop_back();
    plural += "ies";
  } else {
    plural += "s";
  }
  return std::string(head) + plural;
}

std::string count_word(std::size_t n) {
  static constexpr std::array<std::string_view, 11> kWords{
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  return n < kWords.size() ? std::string(kWords[n]) : std::to_string(n);
}

std::string phrase_for(const Detection& det) {
  if (det.kind == QueryKind::Anomaly) {
    if (takes_no_article(to_lower(first_word(det.label)))) return det.label;
    return with_article(det.label);
  }
  return with_article(lowercase_label(det.label));
}

std::vector<std::string> SceneDescription::lines() const {
  std::vector<std::string> out;
  out.reserve(phrases.size());
  for (const auto& p : phrases) out.push_back(p.text);
  return out;
}

SceneDescription describe_scene(std::span<const Detection> dets, std::optional<int> case_id,
                                const SceneOptions& options) {
  struct Group {
    const Detection* first = nullptr;
    std::size_t count = 0;
    double best = 0.0;
  };

  SceneDescription scene;
  scene.case_id = case_id;

  for (const auto kind : {QueryKind::Normal, QueryKind::Anomaly}) {
    std::vector<Group> groups;
    std::map<std::string, std::size_t> by_label;
    for (const auto& d : dets) {
      if (d.kind != kind) continue;
      if (options.collapse_duplicates) {
        const auto [it, inserted] = by_label.try_emplace(d.label, groups.size());
        if (!inserted) {
          auto& g = groups[it->second];
          ++g.count;
          g.best = std::max(g.best, d.score);
          continue;
        }
      }
      groups.push_back(Group{&d, 1, d.score});
    }

    if (options.order_by_score) {
      std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
        if (a.best != b.best) return a.best > b.best;
        return a.first->label < b.first->label;
      });
    }

    for (const auto& g : groups) {
      ScenePhrase phrase;
      phrase.kind = kind;
      phrase.score = g.best;
      phrase.label = g.first->label;
      phrase.multiplicity = g.count;
      if (kind == QueryKind::Normal && g.count > 1) {
        phrase.text = count_word(g.count) + " " + pluralize(lowercase_label(g.first->label));
      } else {
        phrase.text = phrase_for(*g.first);
      }
      scene.phrases.push_back(std::move(phrase));
    }
  }

  scene.has_anomaly_phrase = std::any_of(scene.phrases.begin(), scene.phrases.end(),
                                         [](const ScenePhrase& p) { return p.kind == QueryKind::Anomaly; });
  return scene;
}

nlohmann::json to_json(const SceneDescription& scene) {
  nlohmann::json phrases = nlohmann::json::array();
  for (const auto& p : scene.phrases) {
    phrases.push_back({{"text", p.text},
                       {"kind", std::string(to_string(p.kind))},
                       {"score", p.score},
                       {"label", p.label},
                       {"multiplicity", p.multiplicity}});
  }
  return {{"case_id", scene.case_id ? nlohmann::json(*scene.case_id) : nlohmann::json(nullptr)},
          {"has_anomaly_phrase", scene.has_anomaly_phrase},
          {"phrases", std::move(phrases)}};
}

SceneDescription scene_from_json(const nlohmann::json& j) {
  try {
    SceneDescription scene;
    if (!j.at("case_id").is_null()) scene.case_id = j.at("case_id").get<int>();
    scene.has_anomaly_phrase = j.at("has_anomaly_phrase").get<bool>();
    for (const auto& p : j.at("phrases")) {
      ScenePhrase phrase;
      phrase.text = p.at("text").get<std::string>();
      const auto kind = parse_query_kind(p.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::MalformedDocument, "bad phrase kind");
      phrase.kind = *kind;
      phrase.score = p.at("score").get<double>();
      phrase.label = p.at("label").get<std::string>();
      phrase.multiplicity = p.at("multiplicity").get<std::size_t>();
      scene.phrases.push_back(std::move(phrase));
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("scene record: ") + e.what());
  }
}

}  // namespace scenewatch
