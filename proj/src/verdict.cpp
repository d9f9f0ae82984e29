#include "scenewatch/verdict.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

Confidence Confidence::from_hundredths(int hundredths) {
  if (hundredths < 0 || hundredths > kMaxHundredths) {
    throw Error(ErrorCode::ConfidenceOutOfRange,
                std::to_string(hundredths / 100) + "." + std::to_string(std::abs(hundredths % 100)) +
                    "% is outside [0, 100]");
  }
  return Confidence(hundredths);
}

std::optional<Confidence> Confidence::parse(std::string_view text) noexcept {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  const auto dot = text.find('.');
  const auto int_part = text.substr(0, dot);
  const auto frac_part = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  const auto all_digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
  };
  if (int_part.empty() || int_part.size() > 3 || !all_digits(int_part)) return std::nullopt;
  if (dot != std::string_view::npos && (frac_part.empty() || frac_part.size() > 2)) return std::nullopt;
  if (!all_digits(frac_part)) return std::nullopt;

  int value = std::stoi(std::string(int_part)) * 100;
  if (frac_part.size() == 1) value += (frac_part[0] - '0') * 10;
  if (frac_part.size() == 2) value += (frac_part[0] - '0') * 10 + (frac_part[1] - '0');
  if (value > kMaxHundredths) return std::nullopt;
  return Confidence(value);
}

std::string Confidence::to_string() const {
  const int frac = hundredths_ % 100;
  return std::to_string(hundredths_ / 100) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

std::string Confidence::compact() const {
  auto s = to_string();
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string_view to_string(Label label) noexcept {
  return label == Label::Normal ? "Normal" : "Anomaly";
}

std::optional<Label> parse_label(std::string_view text) noexcept {
  const auto lowered = to_lower(trim(text));
  if (lowered == "normal") return Label::Normal;
  if (lowered == "anomaly" || lowered == "anomalous") return Label::Anomaly;
  return std::nullopt;
}

namespace {

constexpr std::string_view kKeyword = "confidence";
constexpr std::size_t kSearchWindow = 64;

struct FoundConfidence {
  long long hundredths = 0;
  bool negative = false;
  bool rounded = false;
  std::string literal;
  bool anomaly_form = false;
};

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// True when the word right before `pos` (skipping spaces and markdown) is
// "anomaly", as in "Anomaly Confidence: 85%".
bool preceded_by_anomaly(const std::string& lower, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && (lower[i - 1] == ' ' || lower[i - 1] == '\t' || lower[i - 1] == '*' ||
                   lower[i - 1] == '_' || lower[i - 1] == '-')) {
    --i;
  }
  const std::size_t end = i;
  while (i > 0 && std::isalpha(static_cast<unsigned char>(lower[i - 1]))) --i;
  return std::string_view(lower).substr(i, end - i) == "anomaly";
}

std::optional<FoundConfidence> find_confidence(const std::string& lower) {
  std::size_t search_from = 0;
  while (true) {
    const auto kw = lower.find(kKeyword, search_from);
    if (kw == std::string::npos) return std::nullopt;

    std::size_t i = kw + kKeyword.size();
    const std::size_t limit = std::min(lower.size(), i + kSearchWindow);
    while (i < limit) {
      if (!is_digit(lower[i])) {
        ++i;
        continue;
      }
      const std::size_t start = i;
      while (i < lower.size() && is_digit(lower[i])) ++i;
      const std::string int_digits = lower.substr(start, i - start);
      std::string frac_digits;
      if (i + 1 < lower.size() && (lower[i] == '.' || lower[i] == ',') && is_digit(lower[i + 1])) {
        const std::size_t frac_start = ++i;
        while (i < lower.size() && is_digit(lower[i])) ++i;
        frac_digits = lower.substr(frac_start, i - frac_start);
      }
      std::size_t j = i;
      while (j < lower.size() && lower[j] == ' ') ++j;
      const bool is_percentage =
          j < lower.size() && (lower[j] == '%' || std::string_view(lower).substr(j).starts_with("percent"));
      if (!is_percentage) continue;

      FoundConfidence found;
      found.literal = int_digits + (frac_digits.empty() ? "" : "." + frac_digits) + "%";
      found.negative = start > 0 && lower[start - 1] == '-' && (start < 2 || !is_digit(lower[start - 2]));
      // Anything with more than three integer digits is out of range anyway.
      const long long int_value = int_digits.size() > 4 ? 99999 : std::stoll(int_digits);
      long long hundredths = int_value * 100;
      if (!frac_digits.empty()) {
        hundredths += (frac_digits[0] - '0') * 10;
        if (frac_digits.size() >= 2) hundredths += frac_digits[1] - '0';
        if (frac_digits.size() >= 3) {
          found.rounded = true;
          if (frac_digits[2] >= '5') hundredths += 1;
        }
      }
      found.hundredths = hundredths;
      found.anomaly_form = preceded_by_anomaly(lower, kw);
      return found;
    }
    search_from = kw + kKeyword.size();
  }
}

std::optional<Label> label_from_capture(const std::string& word) {
  return word == "normal" ? Label::Normal : Label::Anomaly;
}

struct LabelMatch {
  Label label;
  std::size_t line;
  std::size_t column;
};

std::vector<LabelMatch> find_explicit_labels(const std::string& lower) {
  static const std::regex kKeyed(
      R"(\b(?:final classification|final verdict|final answer|classification|label|verdict|answer|conclusion|result|assessment|prediction)[\s*_`"']*[:=\-][\s*_`"'\[(]*(normal|anomalous|anomaly)\b)");
  static const std::regex kClassifiedAs(
      R"(\bclassif(?:y|ied|ies|ying)\b[^.\n]{0,40}?\bas\s+(?:an?\s+)?["'*_]*(normal|anomalous|anomaly)\b)");
  static const std::regex kSolo(
      R"(^[\s*_#>"'`\-\[(]*(normal|anomalous|anomaly)[\s*_"'`.!)\]]*$)");

  std::vector<LabelMatch> matches;
  std::size_t line_no = 0;
  std::size_t line_start = 0;
  while (line_start <= lower.size()) {
    auto line_end = lower.find('\n', line_start);
    if (line_end == std::string::npos) line_end = lower.size();
    const std::string line = lower.substr(line_start, line_end - line_start);

    for (const auto* re : {&kKeyed, &kClassifiedAs}) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), *re); it != std::sregex_iterator(); ++it) {
        matches.push_back({*label_from_capture((*it)[1].str()), line_no,
                           static_cast<std::size_t>(it->position(1))});
      }
    }
    std::smatch m;
    if (std::regex_match(line, m, kSolo)) {
      matches.push_back({*label_from_capture(m[1].str()), line_no, static_cast<std::size_t>(m.position(1))});
    }

    line_start = line_end + 1;
    ++line_no;
  }
  std::sort(matches.begin(), matches.end(), [](const LabelMatch& a, const LabelMatch& b) {
    return a.line != b.line ? a.line < b.line : a.column < b.column;
  });
  return matches;
}

}  // namespace

LlmVerdict parse_verdict(std::string_view model_id, std::string_view raw) {
  const auto lower = to_lower(raw);

  const auto found = find_confidence(lower);
  if (!found) throw Error(ErrorCode::NoConfidenceFound, "no percentage follows 'confidence'");
  if (found->negative || found->hundredths > Confidence::kMaxHundredths) {
    throw Error(ErrorCode::ConfidenceOutOfRange,
                (found->negative ? "-" : "") + found->literal + " is outside [0, 100]");
  }

  LlmVerdict verdict;
  verdict.model_id = std::string(model_id);
  verdict.raw_text = std::string(raw);
  verdict.confidence = Confidence::from_hundredths(static_cast<int>(found->hundredths));
  if (found->rounded) {
    verdict.parse_notes.push_back("confidence " + found->literal + " rounded to " +
                                  verdict.confidence.to_string() + "%");
  }

  const auto labels = find_explicit_labels(lower);
  if (!labels.empty()) {
    verdict.label = labels.back().label;
    const bool conflicting = std::any_of(labels.begin(), labels.end(), [&](const LabelMatch& m) {
      return m.label != verdict.label;
    });
    if (conflicting) {
      verdict.parse_notes.push_back("conflicting labels in response; using the last one (" +
                                    std::string(to_string(verdict.label)) + ")");
    }
  } else if (found->anomaly_form) {
    const bool anomaly = found->hundredths >= kAnomalyInferenceHundredths;
    verdict.label = anomaly ? Label::Anomaly : Label::Normal;
    verdict.parse_notes.push_back("label inferred from anomaly confidence " +
                                  verdict.confidence.to_string() + "% (" +
                                  (anomaly ? ">= 50" : "< 50") + " -> " +
                                  std::string(to_string(verdict.label)) + ")");
  } else {
    throw Error(ErrorCode::NoLabelFound, "no Normal/Anomaly verdict in response");
  }
  return verdict;
}

nlohmann::json to_json(const LlmVerdict& verdict) {
  return {{"model_id", verdict.model_id},
          {"label", std::string(to_string(verdict.label))},
          {"confidence_pct", verdict.confidence.to_string()},
          {"raw_text", verdict.raw_text},
          {"parse_notes", verdict.parse_notes}};
}

LlmVerdict verdict_from_json(const nlohmann::json& j) {
  try {
    LlmVerdict v;
    v.model_id = j.at("model_id").get<std::string>();
    const auto label = parse_label(j.at("label").get<std::string>());
    const auto conf = Confidence::parse(j.at("confidence_pct").get<std::string>());
    if (!label || !conf) throw Error(ErrorCode::MalformedDocument, "bad verdict label or confidence");
    v.label = *label;
    v.confidence = *conf;
    v.raw_text = j.at("raw_text").get<std::string>();
    v.parse_notes = j.at("parse_notes").get<std::vector<std::string>>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, std::string("verdict record: ") + e.what());
  }
}

}  // namespace scenewatch
