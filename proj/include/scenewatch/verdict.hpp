#pragma once

#include <nlohmann/json.hpp>

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenewatch {

/// A percentage in [0, 100] held as integer hundredths, so values such as
/// 85.71 and 14.28 survive storage and comparison without float drift.
class Confidence {
 public:
  static constexpr int kMaxHundredths = 100 * 100;

  constexpr Confidence() = default;
  /// Throws Error{ConfidenceOutOfRange} outside [0, 10000].
  static Confidence from_hundredths(int hundredths);
  /// Parses "95", "85.71", "66.7" (at most two fractional digits).
  static std::optional<Confidence> parse(std::string_view text) noexcept;

  constexpr int hundredths() const noexcept { return hundredths_; }
  double percent() const noexcept { return hundredths_ / 100.0; }

  /// Two fixed decimals: "95.00", "85.71".
  std::string to_string() const;
  /// Trailing fractional zeros dropped: "95", "85.71", "66.7".
  std::string compact() const;

  constexpr auto operator<=>(const Confidence&) const = default;

 private:
  constexpr explicit Confidence(int h) : hundredths_(h) {}
  int hundredths_ = 0;
};

enum class Label { Normal, Anomaly };

std::string_view to_string(Label label) noexcept;
std::optional<Label> parse_label(std::string_view text) noexcept;

struct LlmVerdict {
  std::string model_id;
  Label label = Label::Normal;
  Confidence confidence;
  std::string raw_text;
  std::vector<std::string> parse_notes;

  bool operator==(const LlmVerdict&) const = default;
};

/// Confidence at or above which a bare "Anomaly Confidence: p%" reply is
/// read as an Anomaly verdict.
inline constexpr int kAnomalyInferenceHundredths = 50 * 100;

/// Extracts a verdict from free-form model output.
///
/// Confidence: the first `<number>%` after an occurrence of the word
/// "confidence" (case-insensitive, same neighbourhood, integer or decimal,
/// '.' or ',' as separator). More than two decimals are rounded half-up with
/// a note.
///
/// Label: the last explicit verdict in the text, i.e. `Classification:`,
/// `Label:`, `Verdict:`, `Answer:`, `Conclusion:` (and similar) followed by
/// Normal/Anomaly/Anomalous, "classified as ...", or a line holding only the
/// label word. When there is none and the confidence was written as
/// "Anomaly Confidence: p%", the label is Anomaly for p >= 50 and Normal
/// otherwise, recorded in parse_notes.
///
/// Throws Error{NoConfidenceFound}, Error{ConfidenceOutOfRange} or
/// Error{NoLabelFound}, checked in that order.
LlmVerdict parse_verdict(std::string_view model_id, std::string_view raw);

nlohmann::json to_json(const LlmVerdict& verdict);
LlmVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace scenewatch
