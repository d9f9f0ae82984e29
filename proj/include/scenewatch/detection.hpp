#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scenewatch/vocabulary.hpp"

namespace scenewatch {

/// Detector box: center and extent as fractions of the detector input frame.
struct NormalizedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const NormalizedBox&) const = default;
};

/// Corner box in original-image pixels (COCO x0, y0, x1, y1).
struct PixelBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
  double area() const noexcept { return width() * height(); }

  bool operator==(const PixelBox&) const = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;

  bool operator==(const ImageSize&) const = default;
};

struct RawDetection {
  QueryKind query_kind = QueryKind::Normal;
  std::size_t query_index = 0;
  double score = 0.0;
  NormalizedBox box;

  bool operator==(const RawDetection&) const = default;
};

struct Detection {
  std::string label;
  QueryKind kind = QueryKind::Normal;
  double score = 0.0;
  PixelBox box;

  bool operator==(const Detection&) const = default;
};

/// Per-kind retention thresholds; a detection is kept when its score is
/// strictly greater than the threshold for its kind.
class ThresholdPolicy {
 public:
  static constexpr double kDefaultNormal = 0.25;
  static constexpr double kDefaultAnomaly = 0.10;

  ThresholdPolicy() = default;
  /// Throws Error{InvalidThreshold} unless both values lie in [0, 1].
  ThresholdPolicy(double normal, double anomaly);

  double normal() const noexcept { return normal_; }
  double anomaly() const noexcept { return anomaly_; }
  double for_kind(QueryKind kind) const noexcept {
    return kind == QueryKind::Normal ? normal_ : anomaly_;
  }
  bool retains(QueryKind kind, double score) const noexcept {
    return score > for_kind(kind);
  }

  bool operator==(const ThresholdPolicy&) const = default;

 private:
  double normal_ = kDefaultNormal;
  double anomaly_ = kDefaultAnomaly;
};

/// Throws NonPositiveImageSize, NonFiniteCoordinate, or InvalidBox (negative
/// extent). Edges past the frame are clamped, not rejected.
PixelBox to_pixel_box(const NormalizedBox& box, int image_width, int image_height);

std::vector<Detection> filter_detections(std::span<const RawDetection> raw,
                                         const ThresholdPolicy& policy,
                                         const QueryBundle& bundle, ImageSize image_size);

double intersection_over_union(const PixelBox& a, const PixelBox& b) noexcept;

/// Greedy same-label suppression. Visits detections by descending score
/// (ties: earlier input first) and drops any whose IoU with an already-kept
/// detection of the same label exceeds `iou_threshold`. Survivors keep their
/// input order.
std::vector<Detection> suppress_overlaps(std::span<const Detection> dets,
                                         double iou_threshold);

namespace detail {

/// Core of suppress_overlaps over an abstract overlap function, returning
/// the kept indices in ascending order. `same_group(i, j)` restricts
/// suppression to comparable pairs.
std::vector<std::size_t> greedy_suppress(
    std::span<const double> scores, double iou_threshold,
    const std::function<double(std::size_t, std::size_t)>& overlap,
    const std::function<bool(std::size_t, std::size_t)>& same_group);

}  // namespace detail

}  // namespace scenewatch
