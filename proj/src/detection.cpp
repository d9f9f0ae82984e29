#include "scenewatch/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scenewatch/error.hpp"

namespace scenewatch {

ThresholdPolicy::ThresholdPolicy(double normal, double anomaly)
    : normal_(normal), anomaly_(anomaly) {
  const auto valid = [](double t) { return std::isfinite(t) && t >= 0.0 && t <= 1.0; };
  if (!valid(normal) || !valid(anomaly)) {
    throw Error(ErrorCode::InvalidThreshold,
                "thresholds must lie in [0, 1], got normal=" + std::to_string(normal) +
                    " anomaly=" + std::to_string(anomaly));
  }
}

PixelBox to_pixel_box(const NormalizedBox& box, int image_width, int image_height) {
  if (image_width <= 0 || image_height <= 0) {
    throw Error(ErrorCode::NonPositiveImageSize,
                std::to_string(image_width) + "x" + std::to_string(image_height));
  }
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) || !std::isfinite(box.w) ||
      !std::isfinite(box.h)) {
    throw Error(ErrorCode::NonFiniteCoordinate, "box has a non-finite field");
  }
  if (box.w < 0.0 || box.h < 0.0) {
    throw Error(ErrorCode::InvalidBox, "box has negative extent");
  }

  const double width = image_width;
  const double height = image_height;
  const auto clamp_x = [&](double v) { return std::clamp(v, 0.0, width); };
  const auto clamp_y = [&](double v) { return std::clamp(v, 0.0, height); };
  return PixelBox{
      clamp_x((box.cx - box.w / 2.0) * width),
      clamp_y((box.cy - box.h / 2.0) * height),
      clamp_x((box.cx + box.w / 2.0) * width),
      clamp_y((box.cy + box.h / 2.0) * height),
  };
}

std::vector<Detection> filter_detections(std::span<const RawDetection> raw,
                                         const ThresholdPolicy& policy,
                                         const QueryBundle& bundle, ImageSize image_size) {
  std::vector<Detection> out;
  for (const auto& r : raw) {
    // Resolve every record, retained or not: a bad index means the detections
    // were produced against a different bundle.
    const auto& label = bundle.resolve(r.query_kind, r.query_index);
    if (!policy.retains(r.query_kind, r.score)) continue;
    out.push_back(Detection{label, r.query_kind, r.score,
                            to_pixel_box(r.box, image_size.width, image_size.height)});
  }
  return out;
}

double intersection_over_union(const PixelBox& a, const PixelBox& b) noexcept {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace detail {

std::vector<std::size_t> greedy_suppress(
    std::span<const double> scores, double iou_threshold,
    const std::function<double(std::size_t, std::size_t)>& overlap,
    const std::function<bool(std::size_t, std::size_t)>& same_group) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<std::size_t> kept;
  for (std::size_t candidate : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return same_group(k, candidate) && overlap(k, candidate) > iou_threshold;
    });
    if (!suppressed) kept.push_back(candidate);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace detail

std::vector<Detection> suppress_overlaps(std::span<const Detection> dets,
                                         double iou_threshold) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const auto& d : dets) scores.push_back(d.score);

  const auto kept = detail::greedy_suppress(
      scores, iou_threshold,
      [&](std::size_t i, std::size_t j) { return intersection_over_union(dets[i].box, dets[j].box); },
      [&](std::size_t i, std::size_t j) {
        return dets[i].kind == dets[j].kind && dets[i].label == dets[j].label;
      });

  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(dets[i]);
  return out;
}

}  // namespace scenewatch
