#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scenewatch/detection.hpp"

namespace scenewatch {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// Packed 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageSize size() const noexcept { return {width_, height_}; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb color);
  /// Fills the inclusive pixel rectangle, clipped to the canvas.
  void fill_rect(int x0, int y0, int x1, int y1, Rgb color);

  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// PNG, JPEG or binary PPM, sniffed from the magic bytes.
/// Throws Error{UndecodableImage}.
Image decode_image(std::span<const std::uint8_t> data);
Image load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
std::vector<std::uint8_t> encode_ppm(const Image& image);
/// Format from the extension: .png (default) or .ppm.
void save_image(const Image& image, const std::filesystem::path& path);

struct OverlayStyle {
  Rgb normal_color{0, 255, 0};
  Rgb anomaly_color{255, 0, 0};
  Rgb text_color{255, 255, 255};
  int stroke = 3;
  int font_scale = 2;
  bool draw_labels = true;
};

/// Strokes each detection box inside its pixel footprint (green for normal,
/// red for anomaly) and writes "label score" on a tag next to it. Boxes are
/// clipped to the canvas. With no detections the result equals the input.
Image render_overlay(const Image& image, std::span<const Detection> detections,
                     const OverlayStyle& style = {});

/// Draws ASCII text with the built-in 5x7 font (letters rendered uppercase).
void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale = 1);
int text_width(std::string_view text, int scale = 1) noexcept;
int text_height(int scale = 1) noexcept;

}  // namespace scenewatch
