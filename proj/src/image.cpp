#include "scenewatch/image.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <csetjmp>
#include <cmath>
#include <cstring>

#include "scenewatch/error.hpp"
#include "scenewatch/util.hpp"

namespace scenewatch {

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::NonPositiveImageSize, "negative image size");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  return Rgb{pixels_.at(i), pixels_.at(i + 1), pixels_.at(i + 2)};
}

void Image::set(int x, int y, Rgb color) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  pixels_[i] = color.r;
  pixels_[i + 1] = color.g;
  pixels_[i + 2] = color.b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb color) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_ - 1);
  y1 = std::min(y1, height_ - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) set(x, y, color);
  }
}

// ---------------------------------------------------------------------------
// codecs

namespace {

[[noreturn]] void undecodable(const std::string& what) {
  throw Error(ErrorCode::UndecodableImage, what);
}

Image decode_png(std::span<const std::uint8_t> data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&img, data.data(), data.size()) == 0) {
    undecodable(std::string("png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (png_image_finish_read(&img, nullptr, out.bytes().data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    undecodable("png: " + msg);
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Returns false with `message` filled on failure. Kept free of objects with
// non-trivial destructors between setjmp and the longjmp sites.
bool decode_jpeg_raw(std::span<const std::uint8_t> data, std::vector<std::uint8_t>& pixels, int& width,
                     int& height, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.message[0] = '\0';
  if (setjmp(err.jump) != 0) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

Image decode_jpeg(std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!decode_jpeg_raw(data, pixels, width, height, message)) {
    undecodable(std::string("jpeg: ") + message);
  }
  Image out(width, height);
  std::copy(pixels.begin(), pixels.end(), out.bytes().begin());
  return out;
}

Image decode_ppm(std::span<const std::uint8_t> data) {
  std::size_t pos = 2;
  const auto skip_space_and_comments = [&] {
    while (pos < data.size()) {
      if (std::isspace(data[pos])) {
        ++pos;
      } else if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_int = [&] {
    skip_space_and_comments();
    if (pos >= data.size() || !std::isdigit(data[pos])) undecodable("ppm: bad header");
    long value = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
      value = value * 10 + (data[pos++] - '0');
      if (value > 1'000'000) undecodable("ppm: dimension too large");
    }
    return static_cast<int>(value);
  };
  const int width = read_int();
  const int height = read_int();
  const int maxval = read_int();
  if (maxval != 255) undecodable("ppm: only 8-bit maxval 255 is supported");
  if (pos >= data.size() || !std::isspace(data[pos])) undecodable("ppm: bad header");
  ++pos;
  const auto needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (data.size() - pos < needed) undecodable("ppm: truncated pixel data");
  Image out(width, height);
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(pos), needed, out.bytes().begin());
  return out;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> data) {
  static constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (data.size() >= kPngMagic.size() && std::equal(kPngMagic.begin(), kPngMagic.end(), data.begin())) {
    return decode_png(data);
  }
  if (data.size() >= 3 && data[0] == 0xff && data[1] == 0xd8 && data[2] == 0xff) return decode_jpeg(data);
  if (data.size() >= 2 && data[0] == 'P' && data[1] == '6') return decode_ppm(data);
  undecodable("unrecognized image format");
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                                    bytes.size()));
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&img, nullptr, &size, 0, image.bytes().data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::Io, std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&img, out.data(), &size, 0, image.bytes().data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::Io, std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const auto header = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  const auto ext = to_lower(path.extension().string());
  const auto bytes = ext == ".ppm" ? encode_ppm(image) : encode_png(image);
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---------------------------------------------------------------------------
// text

namespace {

constexpr int kGlyphWidth = 5;
constexpr int kGlyphHeight = 7;

struct Glyph {
  char ch;
  std::array<std::uint8_t, kGlyphHeight> rows;  // bit 4 is the leftmost column
};

constexpr std::array<Glyph, 48> kFont{{
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'\'', {0x0C, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00}},
    {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
}};

const Glyph& glyph_for(char c) {
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& g : kFont) {
    if (g.ch == upper) return g;
  }
  return kFont[46];  // '?'
}

}  // namespace

int text_width(std::string_view text, int scale) noexcept {
  if (text.empty()) return 0;
  return static_cast<int>(text.size()) * (kGlyphWidth + 1) * scale - scale;
}

int text_height(int scale) noexcept { return kGlyphHeight * scale; }

void draw_text(Image& image, int x, int y, std::string_view text, Rgb color, int scale) {
  for (char c : text) {
    const auto& g = glyph_for(c);
    for (int row = 0; row < kGlyphHeight; ++row) {
      for (int col = 0; col < kGlyphWidth; ++col) {
        if ((g.rows[row] >> (kGlyphWidth - 1 - col)) & 1) {
          image.fill_rect(x + col * scale, y + row * scale, x + (col + 1) * scale - 1,
                          y + (row + 1) * scale - 1, color);
        }
      }
    }
    x += (kGlyphWidth + 1) * scale;
  }
}

// ---------------------------------------------------------------------------
// overlay

namespace {

std::string score_text(double score) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", score);
  return buf;
}

}  // namespace

Image render_overlay(const Image& image, std::span<const Detection> detections, const OverlayStyle& style) {
  Image out = image;
  if (out.empty()) return out;
  const int w = out.width();
  const int h = out.height();
  const int stroke = std::max(1, style.stroke);

  // Pixel footprint of each box, clipped to the canvas.
  struct Footprint {
    int x0, y0, x1, y1;
  };
  const auto footprint = [&](const PixelBox& b) {
    const auto clampi = [](double v, int hi) {
      if (!std::isfinite(v)) return 0;
      return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
    };
    Footprint f{clampi(std::floor(b.x0), w - 1), clampi(std::floor(b.y0), h - 1),
                clampi(std::ceil(b.x1) - 1.0, w - 1), clampi(std::ceil(b.y1) - 1.0, h - 1)};
    f.x1 = std::max(f.x1, f.x0);
    f.y1 = std::max(f.y1, f.y0);
    return f;
  };

  for (const auto& det : detections) {
    const Rgb color = det.kind == QueryKind::Anomaly ? style.anomaly_color : style.normal_color;
    const auto f = footprint(det.box);
    out.fill_rect(f.x0, f.y0, f.x1, std::min(f.y1, f.y0 + stroke - 1), color);
    out.fill_rect(f.x0, std::max(f.y0, f.y1 - stroke + 1), f.x1, f.y1, color);
    out.fill_rect(f.x0, f.y0, std::min(f.x1, f.x0 + stroke - 1), f.y1, color);
    out.fill_rect(std::max(f.x0, f.x1 - stroke + 1), f.y0, f.x1, f.y1, color);
  }

  if (!style.draw_labels) return out;
  const int scale = std::max(1, style.font_scale);
  const int pad = scale;
  const int tag_h = text_height(scale) + 2 * pad;
  for (const auto& det : detections) {
    const Rgb color = det.kind == QueryKind::Anomaly ? style.anomaly_color : style.normal_color;
    const auto f = footprint(det.box);

    std::string text = det.label + " " + score_text(det.score);
    const int max_chars = std::max(0, (w - 2 * pad) / ((5 + 1) * scale));
    if (static_cast<int>(text.size()) > max_chars) {
      text = max_chars > 3 ? text.substr(0, static_cast<std::size_t>(max_chars - 3)) + "..." : "";
    }
    if (text.empty()) continue;

    const int tag_w = text_width(text, scale) + 2 * pad;
    // Above the box when there is room, otherwise just inside its top edge.
    const int tag_y = f.y0 >= tag_h ? f.y0 - tag_h : std::min(f.y0 + stroke, h - tag_h);
    const int tag_x = std::clamp(f.x0, 0, std::max(0, w - tag_w));
    out.fill_rect(tag_x, tag_y, tag_x + tag_w - 1, tag_y + tag_h - 1, color);
    draw_text(out, tag_x + pad, tag_y + pad, text, style.text_color, scale);
  }
  return out;
}

}  // namespace scenewatch
