#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include <jpeglib.h>

#include "scenewatch/error.hpp"
#include "scenewatch/image.hpp"

using namespace scenewatch;

namespace {

constexpr Rgb kGray{90, 90, 90};
constexpr Rgb kGreen{0, 255, 0};
constexpr Rgb kRed{255, 0, 0};

Image gradient(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, Rgb{static_cast<std::uint8_t>(x * 7), static_cast<std::uint8_t>(y * 11),
                        static_cast<std::uint8_t>((x + y) * 3)});
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_jpeg(const Image& img) {
  jpeg_compress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = img.width();
  cinfo.image_height = img.height();
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 95, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<unsigned char*>(img.bytes().data() + cinfo.next_scanline * img.width() * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

}  // namespace

TEST_CASE("png and ppm round trips are lossless") {
  const auto img = gradient(31, 17);
  CHECK(decode_image(encode_png(img)) == img);
  CHECK(decode_image(encode_ppm(img)) == img);
}

TEST_CASE("jpeg decodes to the right size") {
  const auto img = Image(40, 24, Rgb{200, 100, 50});
  const auto decoded = decode_image(encode_jpeg(img));
  CHECK(decoded.width() == 40);
  CHECK(decoded.height() == 24);
  const auto px = decoded.at(20, 12);
  CHECK(std::abs(px.r - 200) < 6);
  CHECK(std::abs(px.g - 100) < 6);
}

TEST_CASE("undecodable input") {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(decode_image(junk), Error);
  auto png = encode_png(gradient(8, 8));
  png.resize(png.size() / 2);
  try {
    decode_image(png);
    FAIL("expected UndecodableImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndecodableImage);
  }
}

TEST_CASE("save and load by extension") {
  const auto dir = std::filesystem::temp_directory_path() / "scenewatch_image_test";
  const auto img = gradient(12, 9);
  save_image(img, dir / "a.png");
  save_image(img, dir / "a.ppm");
  CHECK(load_image(dir / "a.png") == img);
  CHECK(load_image(dir / "a.ppm") == img);
  std::filesystem::remove_all(dir);
}

TEST_CASE("overlay strokes by kind and leaves the rest alone") {
  const Image base(200, 160, kGray);
  const std::vector<Detection> dets{
      {"Car", QueryKind::Normal, 0.9, {20, 40, 80, 120}},
      {"odd", QueryKind::Anomaly, 0.3, {110, 50, 180, 140}},
  };
  OverlayStyle style;
  const auto out = render_overlay(base, dets, style);
  // left, right and bottom edges
  CHECK(out.at(20, 80) == kGreen);
  CHECK(out.at(79, 80) == kGreen);
  CHECK(out.at(50, 119) == kGreen);
  CHECK(out.at(110, 100) == kRed);
  CHECK(out.at(179, 100) == kRed);
  CHECK(out.at(150, 139) == kRed);
  // interiors and far background untouched
  CHECK(out.at(50, 80) == kGray);
  CHECK(out.at(145, 100) == kGray);
  CHECK(out.at(195, 155) == kGray);
  CHECK(out.at(100, 150) == kGray);
}

TEST_CASE("zero detections is the identity") {
  const auto img = gradient(64, 48);
  CHECK(render_overlay(img, {}) == img);
}

TEST_CASE("boxes on and past the border stay inside the canvas") {
  const Image base(50, 40, kGray);
  const std::vector<Detection> dets{{"Wall", QueryKind::Normal, 0.5, {0, 0, 50, 40}},
                                    {"Huge", QueryKind::Anomaly, 0.5, {-30, -30, 500, 500}},
                                    {"Dot", QueryKind::Normal, 0.5, {49.5, 39.5, 50, 40}}};
  const auto out = render_overlay(base, dets);
  CHECK(out.width() == 50);
  CHECK(out.at(0, 20) == kRed);
  CHECK(out.at(49, 20) == kRed);
}

TEST_CASE("text helpers") {
  CHECK(text_width("AB", 1) > 0);
  CHECK(text_width("AB", 2) == 2 * text_width("AB", 1));
  CHECK(text_height(3) == 3 * text_height(1));
  Image img(40, 20, kGray);
  draw_text(img, 1, 1, "A", Rgb{255, 255, 255}, 1);
  CHECK_FALSE(img == Image(40, 20, kGray));
}
