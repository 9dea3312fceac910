#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adasim {

struct Color {
  uint8_t r = 0, g = 0, b = 0;
};

// Blend of a and b: t = 0 gives a, t = 1 gives b.
Color mix(Color a, Color b, double t);

// 8-bit RGB raster with (0,0) at the top left.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // 3 bytes per pixel, row-major

  ImageRGB() = default;
  ImageRGB(int w, int h, Color fill = {255, 255, 255});

  void set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    uint8_t* p = &data[3 * (static_cast<size_t>(y) * width + x)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  Color get(int x, int y) const {
    const uint8_t* p = &data[3 * (static_cast<size_t>(y) * width + x)];
    return {p[0], p[1], p[2]};
  }
};

void fill_rect(ImageRGB& img, int x0, int y0, int x1, int y1, Color c);
void draw_line(ImageRGB& img, int x0, int y0, int x1, int y1, Color c);

// 5x7 bitmap font (digits, upper-case letters, basic punctuation; lower case
// is mapped to upper case). Each character cell is 6*scale wide.
void draw_text(ImageRGB& img, int x, int y, const std::string& text, Color c, int scale = 1);
int text_width(const std::string& text, int scale = 1);
constexpr int kFontHeight = 7;

// Deterministic PNG writer (8-bit RGB, zlib-compressed, no ancillary chunks).
void write_png(const ImageRGB& img, const std::string& path);

}  // namespace adasim
