#include "sliar/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "sliar/errors.hpp"

namespace sliar::plot {

Canvas::Canvas(int width, int height, Rgb background)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height * 3) {
  if (width <= 0 || height <= 0) throw ShapeError("canvas dimensions must be positive");
  for (std::size_t i = 0; i < pixels_.size(); i += 3) std::copy(background.begin(), background.end(), &pixels_[i]);
}

Rgb Canvas::at(int x, int y) const {
  const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3];
  return {p[0], p[1], p[2]};
}

void Canvas::set(int x, int y, Rgb color) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  std::copy(color.begin(), color.end(), &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3]);
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb color, int thickness) {
  // Bresenham, stamped with a square brush
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  const int r = thickness / 2;
  while (true) {
    for (int ox = -r; ox <= r; ++ox)
      for (int oy = -r; oy <= r; ++oy) set(x0 + ox, y0 + oy, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb color) {
  for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, color);
}

void Canvas::write_png(const std::filesystem::path& path) const {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("failed writing '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height_; ++y) {
    png_write_row(png, const_cast<png_bytep>(&pixels_[static_cast<std::size_t>(y) * width_ * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Canvas render_loss_curve(const LossCurve& curve, int width, int height) {
  Canvas canvas(width, height);
  const int left = 50, right = width - 20, top = 20, bottom = height - 40;
  constexpr Rgb axis{0, 0, 0}, grid{225, 225, 225};

  double lo = 0, hi = 1;
  if (!curve.epochs.empty()) {
    lo = hi = curve.epochs.front().train_loss;
    for (const auto& e : curve.epochs) {
      lo = std::min({lo, e.train_loss, e.valid_loss});
      hi = std::max({hi, e.train_loss, e.valid_loss});
    }
    lo = std::min(lo, 0.0);
    if (hi - lo < 1e-12) hi = lo + 1;
  }
  const std::size_t n = curve.epochs.size();
  auto px = [&](std::size_t i) {
    return n <= 1 ? (left + right) / 2 : left + static_cast<int>(std::lround(double(i) / double(n - 1) * (right - left)));
  };
  auto py = [&](double v) { return bottom - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top))); };

  for (int k = 1; k <= 4; ++k) {
    const int y = bottom - k * (bottom - top) / 4;
    canvas.line(left, y, right, y, grid);
  }
  for (std::size_t i = 0; i < n; ++i) canvas.line(px(i), bottom, px(i), bottom + 5, axis);
  canvas.line(left, top, left, bottom, axis, 2);
  canvas.line(left, bottom, right, bottom, axis, 2);

  auto series = [&](auto value, Rgb color) {
    for (std::size_t i = 0; i < n; ++i) {
      const int x = px(i), y = py(value(curve.epochs[i]));
      canvas.fill_rect(x - 3, y - 3, x + 3, y + 3, color);
      if (i > 0) canvas.line(px(i - 1), py(value(curve.epochs[i - 1])), x, y, color, 2);
    }
  };
  series([](const EpochLoss& e) { return e.train_loss; }, kTrainColor);
  series([](const EpochLoss& e) { return e.valid_loss; }, kValidColor);

  canvas.fill_rect(right - 40, top + 4, right - 24, top + 12, kTrainColor);
  canvas.fill_rect(right - 40, top + 18, right - 24, top + 26, kValidColor);
  return canvas;
}

void write_loss_curve_png(const LossCurve& curve, const std::filesystem::path& path) {
  render_loss_curve(curve).write_png(path);
}

}  // namespace sliar::plot
