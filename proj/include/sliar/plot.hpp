#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sliar/trainer.hpp"

namespace sliar::plot {

using Rgb = std::array<std::uint8_t, 3>;

/// Minimal RGB raster with line drawing; enough for loss curves.
class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;

  void set(int x, int y, Rgb color);
  void line(int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb color);

  void write_png(const std::filesystem::path& path) const;

 private:
  int width_, height_;
  std::vector<std::uint8_t> pixels_;
};

inline constexpr Rgb kTrainColor{31, 119, 180};
inline constexpr Rgb kValidColor{255, 127, 14};

/// Epoch on x, loss on y; training in blue, validation in orange, a
/// legend swatch for each in the top-right corner.
Canvas render_loss_curve(const LossCurve& curve, int width = 640, int height = 420);

void write_loss_curve_png(const LossCurve& curve, const std::filesystem::path& path);

}  // namespace sliar::plot
