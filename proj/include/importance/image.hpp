#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "importance/corpus.hpp"

namespace importance {

// Row-major single-channel image with intensities in [0, 255].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
};

// ITU-R BT.601 luma.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Decodes any format OpenCV understands; color inputs go through luma().
// Returns nullopt when the file is missing or undecodable.
std::optional<GrayImage> load_gray_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale image (format chosen by extension).
void save_gray_image(const GrayImage& image, const std::filesystem::path& path);

enum class EnergyMode { Squared, Magnitude };

// Inclusive-exclusive pixel range covered by a box after clipping: pixel
// (c, r) belongs to the box when its center lies inside it.
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool empty() const { return x1 <= x0 || y1 <= y0; }
};
PixelRect clip_box(const Box& box, int width, int height);

// 3x3 Sobel gradient energy per pixel, replicate padding at the borders.
// OpenMP-parallel over rows. Matches reference::gradient_energy_map exactly
// on integer-valued images (both sums are then exact).
std::vector<double> gradient_energy_map(const GrayImage& image, EnergyMode mode);

double box_sum(std::span<const double> map, int width, int height, const Box& box);

namespace reference {
std::vector<double> gradient_energy_map(const GrayImage& image, EnergyMode mode);
}

}  // namespace importance
