#include "importance/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "importance/error.hpp"

namespace importance {

std::optional<GrayImage> load_gray_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYCOLOR | cv::IMREAD_ANYDEPTH);
  if (raw.empty()) return std::nullopt;

  cv::Mat data;
  const double to_255 = raw.depth() == CV_16U ? 255.0 / 65535.0 : (raw.depth() == CV_8U ? 1.0 : 255.0);
  raw.convertTo(data, CV_64F, to_255);

  GrayImage out(data.cols, data.rows);
  const int channels = data.channels();
  for (int r = 0; r < data.rows; ++r) {
    const double* row = data.ptr<double>(r);
    for (int c = 0; c < data.cols; ++c) {
      const double* px = row + static_cast<std::ptrdiff_t>(c) * channels;
      // OpenCV stores color as BGR(A).
      out.at(c, r) = channels >= 3 ? luma(px[2], px[1], px[0]) : px[0];
    }
  }
  return out;
}

void save_gray_image(const GrayImage& image, const std::filesystem::path& path) {
  cv::Mat mat(image.height, image.width, CV_8UC1);
  for (int r = 0; r < image.height; ++r) {
    auto* row = mat.ptr<unsigned char>(r);
    for (int c = 0; c < image.width; ++c) {
      row[c] = static_cast<unsigned char>(std::clamp(std::lround(image.at(c, r)), 0L, 255L));
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw InputError("cannot write image '" + path.string() + "'");
}

PixelRect clip_box(const Box& box, int width, int height) {
  PixelRect r;
  r.x0 = std::clamp(static_cast<int>(std::ceil(box.x - 0.5)), 0, width);
  r.y0 = std::clamp(static_cast<int>(std::ceil(box.y - 0.5)), 0, height);
  r.x1 = std::clamp(static_cast<int>(std::ceil(box.x + box.w - 0.5)), 0, width);
  r.y1 = std::clamp(static_cast<int>(std::ceil(box.y + box.h - 0.5)), 0, height);
  return r;
}

namespace {

inline double sobel_energy_at(const GrayImage& img, int x, int y, EnergyMode mode) {
  const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
  const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
  const double gx = (img.at(xp, ym) + 2.0 * img.at(xp, y) + img.at(xp, yp)) -
                    (img.at(xm, ym) + 2.0 * img.at(xm, y) + img.at(xm, yp));
  const double gy = (img.at(xm, yp) + 2.0 * img.at(x, yp) + img.at(xp, yp)) -
                    (img.at(xm, ym) + 2.0 * img.at(x, ym) + img.at(xp, ym));
  const double e = gx * gx + gy * gy;
  return mode == EnergyMode::Squared ? e : std::sqrt(e);
}

}  // namespace

std::vector<double> gradient_energy_map(const GrayImage& image, EnergyMode mode) {
  std::vector<double> map(image.pixels.size(), 0.0);
  const int w = image.width, h = image.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    double* row = map.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) row[x] = sobel_energy_at(image, x, y, mode);
  }
  return map;
}

double box_sum(std::span<const double> map, int width, int height, const Box& box) {
  const PixelRect r = clip_box(box, width, height);
  double sum = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) sum += map[static_cast<std::size_t>(y) * width + x];
  }
  return sum;
}

namespace reference {

// Straight convolution with explicit kernels and an explicitly padded copy.
std::vector<double> gradient_energy_map(const GrayImage& image, EnergyMode mode) {
  static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const int w = image.width, h = image.height;
  GrayImage padded(w + 2, h + 2);
  for (int y = -1; y <= h; ++y) {
    for (int x = -1; x <= w; ++x) {
      padded.at(x + 1, y + 1) = image.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    }
  }
  std::vector<double> map(image.pixels.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 3; ++i) {
          const double v = padded.at(x + i, y + j);
          gx += kx[j][i] * v;
          gy += ky[j][i] * v;
        }
      }
      const double e = gx * gx + gy * gy;
      map[static_cast<std::size_t>(y) * w + x] = mode == EnergyMode::Squared ? e : std::sqrt(e);
    }
  }
  return map;
}

}  // namespace reference

}  // namespace importance
