#pragma once

// Per-face feature vector and the pairwise difference composition.
//
// Layout (version 1, 37 entries):
//   [0]      distance from image center (image scaled to unit square)
//   [1]      [0] divided by the larger scaled box side
//   [2]      distance to the centroid of all face centers
//   [3]      distance to the area-weighted centroid of face centers
//   [4]      box area / image area
//   [5]      share of Sobel gradient energy among all face boxes
//   [6]      pose component id (1..13, 0 when absent)
//   [7..19]  one-hot pose component
//   [20]     box aspect ratio w / h
//   [21]     own pose id minus mean pose id of the other faces
//   [22..34] pose component scores
//   [35]     dominant (max) component score
//   [36]     1 if the automatic face detector found the face

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "importance/corpus.hpp"
#include "importance/image.hpp"

namespace importance {

inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr std::size_t kFeatureDims = 37;

namespace feature {
inline constexpr std::size_t kDistCenter = 0;
inline constexpr std::size_t kWeightedDistCenter = 1;
inline constexpr std::size_t kDistCentroid = 2;
inline constexpr std::size_t kDistWeightedCentroid = 3;
inline constexpr std::size_t kScale = 4;
inline constexpr std::size_t kSharpness = 5;
inline constexpr std::size_t kPoseId = 6;
inline constexpr std::size_t kPoseIndicator = 7;
inline constexpr std::size_t kAspectRatio = 20;
inline constexpr std::size_t kPoseDiff = 21;
inline constexpr std::size_t kPoseScores = 22;
inline constexpr std::size_t kDominantScore = 35;
inline constexpr std::size_t kDetected = 36;
}  // namespace feature

const std::array<std::string_view, kFeatureDims>& feature_names();

using FeatureVector = std::vector<double>;
using PairFeature = std::vector<double>;

std::array<double, 4> dist_features(const ImageRecord& image, std::size_t face_index);
double scale_feature(const FaceRecord& face, const ImageRecord& image);

// One share per face; shares sum to 1, or are 1/n each when no box holds any
// gradient energy. Throws MissingPixels when pixels is null or empty.
std::vector<double> sharpness_features(const GrayImage* pixels, std::span<const FaceRecord> faces,
                                       EnergyMode mode = EnergyMode::Squared);

// [pose id, 13 indicator entries, aspect ratio, pose difference]
std::array<double, 16> pose_features(const ImageRecord& image, std::size_t face_index);

// [13 component scores, dominant score, detection success]
std::array<double, 15> occlusion_features(const FaceRecord& face);

struct ExtractOptions {
  bool use_pixels = true;
  bool use_pose = true;  // off: every face is treated as having no pose estimate
  EnergyMode energy = EnergyMode::Squared;
};

struct ImageFeatures {
  std::vector<FeatureVector> faces;
  bool sharpness_missing = false;  // sharpness entries were zero-filled
};

// Features of every face of one image. When pixels are unavailable (null, or
// use_pixels off) the sharpness entry is 0 and sharpness_missing is set.
ImageFeatures extract_image(const ImageRecord& image, const GrayImage* pixels, const ExtractOptions& opts = {});

FeatureVector extract(const ImageRecord& image, std::size_t face_index, const GrayImage* pixels,
                      const ExtractOptions& opts = {});

// Entry-wise f_i - f_j. Throws LengthMismatch.
PairFeature compose_pair(std::span<const double> f_i, std::span<const double> f_j);

// Supplies decoded pixels for an image, or nullopt. Must be callable from
// several threads at once.
using PixelSource = std::function<std::optional<GrayImage>(const Corpus&, std::size_t image_index)>;

// Loads image_path relative to the corpus base directory.
PixelSource file_pixel_source();

struct CorpusFeatures {
  std::vector<ImageFeatures> images;
  std::size_t missing_pixel_images = 0;

  const FeatureVector& at(FaceLocation loc) const { return images[loc.image].faces[loc.face]; }
};

// Per-image extraction, OpenMP-parallel across images.
CorpusFeatures extract_corpus(const Corpus& corpus, const ExtractOptions& opts, const PixelSource& pixels);

namespace reference {
CorpusFeatures extract_corpus(const Corpus& corpus, const ExtractOptions& opts, const PixelSource& pixels);
}

// Tab-delimited dump: layout header line, column header, one row per face.
void write_feature_table(std::ostream& out, const Corpus& corpus, const CorpusFeatures& features);

}  // namespace importance
