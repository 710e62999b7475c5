#include "importance/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>

#include "importance/error.hpp"

namespace importance {

const std::array<std::string_view, kFeatureDims>& feature_names() {
  static const std::array<std::string_view, kFeatureDims> names = {
      "dist_center", "weighted_dist_center", "dist_centroid", "dist_weighted_centroid",
      "scale", "sharpness", "pose_component_id",
      "pose_ind_1", "pose_ind_2", "pose_ind_3", "pose_ind_4", "pose_ind_5", "pose_ind_6", "pose_ind_7",
      "pose_ind_8", "pose_ind_9", "pose_ind_10", "pose_ind_11", "pose_ind_12", "pose_ind_13",
      "aspect_ratio", "pose_diff_vs_others",
      "pose_score_1", "pose_score_2", "pose_score_3", "pose_score_4", "pose_score_5", "pose_score_6",
      "pose_score_7", "pose_score_8", "pose_score_9", "pose_score_10", "pose_score_11", "pose_score_12",
      "pose_score_13", "dominant_component_score", "detection_success"};
  return names;
}

std::array<double, 4> dist_features(const ImageRecord& image, std::size_t face_index) {
  const double sx = 1.0 / image.pixel_width;
  const double sy = 1.0 / image.pixel_height;

  double cx = 0.0, cy = 0.0;    // centroid of face centers
  double wcx = 0.0, wcy = 0.0;  // area-weighted centroid
  double total_area = 0.0;
  for (const auto& f : image.faces) total_area += f.box.area();
  for (const auto& f : image.faces) {
    const double fx = f.box.center_x() * sx, fy = f.box.center_y() * sy;
    cx += fx;
    cy += fy;
    const double weight = f.box.area() / total_area;
    wcx += weight * fx;
    wcy += weight * fy;
  }
  const double n = static_cast<double>(image.faces.size());
  cx /= n;
  cy /= n;

  const Box& box = image.faces[face_index].box;
  const double px = box.center_x() * sx, py = box.center_y() * sy;
  const double to_center = std::hypot(px - 0.5, py - 0.5);
  const double largest_side = std::max(box.w * sx, box.h * sy);
  return {to_center, to_center / largest_side, std::hypot(px - cx, py - cy), std::hypot(px - wcx, py - wcy)};
}

double scale_feature(const FaceRecord& face, const ImageRecord& image) {
  return face.box.area() / (static_cast<double>(image.pixel_width) * image.pixel_height);
}

std::vector<double> sharpness_features(const GrayImage* pixels, std::span<const FaceRecord> faces, EnergyMode mode) {
  if (pixels == nullptr || pixels->empty()) throw MissingPixels("sharpness needs image pixels");
  const auto map = gradient_energy_map(*pixels, mode);
  std::vector<double> shares(faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    shares[i] = box_sum(map, pixels->width, pixels->height, faces[i].box);
    total += shares[i];
  }
  for (auto& s : shares) s = total > 0.0 ? s / total : 1.0 / static_cast<double>(faces.size());
  return shares;
}

std::array<double, 16> pose_features(const ImageRecord& image, std::size_t face_index) {
  std::array<double, 16> out{};
  const FaceRecord& face = image.faces[face_index];
  if (face.pose) {
    out[0] = face.pose->component_id;
    out[static_cast<std::size_t>(face.pose->component_id)] = 1.0;
  }
  out[14] = face.box.w / face.box.h;

  if (face.pose && image.faces.size() > 1) {
    double sum = 0.0;
    bool complete = true;
    for (std::size_t k = 0; k < image.faces.size(); ++k) {
      if (k == face_index) continue;
      if (!image.faces[k].pose) {
        complete = false;
        break;
      }
      sum += image.faces[k].pose->component_id;
    }
    if (complete) out[15] = face.pose->component_id - sum / static_cast<double>(image.faces.size() - 1);
  }
  return out;
}

std::array<double, 15> occlusion_features(const FaceRecord& face) {
  std::array<double, 15> out{};
  if (face.pose) {
    std::copy(face.pose->component_scores.begin(), face.pose->component_scores.end(), out.begin());
    out[13] = *std::max_element(face.pose->component_scores.begin(), face.pose->component_scores.end());
  }
  out[14] = face.detected_automatically ? 1.0 : 0.0;
  return out;
}

namespace {

FeatureVector assemble(const ImageRecord& image, std::size_t i, double sharpness) {
  FeatureVector v(kFeatureDims, 0.0);
  const auto dist = dist_features(image, i);
  std::copy(dist.begin(), dist.end(), v.begin() + feature::kDistCenter);
  v[feature::kScale] = scale_feature(image.faces[i], image);
  v[feature::kSharpness] = sharpness;
  const auto pose = pose_features(image, i);
  std::copy(pose.begin(), pose.end(), v.begin() + feature::kPoseId);
  const auto occ = occlusion_features(image.faces[i]);
  std::copy(occ.begin(), occ.end(), v.begin() + feature::kPoseScores);
  return v;
}

}  // namespace

ImageFeatures extract_image(const ImageRecord& image, const GrayImage* pixels, const ExtractOptions& opts) {
  if (!opts.use_pose) {
    ImageRecord stripped = image;
    for (auto& f : stripped.faces) f.pose.reset();
    return extract_image(stripped, pixels, {opts.use_pixels, true, opts.energy});
  }
  ImageFeatures out;
  std::vector<double> sharpness(image.faces.size(), 0.0);
  if (opts.use_pixels && pixels != nullptr && !pixels->empty()) {
    sharpness = sharpness_features(pixels, image.faces, opts.energy);
  } else {
    out.sharpness_missing = true;
  }
  out.faces.reserve(image.faces.size());
  for (std::size_t i = 0; i < image.faces.size(); ++i) out.faces.push_back(assemble(image, i, sharpness[i]));
  return out;
}

FeatureVector extract(const ImageRecord& image, std::size_t face_index, const GrayImage* pixels,
                      const ExtractOptions& opts) {
  return extract_image(image, pixels, opts).faces.at(face_index);
}

PairFeature compose_pair(std::span<const double> f_i, std::span<const double> f_j) {
  if (f_i.size() != f_j.size()) throw LengthMismatch("compose_pair: feature lengths differ");
  PairFeature out(f_i.size());
  for (std::size_t k = 0; k < f_i.size(); ++k) out[k] = f_i[k] - f_j[k];
  return out;
}

PixelSource file_pixel_source() {
  return [](const Corpus& corpus, std::size_t index) -> std::optional<GrayImage> {
    const auto& image = corpus.images()[index];
    if (!image.image_path) return std::nullopt;
    std::filesystem::path path(*image.image_path);
    if (path.is_relative()) path = corpus.base_dir() / path;
    return load_gray_image(path);
  };
}

namespace {

ImageFeatures extract_one(const Corpus& corpus, std::size_t i, const ExtractOptions& opts, const PixelSource& pixels) {
  std::optional<GrayImage> img;
  if (opts.use_pixels && pixels) img = pixels(corpus, i);
  const auto& record = corpus.images()[i];
  if (img && (img->width != record.pixel_width || img->height != record.pixel_height)) {
    throw InvariantViolation("image '" + record.image_id + "': decoded size differs from manifest width/height");
  }
  return extract_image(record, img ? &*img : nullptr, opts);
}

std::size_t count_missing(const CorpusFeatures& f) {
  return static_cast<std::size_t>(
      std::count_if(f.images.begin(), f.images.end(), [](const ImageFeatures& x) { return x.sharpness_missing; }));
}

}  // namespace

CorpusFeatures extract_corpus(const Corpus& corpus, const ExtractOptions& opts, const PixelSource& pixels) {
  CorpusFeatures out;
  const auto n = static_cast<std::ptrdiff_t>(corpus.images().size());
  out.images.resize(corpus.images().size());
  std::vector<std::exception_ptr> errors(corpus.images().size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out.images[i] = extract_one(corpus, static_cast<std::size_t>(i), opts, pixels);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  out.missing_pixel_images = count_missing(out);
  return out;
}

namespace reference {

CorpusFeatures extract_corpus(const Corpus& corpus, const ExtractOptions& opts, const PixelSource& pixels) {
  CorpusFeatures out;
  for (std::size_t i = 0; i < corpus.images().size(); ++i) out.images.push_back(extract_one(corpus, i, opts, pixels));
  out.missing_pixel_images = count_missing(out);
  return out;
}

}  // namespace reference

void write_feature_table(std::ostream& out, const Corpus& corpus, const CorpusFeatures& features) {
  out << "# importance-features layout=" << kFeatureLayoutVersion << " dims=" << kFeatureDims << "\n";
  out << "image_id\tface_id";
  for (auto name : feature_names()) out << '\t' << name;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < corpus.images().size(); ++i) {
    const auto& image = corpus.images()[i];
    for (std::size_t f = 0; f < image.faces.size(); ++f) {
      out << image.image_id << '\t' << image.faces[f].face_id;
      for (double v : features.images[i].faces[f]) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace importance
