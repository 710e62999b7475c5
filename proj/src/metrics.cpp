#include <cmath>

#include "importance/error.hpp"
#include "importance/eval.hpp"

namespace importance {

namespace {

void check_aligned(std::span<const double> predictions, std::span<const PairScore> truths) {
  if (predictions.empty()) throw EmptyInput("no pairs to evaluate");
  if (predictions.size() != truths.size()) throw LengthMismatch("predictions and truths differ in length");
}

bool is_correct(double prediction, const PairScore& truth) {
  const double gap = truth.s_a - truth.s_b;
  if (gap == 0.0) return true;
  return gap > 0.0 ? prediction > 0.0 : prediction < 0.0;
}

}  // namespace

double weighted_accuracy(std::span<const double> predictions, std::span<const PairScore> truths) {
  check_aligned(predictions, truths);
  double hit = 0.0, total = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double w = truths[k].weight();
    total += w;
    if (is_correct(predictions[k], truths[k])) hit += w;
  }
  return hit / total;
}

double mse(std::span<const double> predictions, std::span<const PairScore> truths) {
  check_aligned(predictions, truths);
  double sum = 0.0;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const double e = predictions[k] - truths[k].gap();
    sum += e * e;
  }
  return sum / static_cast<double>(predictions.size());
}

std::array<CategoryAccuracy, 3> category_accuracy(std::span<const double> predictions,
                                                  std::span<const PairScore> truths) {
  if (predictions.size() != truths.size()) throw LengthMismatch("predictions and truths differ in length");
  std::array<CategoryAccuracy, 3> out{};
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    auto& cat = out[static_cast<std::size_t>(categorize_pair(truths[k]))];
    const double w = truths[k].weight();
    ++cat.count;
    cat.weight += w;
    if (is_correct(predictions[k], truths[k])) {
      ++cat.correct;
      cat.weighted_correct += w;
    }
  }
  return out;
}

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::Center: return "center";
    case Baseline::Scale: return "scale";
    case Baseline::Sharpness: return "sharpness";
    case Baseline::Saliency: return "saliency";
  }
  return "?";
}

double baseline_score(const ImageRecord& image, std::size_t face_index, Baseline method, const BaselineInputs& in) {
  switch (method) {
    case Baseline::Center:
      return -dist_features(image, face_index)[feature::kWeightedDistCenter];
    case Baseline::Scale:
      return scale_feature(image.faces[face_index], image);
    case Baseline::Sharpness:
      return sharpness_features(in.pixels, image.faces, in.energy)[face_index];
    case Baseline::Saliency:
      if (in.has_fixations) return saliency_share(image, in.fixations).shares[face_index];
      if (in.saliency_map != nullptr && !in.saliency_map->empty()) {
        return saliency_map_share(image, *in.saliency_map).shares[face_index];
      }
      throw MissingSaliency("image '" + image.image_id + "' has no fixations or saliency map");
  }
  return 0.0;
}

}  // namespace importance
