#include "importance/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "importance/error.hpp"
#include "json.hpp"

namespace importance {

using nlohmann::json;

PoseEstimate PoseEstimate::from_scores(const std::array<double, kPoseComponents>& scores) {
  PoseEstimate pose;
  pose.component_scores = scores;
  std::size_t best = 0;
  for (std::size_t k = 1; k < kPoseComponents; ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  pose.component_id = static_cast<int>(best) + 1;
  return pose;
}

std::optional<std::size_t> ImageRecord::face_index(std::string_view id) const {
  for (std::size_t i = 0; i < faces.size(); ++i) {
    if (faces[i].face_id == id) return i;
  }
  return std::nullopt;
}

std::string_view to_string(Magnitude m) {
  switch (m) {
    case Magnitude::Significant: return "significant";
    case Magnitude::Slight: return "slight";
    case Magnitude::Same: return "same";
  }
  return "?";
}

std::string_view to_string(PairCategory c) {
  switch (c) {
    case PairCategory::SignificantlyMore: return "significantly-more";
    case PairCategory::SlightlyMore: return "slightly-more";
    case PairCategory::AlmostSame: return "almost-same";
  }
  return "?";
}

std::string_view to_string(PairStyle s) {
  return s == PairStyle::ImageLevel ? "image" : "corpus";
}

PairScore convert_judgment(const PairJudgment& judgment) {
  double winner_score = 0.5;
  switch (judgment.magnitude) {
    case Magnitude::Significant: winner_score = 1.0; break;
    case Magnitude::Slight: winner_score = 0.75; break;
    case Magnitude::Same: return PairScore{0.5, 0.5};
  }
  const double loser_score = 1.0 - winner_score;
  return judgment.winner == Side::A ? PairScore{winner_score, loser_score}
                                    : PairScore{loser_score, winner_score};
}

PairScore aggregate_scores(const AnnotatedPair& pair, std::optional<std::string_view> exclude_worker) {
  // Converted scores are multiples of 0.25, so the running sum is exact and
  // the result does not depend on judgment order.
  double sum_a = 0.0;
  std::size_t n = 0;
  for (const auto& j : pair.judgments) {
    if (exclude_worker && j.worker_id == *exclude_worker) continue;
    sum_a += convert_judgment(j).s_a;
    ++n;
  }
  if (n == 0) {
    throw EmptyJudgmentSet("pair '" + pair.pair_id + "' has no judgments left after exclusion");
  }
  const double s_a = sum_a / static_cast<double>(n);
  return PairScore{s_a, 1.0 - s_a};
}

PairCategory categorize_pair(PairScore score) {
  const double gap = std::abs(score.s_a - score.s_b);
  if (gap > 0.75) return PairCategory::SignificantlyMore;
  if (gap > 0.25) return PairCategory::SlightlyMore;
  return PairCategory::AlmostSame;
}

double CategoryDistribution::fraction(PairCategory c) const {
  return total == 0 ? 0.0 : static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
}

namespace {

std::string face_label(const ImageRecord& image, const FaceRecord& face) {
  return "image '" + image.image_id + "' face '" + face.face_id + "'";
}

void validate_image(const ImageRecord& image) {
  const std::string label = "image '" + image.image_id + "'";
  if (image.image_id.empty()) throw InvariantViolation("image with empty image_id");
  if (image.pixel_width <= 0 || image.pixel_height <= 0) {
    throw InvariantViolation(label + ": width and height must be positive");
  }
  if (image.faces.empty()) throw InvariantViolation(label + ": at least one face is required");

  std::set<std::string_view> ids;
  for (const auto& face : image.faces) {
    const std::string where = face_label(image, face);
    if (face.face_id.empty()) throw InvariantViolation(label + ": face with empty face_id");
    if (!ids.insert(face.face_id).second) throw InvariantViolation(where + ": duplicate face_id");
    const Box& b = face.box;
    if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
      throw InvariantViolation(where + ": non-finite box coordinate");
    }
    if (b.w <= 0.0 || b.h <= 0.0) throw InvariantViolation(where + ": box width and height must be positive");
    if (b.x >= image.pixel_width || b.y >= image.pixel_height || b.x + b.w <= 0.0 || b.y + b.h <= 0.0) {
      throw InvariantViolation(where + ": box does not intersect the image");
    }
    if (face.pose) {
      const auto& pose = *face.pose;
      for (double s : pose.component_scores) {
        if (!std::isfinite(s)) throw InvariantViolation(where + ": non-finite pose score");
      }
      if (pose.component_id != PoseEstimate::from_scores(pose.component_scores).component_id) {
        throw InvariantViolation(where + ": pose component_id is not the argmax of component_scores");
      }
    }
  }
}

}  // namespace

Corpus::Corpus(PairStyle style, std::vector<ImageRecord> images, std::vector<AnnotatedPair> pairs)
    : style_(style), images_(std::move(images)), pairs_(std::move(pairs)) {
  for (std::size_t i = 0; i < images_.size(); ++i) {
    validate_image(images_[i]);
    if (!image_lookup_.emplace(images_[i].image_id, i).second) {
      throw InvariantViolation("image '" + images_[i].image_id + "': duplicate image_id");
    }
  }

  std::set<std::string_view> pair_ids;
  resolved_.reserve(pairs_.size());
  for (const auto& pair : pairs_) {
    const std::string label = "pair '" + pair.pair_id + "'";
    if (pair.pair_id.empty()) throw InvariantViolation("pair with empty pair_id");
    if (!pair_ids.insert(pair.pair_id).second) throw InvariantViolation(label + ": duplicate pair_id");

    auto resolve = [&](const FaceRef& ref) {
      const auto img = image_index(ref.image_id);
      if (!img) throw DanglingReference(label + ": unknown image '" + ref.image_id + "'");
      const auto face = images_[*img].face_index(ref.face_id);
      if (!face) {
        throw DanglingReference(label + ": unknown face '" + ref.face_id + "' in image '" + ref.image_id + "'");
      }
      return FaceLocation{*img, *face};
    };
    ResolvedPair r{resolve(pair.side_a), resolve(pair.side_b)};

    if (r.a == r.b) throw InvariantViolation(label + ": both sides reference the same face");
    if (style_ == PairStyle::ImageLevel && r.a.image != r.b.image) {
      throw InvariantViolation(label + ": image-level pair spans two images");
    }
    if (style_ == PairStyle::CorpusLevel && r.a.image == r.b.image) {
      throw InvariantViolation(label + ": corpus-level pair must compare two different images");
    }
    if (pair.judgments.empty()) throw InvariantViolation(label + ": no judgments");
    resolved_.push_back(r);
  }
}

std::optional<std::size_t> Corpus::image_index(std::string_view image_id) const {
  const auto it = image_lookup_.find(std::string(image_id));
  if (it == image_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Corpus::workers() const {
  std::set<std::string> ids;
  for (const auto& pair : pairs_) {
    for (const auto& j : pair.judgments) ids.insert(j.worker_id);
  }
  return {ids.begin(), ids.end()};
}

CategoryDistribution category_distribution(const Corpus& corpus) {
  CategoryDistribution dist;
  for (const auto& pair : corpus.pairs()) {
    ++dist.counts[static_cast<std::size_t>(categorize_pair(aggregate_scores(pair)))];
    ++dist.total;
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Manifest (JSON) reading and writing.

namespace {

template <typename T>
T required(const json& node, const char* key, const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end()) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> optional_field(const json& node, const char* key, const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

int pixel_dimension(const json& node, const char* key, const std::string& where) {
  const double v = required<double>(node, key, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ParseError(where + ": '" + key + "' must be an integer");
  return static_cast<int>(v);
}

FaceRecord parse_face(const json& node, const std::string& image_where) {
  if (!node.is_object()) throw ParseError(image_where + ": face entry is not an object");
  FaceRecord face;
  face.face_id = required<std::string>(node, "face_id", image_where + " face");
  const std::string where = image_where + " face '" + face.face_id + "'";
  const auto box = required<std::vector<double>>(node, "box", where);
  if (box.size() != 4) throw ParseError(where + ": box must be [x, y, w, h]");
  face.box = Box{box[0], box[1], box[2], box[3]};
  face.detected_automatically = optional_field<bool>(node, "detected", where).value_or(false);
  face.sentence = optional_field<std::string>(node, "sentence", where);

  if (const auto it = node.find("pose"); it != node.end() && !it->is_null()) {
    const auto scores = required<std::vector<double>>(*it, "component_scores", where + " pose");
    if (scores.size() != kPoseComponents) throw ParseError(where + ": pose needs 13 component_scores");
    std::array<double, kPoseComponents> arr{};
    std::copy(scores.begin(), scores.end(), arr.begin());
    PoseEstimate pose = PoseEstimate::from_scores(arr);
    if (const auto id = optional_field<int>(*it, "component_id", where + " pose")) {
      if (*id < 1 || *id > static_cast<int>(kPoseComponents)) {
        throw InvariantViolation(where + ": pose component_id outside [1, 13]");
      }
      pose.component_id = *id;
    }
    face.pose = pose;
  }
  return face;
}

FaceRef parse_ref(const json& node, const char* key, const std::string& where) {
  const auto it = node.find(key);
  if (it == node.end() || !it->is_object()) throw ParseError(where + ": missing face reference '" + key + "'");
  return FaceRef{required<std::string>(*it, "image_id", where), required<std::string>(*it, "face_id", where)};
}

PairJudgment parse_judgment(const json& node, const std::string& where) {
  if (!node.is_object()) throw ParseError(where + ": judgment is not an object");
  PairJudgment j;
  j.worker_id = required<std::string>(node, "worker", where);
  const auto winner = required<std::string>(node, "winner", where);
  if (winner == "A") {
    j.winner = Side::A;
  } else if (winner == "B") {
    j.winner = Side::B;
  } else {
    throw ParseError(where + ": winner must be \"A\" or \"B\"");
  }
  const auto magnitude = required<std::string>(node, "magnitude", where);
  if (magnitude == "significant") {
    j.magnitude = Magnitude::Significant;
  } else if (magnitude == "slight") {
    j.magnitude = Magnitude::Slight;
  } else if (magnitude == "same") {
    j.magnitude = Magnitude::Same;
  } else {
    throw ParseError(where + ": unknown magnitude '" + magnitude + "'");
  }
  return j;
}

}  // namespace

Corpus parse_corpus(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest root must be an object");

  PairStyle style = PairStyle::ImageLevel;
  if (const auto s = optional_field<std::string>(doc, "pair_style", "manifest")) {
    if (*s == "image") {
      style = PairStyle::ImageLevel;
    } else if (*s == "corpus") {
      style = PairStyle::CorpusLevel;
    } else {
      throw ParseError("manifest: pair_style must be \"image\" or \"corpus\"");
    }
  }

  const auto images_it = doc.find("images");
  if (images_it == doc.end() || !images_it->is_array()) throw ParseError("manifest: missing 'images' array");
  std::vector<ImageRecord> images;
  images.reserve(images_it->size());
  for (const auto& node : *images_it) {
    if (!node.is_object()) throw ParseError("manifest: image entry is not an object");
    ImageRecord image;
    image.image_id = required<std::string>(node, "image_id", "image");
    const std::string where = "image '" + image.image_id + "'";
    image.pixel_width = pixel_dimension(node, "width", where);
    image.pixel_height = pixel_dimension(node, "height", where);
    image.image_path = optional_field<std::string>(node, "image_path", where);
    image.saliency_map_path = optional_field<std::string>(node, "saliency_map_path", where);
    const auto faces_it = node.find("faces");
    if (faces_it == node.end() || !faces_it->is_array()) throw ParseError(where + ": missing 'faces' array");
    for (const auto& f : *faces_it) image.faces.push_back(parse_face(f, where));
    images.push_back(std::move(image));
  }

  std::vector<AnnotatedPair> pairs;
  if (const auto pairs_it = doc.find("pairs"); pairs_it != doc.end()) {
    if (!pairs_it->is_array()) throw ParseError("manifest: 'pairs' must be an array");
    for (const auto& node : *pairs_it) {
      if (!node.is_object()) throw ParseError("manifest: pair entry is not an object");
      AnnotatedPair pair;
      pair.pair_id = required<std::string>(node, "pair_id", "pair");
      const std::string where = "pair '" + pair.pair_id + "'";
      pair.side_a = parse_ref(node, "a", where);
      pair.side_b = parse_ref(node, "b", where);
      pair.person = optional_field<std::string>(node, "person", where);
      const auto js = node.find("judgments");
      if (js == node.end() || !js->is_array()) throw ParseError(where + ": missing 'judgments' array");
      for (const auto& j : *js) pair.judgments.push_back(parse_judgment(j, where));
      pairs.push_back(std::move(pair));
    }
  }

  return Corpus(style, std::move(images), std::move(pairs));
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest '" + manifest_path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Corpus corpus = parse_corpus(buffer.str());
  corpus.set_base_dir(manifest_path.parent_path());
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  json doc;
  doc["pair_style"] = std::string(to_string(corpus.style()));
  json images = json::array();
  for (const auto& image : corpus.images()) {
    json node;
    node["image_id"] = image.image_id;
    node["width"] = image.pixel_width;
    node["height"] = image.pixel_height;
    if (image.image_path) node["image_path"] = *image.image_path;
    if (image.saliency_map_path) node["saliency_map_path"] = *image.saliency_map_path;
    json faces = json::array();
    for (const auto& face : image.faces) {
      json f;
      f["face_id"] = face.face_id;
      f["box"] = {face.box.x, face.box.y, face.box.w, face.box.h};
      f["detected"] = face.detected_automatically;
      if (face.pose) {
        f["pose"]["component_id"] = face.pose->component_id;
        f["pose"]["component_scores"] = face.pose->component_scores;
      }
      if (face.sentence) f["sentence"] = *face.sentence;
      faces.push_back(std::move(f));
    }
    node["faces"] = std::move(faces);
    images.push_back(std::move(node));
  }
  doc["images"] = std::move(images);

  json pairs = json::array();
  for (const auto& pair : corpus.pairs()) {
    json node;
    node["pair_id"] = pair.pair_id;
    node["a"] = {{"image_id", pair.side_a.image_id}, {"face_id", pair.side_a.face_id}};
    node["b"] = {{"image_id", pair.side_b.image_id}, {"face_id", pair.side_b.face_id}};
    if (pair.person) node["person"] = *pair.person;
    json js = json::array();
    for (const auto& j : pair.judgments) {
      js.push_back({{"worker", j.worker_id},
                    {"winner", j.winner == Side::A ? "A" : "B"},
                    {"magnitude", std::string(to_string(j.magnitude))}});
    }
    node["judgments"] = std::move(js);
    pairs.push_back(std::move(node));
  }
  doc["pairs"] = std::move(pairs);
  return doc.dump(2) + "\n";
}

}  // namespace importance
