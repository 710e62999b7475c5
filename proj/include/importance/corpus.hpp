#pragma once

// Data model for annotated person-importance datasets: images, faces, crowd
// judgments on face pairs, and the conversion of judgments into importance
// scores.

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace importance {

inline constexpr std::size_t kPoseComponents = 13;

struct Box {
  double x = 0.0;  // top-left corner, pixels
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  bool operator==(const Box&) const = default;
};

// Output of a 13-component face pose mixture model, one component per 15
// degrees of yaw between -90 and +90.
struct PoseEstimate {
  int component_id = 1;  // 1-based
  std::array<double, kPoseComponents> component_scores{};

  // Builds an estimate whose component_id is the argmax of the scores
  // (ties toward the lower index).
  static PoseEstimate from_scores(const std::array<double, kPoseComponents>& scores);
  bool operator==(const PoseEstimate&) const = default;
};

struct FaceRecord {
  std::string face_id;
  Box box;
  bool detected_automatically = false;
  std::optional<PoseEstimate> pose;
  std::optional<std::string> sentence;  // one-sentence description of the person
  bool operator==(const FaceRecord&) const = default;
};

struct ImageRecord {
  std::string image_id;
  int pixel_width = 0;
  int pixel_height = 0;
  std::optional<std::string> image_path;
  std::optional<std::string> saliency_map_path;
  std::vector<FaceRecord> faces;

  std::optional<std::size_t> face_index(std::string_view face_id) const;
  bool operator==(const ImageRecord&) const = default;
};

enum class Side { A, B };
enum class Magnitude { Significant, Slight, Same };
enum class PairCategory { SignificantlyMore = 0, SlightlyMore = 1, AlmostSame = 2 };
enum class PairStyle { ImageLevel, CorpusLevel };

inline constexpr std::array<PairCategory, 3> kPairCategories = {
    PairCategory::SignificantlyMore, PairCategory::SlightlyMore, PairCategory::AlmostSame};

std::string_view to_string(Magnitude m);
std::string_view to_string(PairCategory c);
std::string_view to_string(PairStyle s);

struct FaceRef {
  std::string image_id;
  std::string face_id;
  bool operator==(const FaceRef&) const = default;
};

struct PairJudgment {
  std::string worker_id;
  Side winner = Side::A;
  Magnitude magnitude = Magnitude::Same;  // winner is ignored for Same
  bool operator==(const PairJudgment&) const = default;
};

struct AnnotatedPair {
  std::string pair_id;
  FaceRef side_a;
  FaceRef side_b;
  std::vector<PairJudgment> judgments;
  std::optional<std::string> person;  // corpus-level pairs: the depicted person
  bool operator==(const AnnotatedPair&) const = default;
};

struct PairScore {
  double s_a = 0.5;
  double s_b = 0.5;

  double gap() const { return s_a - s_b; }
  double weight() const { return s_a > s_b ? s_a : s_b; }
  bool operator==(const PairScore&) const = default;
};

// Three-tier annotation table: significant 1.00/0.00, slight 0.75/0.25,
// same 0.50/0.50, mirrored when B wins.
PairScore convert_judgment(const PairJudgment& judgment);

// Component-wise mean of the converted judgments, optionally leaving one
// worker out. Throws EmptyJudgmentSet if nothing remains.
PairScore aggregate_scores(const AnnotatedPair& pair,
                           std::optional<std::string_view> exclude_worker = std::nullopt);

// Gap thresholds sit halfway between the gaps of pure annotations {0, 0.5, 1}.
PairCategory categorize_pair(PairScore score);

struct FaceLocation {
  std::size_t image = 0;
  std::size_t face = 0;
  bool operator==(const FaceLocation&) const = default;
};

struct ResolvedPair {
  FaceLocation a;
  FaceLocation b;
};

struct CategoryDistribution {
  std::array<std::size_t, 3> counts{};
  std::size_t total = 0;
  double fraction(PairCategory c) const;
};

// Immutable, fully cross-referenced dataset. Construction validates every
// invariant and throws InvariantViolation / DanglingReference naming the
// offending record.
class Corpus {
 public:
  Corpus(PairStyle style, std::vector<ImageRecord> images, std::vector<AnnotatedPair> pairs);

  PairStyle style() const { return style_; }
  const std::vector<ImageRecord>& images() const { return images_; }
  const std::vector<AnnotatedPair>& pairs() const { return pairs_; }
  const std::vector<ResolvedPair>& resolved() const { return resolved_; }

  std::optional<std::size_t> image_index(std::string_view image_id) const;
  const FaceRecord& face(FaceLocation loc) const { return images_[loc.image].faces[loc.face]; }

  // Sorted, de-duplicated worker ids over all judgments.
  std::vector<std::string> workers() const;

  // Directory used to resolve relative image paths (empty when built in memory).
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  bool operator==(const Corpus& other) const {
    return style_ == other.style_ && images_ == other.images_ && pairs_ == other.pairs_;
  }

 private:
  PairStyle style_;
  std::vector<ImageRecord> images_;
  std::vector<AnnotatedPair> pairs_;
  std::vector<ResolvedPair> resolved_;
  std::unordered_map<std::string, std::size_t> image_lookup_;
  std::filesystem::path base_dir_;
};

// Category counts using the all-worker aggregate of each pair.
CategoryDistribution category_distribution(const Corpus& corpus);

Corpus parse_corpus(std::string_view text);
Corpus load_corpus(const std::filesystem::path& manifest_path);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace importance
