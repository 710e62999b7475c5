#pragma once

// Evaluation protocol: weighted pair accuracy, single-cue baselines,
// pair-level k-fold cross-validation with C selection on a validation fold,
// leave-one-human-out agreement, saliency-vs-importance comparison and
// description selection.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "importance/corpus.hpp"
#include "importance/features.hpp"
#include "importance/ranking.hpp"
#include "importance/svr.hpp"

namespace importance {

// sign(prediction) vs sign(s_a - s_b), each pair weighted by max(s_a, s_b).
// Exact ties in the truth always count as correct; a zero prediction on a
// non-tied pair counts as wrong.
double weighted_accuracy(std::span<const double> predictions, std::span<const PairScore> truths);

// Mean of (prediction - (s_a - s_b))^2.
double mse(std::span<const double> predictions, std::span<const PairScore> truths);

struct CategoryAccuracy {
  std::size_t count = 0;
  std::size_t correct = 0;
  double weight = 0.0;
  double weighted_correct = 0.0;

  double weighted() const { return weight > 0.0 ? weighted_correct / weight : 0.0; }
  double unweighted() const { return count > 0 ? static_cast<double>(correct) / count : 0.0; }
};

std::array<CategoryAccuracy, 3> category_accuracy(std::span<const double> predictions,
                                                  std::span<const PairScore> truths);

// ---------------------------------------------------------------------------
// Saliency inputs.

struct FixationPoint {
  double x = 0.0;
  double y = 0.0;
};

struct FixationData {
  std::map<std::string, std::vector<FixationPoint>> points;  // by image_id
  std::size_t dropped = 0;                                   // out-of-bounds points
};

// CSV rows "image_id,x,y" (header line optional). Points outside their image
// are dropped and counted; unknown image ids raise DanglingReference.
FixationData parse_fixations(std::string_view text, const Corpus& corpus);
FixationData load_fixations(const std::filesystem::path& path, const Corpus& corpus);

struct ShareResult {
  std::vector<double> shares;
  bool fallback = false;  // nothing landed in any box; shares are uniform
};

// Fixation count per box over the summed counts of all boxes. A point inside
// overlapping boxes counts once for each.
ShareResult saliency_share(const ImageRecord& image, std::span<const FixationPoint> fixations);

// Saliency-map intensity per box over the summed intensities of all boxes.
ShareResult saliency_map_share(const ImageRecord& image, const GrayImage& map);

struct CorpusSaliency {
  std::vector<std::optional<ShareResult>> images;  // nullopt: no saliency input
  bool complete() const;
};

// Fixations take precedence; otherwise the image's saliency map is loaded
// when load_maps is set.
CorpusSaliency corpus_saliency(const Corpus& corpus, const FixationData* fixations, bool load_maps);

// ---------------------------------------------------------------------------
// Baselines. Higher score = more important.

enum class Baseline { Center = 0, Scale = 1, Sharpness = 2, Saliency = 3 };
inline constexpr std::array<Baseline, 4> kBaselines = {Baseline::Center, Baseline::Scale, Baseline::Sharpness,
                                                       Baseline::Saliency};
std::string_view to_string(Baseline b);

struct BaselineInputs {
  const GrayImage* pixels = nullptr;
  std::span<const FixationPoint> fixations;
  bool has_fixations = false;
  const GrayImage* saliency_map = nullptr;
  EnergyMode energy = EnergyMode::Squared;
};

// Throws MissingPixels (sharpness) or MissingSaliency (saliency).
double baseline_score(const ImageRecord& image, std::size_t face_index, Baseline method, const BaselineInputs& in);

// ---------------------------------------------------------------------------
// Cross-validation.

std::vector<double> default_c_grid();  // 2^-6, 2^-4, ..., 2^6

struct CvConfig {
  std::vector<double> c_grid = default_c_grid();
  SolverConfig solver;
  std::size_t folds = 10;
  std::uint64_t seed = 42;
  std::vector<std::size_t> feature_subset;     // empty: all features
  std::optional<std::string> exclude_worker;   // leave-one-human-out ground truth
  bool include_baselines = true;
};

struct MethodResult {
  std::string method;
  bool available = true;
  std::string note;
  double wa_mean = 0.0;
  double wa_std = 0.0;
  std::optional<double> mse;
  std::array<CategoryAccuracy, 3> categories{};
  std::vector<double> fold_wa;
};

struct EvalReport {
  std::string style;
  std::size_t pairs = 0;
  std::size_t folds = 0;
  std::array<std::size_t, 3> category_counts{};
  std::size_t leakage_pairs = 0;  // test pairs whose image also occurs in the training folds
  std::vector<double> selected_c;
  std::size_t unconverged_solves = 0;
  std::vector<MethodResult> methods;

  const MethodResult& method(std::string_view name) const;
};

// Assigns each pair index to one of `folds` folds after a seeded shuffle.
std::vector<std::size_t> assign_folds(std::size_t pairs, std::size_t folds, std::uint64_t seed);

// Rows: "model", "random", then the baselines (marked unavailable when their
// inputs are missing). Rotations run in parallel; results do not depend on
// the schedule. Throws TooFewPairs.
EvalReport cross_validate(const Corpus& corpus, const CorpusFeatures& features, const CorpusSaliency* saliency,
                          const CvConfig& cfg);

struct AgreementResult {
  double mean = 0.0;
  double std = 0.0;
  std::vector<std::pair<std::string, double>> per_worker;
};

// Each worker's converted scores act as predictions against the mean of the
// remaining workers. Throws InsufficientJudgments when a pair has < 2
// judgments.
AgreementResult inter_human_agreement(const Corpus& corpus);

struct LohoSummary {
  std::string method;
  bool available = true;
  double mean = 0.0;
  double std = 0.0;  // across held-out workers
};

struct LohoReport {
  std::vector<std::string> workers;
  std::vector<EvalReport> runs;
  std::vector<LohoSummary> summary;
};

// One cross_validate per held-out worker's ground truth.
LohoReport leave_one_human_out_training(const Corpus& corpus, const CorpusFeatures& features,
                                        const CorpusSaliency* saliency, const CvConfig& cfg);

struct AblationRow {
  std::string name;
  MethodResult result;
};

// Model accuracy with feature groups removed or isolated.
std::vector<AblationRow> feature_ablation(const Corpus& corpus, const CorpusFeatures& features, const CvConfig& cfg);

// ---------------------------------------------------------------------------
// Saliency vs importance.

struct ImageTau {
  std::string image_id;
  double tau = 0.0;
  bool ties = false;
  bool saliency_fallback = false;
};

struct SaliencyComparison {
  double tau_mean = 0.0;
  std::vector<ImageTau> images;
  std::array<std::array<std::size_t, 3>, 3> confusion{};  // [saliency category][importance category]
  double top1_agreement = 0.0;

  double row_fraction(std::size_t saliency_cat, std::size_t importance_cat) const;
};

// Per image: Elo ranking from aggregated pair scores vs fixation-share
// ranking. Throws MissingFixations when an image with pairs lacks saliency.
SaliencyComparison saliency_vs_importance(const Corpus& corpus, const CorpusSaliency& saliency,
                                          const EloConfig& elo = {});

// Elo ratings of every face of one image from its aggregated pair scores;
// faces without comparisons keep the initial rating.
std::vector<double> image_importance_ratings(const Corpus& corpus, std::size_t image_index, const EloConfig& elo = {});

// ---------------------------------------------------------------------------
// Description selection.

// Sentence of the highest-scoring face; ties go to the smallest face_id.
// Throws MissingSentence / LengthMismatch.
std::string select_description(const ImageRecord& image, std::span<const double> scores);

struct DescribeRow {
  std::string image_id;
  std::string model_face;
  std::string oracle_face;
  std::string center_face;
  std::string random_face;
  std::string sentence;  // the model's choice
};

struct DescribeReport {
  std::vector<DescribeRow> rows;
  double model_agreement = 0.0;   // fraction of images where model choice = oracle choice
  double center_agreement = 0.0;
  double random_agreement = 0.0;
};

// Runs the selection for the listed images (all with sentences when empty).
DescribeReport describe_images(const Corpus& corpus, const CorpusFeatures& features, const RegressionModel& model,
                               std::span<const std::size_t> image_indices, const EloConfig& elo, std::uint64_t seed);

// Holds out a seeded fraction of images, trains on pairs among the rest and
// reports selections on the held-out images.
DescribeReport describe_protocol(const Corpus& corpus, const CorpusFeatures& features, const SolverConfig& solver,
                                 double test_fraction, const EloConfig& elo, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training-set construction shared by the CLI.

// Both orientations of every listed pair: (phi_a - phi_b, s_a - s_b) and the negation.
TrainingSet build_training_set(const Corpus& corpus, const CorpusFeatures& features,
                               std::span<const std::size_t> pair_indices,
                               std::optional<std::string_view> exclude_worker = std::nullopt,
                               std::span<const std::size_t> feature_subset = {});

// ---------------------------------------------------------------------------
// Report serialization (deterministic).

void write_report_tsv(std::ostream& out, const EvalReport& report);
std::string report_to_json(const EvalReport& report, const std::optional<AgreementResult>& agreement,
                           const std::optional<LohoReport>& loho, std::span<const AblationRow> ablation);

}  // namespace importance
