#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "importance/error.hpp"
#include "importance/eval.hpp"

namespace importance {

namespace {

// Index of the highest score; ties go to the lexicographically smallest face_id.
std::size_t argmax_face(const ImageRecord& image, std::span<const double> scores) {
  if (scores.size() != image.faces.size()) throw LengthMismatch("scores do not match the faces of '" + image.image_id + "'");
  std::size_t best = 0;
  for (std::size_t f = 1; f < scores.size(); ++f) {
    if (scores[f] > scores[best] || (scores[f] == scores[best] && image.faces[f].face_id < image.faces[best].face_id)) {
      best = f;
    }
  }
  return best;
}

bool has_all_sentences(const ImageRecord& image) {
  return std::all_of(image.faces.begin(), image.faces.end(), [](const FaceRecord& f) { return f.sentence.has_value(); });
}

std::vector<std::size_t> pairs_within(const Corpus& corpus, std::size_t image_index) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < corpus.resolved().size(); ++k) {
    const auto& r = corpus.resolved()[k];
    if (r.a.image == image_index && r.b.image == image_index) out.push_back(k);
  }
  return out;
}

}  // namespace

std::vector<double> image_importance_ratings(const Corpus& corpus, std::size_t image_index, const EloConfig& elo) {
  const auto& image = corpus.images().at(image_index);
  std::vector<std::string> items;
  for (const auto& f : image.faces) items.push_back(f.face_id);
  std::vector<Outcome> outcomes;
  for (std::size_t k : pairs_within(corpus, image_index)) {
    const auto& pair = corpus.pairs()[k];
    outcomes.push_back({pair.side_a.face_id, pair.side_b.face_id, aggregate_scores(pair).s_a});
  }
  const RankingTable table = elo_rank(items, outcomes, elo);
  std::vector<double> ratings;
  for (const auto& id : items) ratings.push_back(table.find(id).rating);
  return ratings;
}

double SaliencyComparison::row_fraction(std::size_t saliency_cat, std::size_t importance_cat) const {
  const auto& row = confusion.at(saliency_cat);
  const std::size_t total = row[0] + row[1] + row[2];
  return total > 0 ? static_cast<double>(row.at(importance_cat)) / static_cast<double>(total) : 0.0;
}

SaliencyComparison saliency_vs_importance(const Corpus& corpus, const CorpusSaliency& saliency, const EloConfig& elo) {
  if (saliency.images.size() != corpus.images().size()) throw LengthMismatch("saliency does not cover the corpus");
  SaliencyComparison out;
  std::size_t top1 = 0;
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < corpus.images().size(); ++i) {
    const auto pairs = pairs_within(corpus, i);
    if (pairs.empty()) continue;
    const auto& image = corpus.images()[i];
    if (!saliency.images[i]) throw MissingFixations("image '" + image.image_id + "' has no saliency input");
    const auto& shares = saliency.images[i]->shares;

    const auto ratings = image_importance_ratings(corpus, i, elo);
    const TauResult t = kendall_tau(ratings, shares);
    out.images.push_back({image.image_id, t.tau, t.ties, saliency.images[i]->fallback});
    tau_sum += t.tau;
    if (argmax_face(image, ratings) == argmax_face(image, shares)) ++top1;

    for (std::size_t k : pairs) {
      const auto& r = corpus.resolved()[k];
      const double sa = shares[r.a.face], sb = shares[r.b.face];
      PairScore sal;
      if (sa + sb > 0.0) sal = {sa / (sa + sb), sb / (sa + sb)};
      const auto sc = static_cast<std::size_t>(categorize_pair(sal));
      const auto ic = static_cast<std::size_t>(categorize_pair(aggregate_scores(corpus.pairs()[k])));
      ++out.confusion[sc][ic];
    }
  }
  if (out.images.empty()) throw EmptyInput("no image has within-image pairs to compare");
  out.tau_mean = tau_sum / static_cast<double>(out.images.size());
  out.top1_agreement = static_cast<double>(top1) / static_cast<double>(out.images.size());
  return out;
}

std::string select_description(const ImageRecord& image, std::span<const double> scores) {
  for (const auto& f : image.faces) {
    if (!f.sentence) throw MissingSentence("face '" + f.face_id + "' of image '" + image.image_id + "' has no sentence");
  }
  return *image.faces[argmax_face(image, scores)].sentence;
}

DescribeReport describe_images(const Corpus& corpus, const CorpusFeatures& features, const RegressionModel& model,
                               std::span<const std::size_t> image_indices, const EloConfig& elo, std::uint64_t seed) {
  std::vector<std::size_t> chosen(image_indices.begin(), image_indices.end());
  if (chosen.empty()) {
    for (std::size_t i = 0; i < corpus.images().size(); ++i) {
      if (has_all_sentences(corpus.images()[i])) chosen.push_back(i);
    }
  }
  if (chosen.empty()) throw MissingSentence("no image has a sentence for every face");

  DescribeReport out;
  std::uint64_t rng = seed;
  std::size_t model_hits = 0, center_hits = 0, random_hits = 0;
  for (std::size_t i : chosen) {
    const auto& image = corpus.images().at(i);
    const auto scores = score_individuals(model, features.images.at(i).faces);
    DescribeRow row;
    row.image_id = image.image_id;
    row.sentence = select_description(image, scores);
    const std::size_t model_face = argmax_face(image, scores);

    const auto ratings = image_importance_ratings(corpus, i, elo);
    const std::size_t oracle_face = argmax_face(image, ratings);

    std::vector<double> center(image.faces.size());
    for (std::size_t f = 0; f < center.size(); ++f) center[f] = -features.images[i].faces[f][feature::kWeightedDistCenter];
    const std::size_t center_face = argmax_face(image, center);
    const std::size_t random_face = uniform_index(rng, image.faces.size());

    row.model_face = image.faces[model_face].face_id;
    row.oracle_face = image.faces[oracle_face].face_id;
    row.center_face = image.faces[center_face].face_id;
    row.random_face = image.faces[random_face].face_id;
    model_hits += model_face == oracle_face;
    center_hits += center_face == oracle_face;
    random_hits += random_face == oracle_face;
    out.rows.push_back(std::move(row));
  }
  const double n = static_cast<double>(out.rows.size());
  out.model_agreement = static_cast<double>(model_hits) / n;
  out.center_agreement = static_cast<double>(center_hits) / n;
  out.random_agreement = static_cast<double>(random_hits) / n;
  return out;
}

DescribeReport describe_protocol(const Corpus& corpus, const CorpusFeatures& features, const SolverConfig& solver,
                                 double test_fraction, const EloConfig& elo, std::uint64_t seed) {
  if (corpus.style() != PairStyle::ImageLevel) throw InputError("description selection needs image-level pairs");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("test fraction must lie in (0, 1)");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < corpus.images().size(); ++i) {
    const auto& image = corpus.images()[i];
    if (image.faces.size() >= 2 && has_all_sentences(image) && !pairs_within(corpus, i).empty()) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) throw MissingSentence("no annotated image has a sentence for every face");

  std::uint64_t rng = seed;
  for (std::size_t i = candidates.size(); i > 1; --i) std::swap(candidates[i - 1], candidates[uniform_index(rng, i)]);
  const auto held = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(candidates.size()))));
  std::vector<std::size_t> test(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(held));
  std::sort(test.begin(), test.end());
  const std::set<std::size_t> test_set(test.begin(), test.end());

  std::vector<std::size_t> train_pairs;
  for (std::size_t k = 0; k < corpus.resolved().size(); ++k) {
    if (!test_set.count(corpus.resolved()[k].a.image)) train_pairs.push_back(k);
  }
  if (train_pairs.empty()) throw TooFewPairs("no training pairs remain after holding out images");
  const RegressionModel model = train(build_training_set(corpus, features, train_pairs), solver);
  return describe_images(corpus, features, model, test, elo, rng);
}

}  // namespace importance
