#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "importance/error.hpp"
#include "importance/eval.hpp"

namespace importance {

std::vector<double> default_c_grid() { return {1.0 / 64, 1.0 / 16, 1.0 / 4, 1.0, 4.0, 16.0, 64.0}; }

const MethodResult& EvalReport::method(std::string_view name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw UnknownItem("report has no method '" + std::string(name) + "'");
}

std::vector<std::size_t> assign_folds(std::size_t pairs, std::size_t folds, std::uint64_t seed) {
  std::vector<std::size_t> order(pairs);
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t rng = seed;
  for (std::size_t i = pairs; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<std::size_t> fold(pairs);
  for (std::size_t pos = 0; pos < pairs; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

namespace {

std::vector<double> select_columns(const FeatureVector& f, std::span<const std::size_t> subset) {
  if (subset.empty()) return f;
  std::vector<double> out;
  out.reserve(subset.size());
  for (std::size_t k : subset) out.push_back(f[k]);
  return out;
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double mean_of(std::span<const double> xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

template <typename T>
std::vector<T> gather(const std::vector<T>& values, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(values[k]);
  return out;
}

// Per-face scores of one baseline, or nullopt when its inputs are missing for
// an image that takes part in some pair.
std::optional<std::vector<std::vector<double>>> baseline_face_scores(const Corpus& corpus,
                                                                     const CorpusFeatures& features,
                                                                     const CorpusSaliency* saliency, Baseline b) {
  std::vector<bool> used(corpus.images().size(), false);
  for (const auto& r : corpus.resolved()) used[r.a.image] = used[r.b.image] = true;

  std::vector<std::vector<double>> scores(corpus.images().size());
  for (std::size_t i = 0; i < corpus.images().size(); ++i) {
    const auto& img = features.images[i];
    auto& out = scores[i];
    out.resize(img.faces.size(), 0.0);
    switch (b) {
      case Baseline::Center:
        for (std::size_t f = 0; f < img.faces.size(); ++f) out[f] = -img.faces[f][feature::kWeightedDistCenter];
        break;
      case Baseline::Scale:
        for (std::size_t f = 0; f < img.faces.size(); ++f) out[f] = img.faces[f][feature::kScale];
        break;
      case Baseline::Sharpness:
        if (img.sharpness_missing) {
          if (used[i]) return std::nullopt;
          break;
        }
        for (std::size_t f = 0; f < img.faces.size(); ++f) out[f] = img.faces[f][feature::kSharpness];
        break;
      case Baseline::Saliency:
        if (saliency == nullptr || !saliency->images[i]) {
          if (used[i]) return std::nullopt;
          break;
        }
        out = saliency->images[i]->shares;
        break;
    }
  }
  return scores;
}

struct Rotation {
  std::vector<std::size_t> test;
  double selected_c = 0.0;
  std::vector<double> predictions;  // aligned with test
  std::size_t unconverged = 0;
  std::set<std::size_t> train_images;
};

}  // namespace

TrainingSet build_training_set(const Corpus& corpus, const CorpusFeatures& features,
                               std::span<const std::size_t> pair_indices, std::optional<std::string_view> exclude_worker,
                               std::span<const std::size_t> feature_subset) {
  TrainingSet set;
  for (std::size_t k : pair_indices) {
    const auto& r = corpus.resolved()[k];
    const PairScore s = aggregate_scores(corpus.pairs()[k], exclude_worker);
    auto phi = compose_pair(select_columns(features.at(r.a), feature_subset),
                            select_columns(features.at(r.b), feature_subset));
    std::vector<double> reversed(phi.size());
    for (std::size_t d = 0; d < phi.size(); ++d) reversed[d] = -phi[d];
    set.add(std::move(phi), s.s_a - s.s_b);
    set.add(std::move(reversed), s.s_b - s.s_a);
  }
  return set;
}

EvalReport cross_validate(const Corpus& corpus, const CorpusFeatures& features, const CorpusSaliency* saliency,
                          const CvConfig& cfg) {
  const std::size_t n = corpus.pairs().size();
  if (cfg.folds < 3) throw InputError("cross-validation needs at least 3 folds");
  if (n < cfg.folds) {
    throw TooFewPairs("cross-validation needs at least " + std::to_string(cfg.folds) + " pairs, corpus has " +
                      std::to_string(n));
  }
  if (cfg.c_grid.empty()) throw InputError("empty C grid");

  const std::optional<std::string_view> exclude =
      cfg.exclude_worker ? std::optional<std::string_view>(*cfg.exclude_worker) : std::nullopt;
  std::vector<PairScore> truths(n);
  std::vector<std::vector<double>> phi(n);
  for (std::size_t k = 0; k < n; ++k) {
    truths[k] = aggregate_scores(corpus.pairs()[k], exclude);
    const auto& r = corpus.resolved()[k];
    phi[k] = compose_pair(select_columns(features.at(r.a), cfg.feature_subset),
                          select_columns(features.at(r.b), cfg.feature_subset));
  }

  const auto fold = assign_folds(n, cfg.folds, cfg.seed);
  std::vector<Rotation> rotations(cfg.folds);
  std::vector<std::exception_ptr> errors(cfg.folds);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(cfg.folds); ++rr) {
    try {
      const auto r = static_cast<std::size_t>(rr);
      const std::size_t val_fold = (r + 1) % cfg.folds;
      Rotation& rot = rotations[r];
      std::vector<std::size_t> train_idx, val;
      for (std::size_t k = 0; k < n; ++k) {
        if (fold[k] == r) {
          rot.test.push_back(k);
        } else if (fold[k] == val_fold) {
          val.push_back(k);
        } else {
          train_idx.push_back(k);
          rot.train_images.insert(corpus.resolved()[k].a.image);
          rot.train_images.insert(corpus.resolved()[k].b.image);
        }
      }
      const TrainingSet data = build_training_set(corpus, features, train_idx, exclude, cfg.feature_subset);
      const auto val_truth = gather(truths, val);

      double best_wa = -1.0;
      std::optional<RegressionModel> best;
      for (double c : cfg.c_grid) {
        SolverConfig solver = cfg.solver;
        solver.c = c;
        RegressionModel model = train(data, solver);
        if (!model.diagnostics.converged) ++rot.unconverged;
        std::vector<double> preds;
        preds.reserve(val.size());
        for (std::size_t k : val) preds.push_back(predict(model, phi[k]));
        const double wa = weighted_accuracy(preds, val_truth);
        if (wa > best_wa) {
          best_wa = wa;
          model.drop_dual_state();
          best = std::move(model);
        }
      }
      rot.selected_c = best->config.c;
      for (std::size_t k : rot.test) rot.predictions.push_back(predict(*best, phi[k]));
    } catch (...) {
      errors[static_cast<std::size_t>(rr)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport report;
  report.style = std::string(to_string(corpus.style()));
  report.pairs = n;
  report.folds = cfg.folds;
  for (const auto& t : truths) ++report.category_counts[static_cast<std::size_t>(categorize_pair(t))];
  for (const auto& rot : rotations) {
    report.selected_c.push_back(rot.selected_c);
    report.unconverged_solves += rot.unconverged;
    for (std::size_t k : rot.test) {
      const auto& r = corpus.resolved()[k];
      if (rot.train_images.count(r.a.image) || rot.train_images.count(r.b.image)) ++report.leakage_pairs;
    }
  }

  // Evaluates per-pair predictions (indexed by pair) on the same test folds.
  auto evaluate = [&](std::string name, const std::vector<double>& pred, bool with_mse) {
    MethodResult m;
    m.method = std::move(name);
    for (const auto& rot : rotations) {
      m.fold_wa.push_back(weighted_accuracy(gather(pred, rot.test), gather(truths, rot.test)));
    }
    m.wa_mean = mean_of(m.fold_wa);
    m.wa_std = sample_std(m.fold_wa);
    if (with_mse) m.mse = mse(pred, truths);
    m.categories = category_accuracy(pred, truths);
    return m;
  };

  std::vector<double> model_pred(n, 0.0);
  for (const auto& rot : rotations) {
    for (std::size_t t = 0; t < rot.test.size(); ++t) model_pred[rot.test[t]] = rot.predictions[t];
  }
  report.methods.push_back(evaluate("model", model_pred, true));

  if (cfg.include_baselines) {
    std::vector<double> coin(n);
    std::uint64_t rng = cfg.seed ^ 0xc01dc0ffeeULL;
    for (auto& c : coin) c = (splitmix64(rng) >> 63) ? 1.0 : -1.0;
    report.methods.push_back(evaluate("random", coin, false));

    for (Baseline b : kBaselines) {
      const auto scores = baseline_face_scores(corpus, features, saliency, b);
      if (!scores) {
        MethodResult m;
        m.method = std::string(to_string(b));
        m.available = false;
        m.note = b == Baseline::Sharpness ? "pixels unavailable" : "saliency inputs unavailable";
        report.methods.push_back(std::move(m));
        continue;
      }
      std::vector<double> pred(n);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& r = corpus.resolved()[k];
        pred[k] = (*scores)[r.a.image][r.a.face] - (*scores)[r.b.image][r.b.face];
      }
      report.methods.push_back(evaluate(std::string(to_string(b)), pred, false));
    }
  }
  return report;
}

AgreementResult inter_human_agreement(const Corpus& corpus) {
  for (const auto& pair : corpus.pairs()) {
    if (pair.judgments.size() < 2) {
      throw InsufficientJudgments("pair '" + pair.pair_id + "' has fewer than 2 judgments");
    }
  }
  AgreementResult out;
  std::vector<double> values;
  for (const auto& worker : corpus.workers()) {
    std::vector<double> preds;
    std::vector<PairScore> truths;
    for (const auto& pair : corpus.pairs()) {
      const auto own = std::find_if(pair.judgments.begin(), pair.judgments.end(),
                                    [&](const PairJudgment& j) { return j.worker_id == worker; });
      if (own == pair.judgments.end()) continue;
      const bool others = std::any_of(pair.judgments.begin(), pair.judgments.end(),
                                      [&](const PairJudgment& j) { return j.worker_id != worker; });
      if (!others) continue;
      preds.push_back(convert_judgment(*own).gap());
      truths.push_back(aggregate_scores(pair, worker));
    }
    if (preds.empty()) continue;
    const double wa = weighted_accuracy(preds, truths);
    out.per_worker.emplace_back(worker, wa);
    values.push_back(wa);
  }
  if (values.empty()) throw InsufficientJudgments("no worker shares a pair with another worker");
  out.mean = mean_of(values);
  out.std = sample_std(values);
  return out;
}

LohoReport leave_one_human_out_training(const Corpus& corpus, const CorpusFeatures& features,
                                        const CorpusSaliency* saliency, const CvConfig& cfg) {
  LohoReport out;
  out.workers = corpus.workers();
  if (out.workers.size() < 2) throw InsufficientJudgments("leave-one-human-out needs at least two workers");
  for (const auto& pair : corpus.pairs()) {
    if (pair.judgments.size() < 2) {
      throw InsufficientJudgments("pair '" + pair.pair_id + "' has fewer than 2 judgments");
    }
  }
  for (const auto& worker : out.workers) {
    CvConfig run = cfg;
    run.exclude_worker = worker;
    out.runs.push_back(cross_validate(corpus, features, saliency, run));
  }
  for (std::size_t m = 0; m < out.runs.front().methods.size(); ++m) {
    LohoSummary s;
    s.method = out.runs.front().methods[m].method;
    std::vector<double> values;
    for (const auto& run : out.runs) {
      if (!run.methods[m].available) s.available = false;
      values.push_back(run.methods[m].wa_mean);
    }
    if (s.available) {
      s.mean = mean_of(values);
      s.std = sample_std(values);
    }
    out.summary.push_back(std::move(s));
  }
  return out;
}

std::vector<AblationRow> feature_ablation(const Corpus& corpus, const CorpusFeatures& features, const CvConfig& cfg) {
  const std::vector<std::size_t> distance = {feature::kDistCenter, feature::kWeightedDistCenter,
                                             feature::kDistCentroid, feature::kDistWeightedCentroid};
  auto without = [](std::vector<std::size_t> drop) {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < kFeatureDims; ++k) {
      if (std::find(drop.begin(), drop.end(), k) == drop.end()) keep.push_back(k);
    }
    return keep;
  };
  std::vector<std::size_t> only = distance;
  only.push_back(feature::kScale);
  only.push_back(feature::kSharpness);

  const std::vector<std::pair<std::string, std::vector<std::size_t>>> variants = {
      {"all", {}},
      {"without distance", without(distance)},
      {"without scale", without({feature::kScale})},
      {"without sharpness", without({feature::kSharpness})},
      {"only distance, scale and sharpness", only},
  };
  std::vector<AblationRow> rows;
  for (const auto& [name, subset] : variants) {
    CvConfig run = cfg;
    run.feature_subset = subset;
    run.include_baselines = false;
    rows.push_back({name, cross_validate(corpus, features, nullptr, run).method("model")});
  }
  return rows;
}

}  // namespace importance
