#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "dual_oracle.hpp"
#include "importance/error.hpp"
#include "importance/features.hpp"
#include "importance/svr.hpp"
#include "synthetic.hpp"

using namespace importance;

namespace {

TrainingSet linear_data(std::size_t rows, std::size_t d, const std::vector<double>& w, std::uint64_t seed) {
  TrainingSet s;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> phi(d);
    for (auto& v : phi) v = 2.0 * synth::uniform(seed) - 1.0;
    s.add(phi, std::inner_product(phi.begin(), phi.end(), w.begin(), 0.0));
  }
  return s;
}

TrainingSet noisy_data(std::size_t rows, std::size_t d, std::uint64_t seed) {
  TrainingSet s;
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> phi(d);
    for (auto& v : phi) v = 2.0 * synth::uniform(seed) - 1.0;
    s.add(phi, 2.0 * synth::uniform(seed) - 1.0);
  }
  return s;
}

double train_mse(const RegressionModel& m, const TrainingSet& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = predict(m, s.features[i]) - s.targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(s.size());
}

RegressionModel identity_model(std::vector<double> weights, double bias) {
  RegressionModel m;
  m.standardization.mean.assign(weights.size(), 0.0);
  m.standardization.scale.assign(weights.size(), 1.0);
  m.weights = std::move(weights);
  m.bias = bias;
  return m;
}

}  // namespace

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(SolverConfig{}.validate());
  EXPECT_THROW((SolverConfig{.c = 0.0}.validate()), InputError);
  EXPECT_THROW((SolverConfig{.nu = 1.5}.validate()), InputError);
  EXPECT_THROW((SolverConfig{.nu = 0.0}.validate()), InputError);
  EXPECT_THROW((SolverConfig{.tolerance = -1.0}.validate()), InputError);
  EXPECT_THROW((SolverConfig{.max_iterations = 0}.validate()), InputError);
}

TEST(Train, DegenerateInputs) {
  TrainingSet one;
  one.add({1.0}, 1.0);
  EXPECT_THROW(train(one, {}), DegenerateInput);
  TrainingSet empty_rows;
  empty_rows.add({}, 0.0);
  empty_rows.add({}, 1.0);
  EXPECT_THROW(train(empty_rows, {}), DegenerateInput);
  TrainingSet ragged;
  ragged.add({1.0, 2.0}, 0.0);
  ragged.add({1.0}, 1.0);
  EXPECT_THROW(train(ragged, {}), DegenerateInput);
  TrainingSet nan;
  nan.add({1.0}, std::nan(""));
  nan.add({2.0}, 1.0);
  EXPECT_THROW(train(nan, {}), DegenerateInput);
}

TEST(Train, NoiselessLinearRecovery) {
  std::vector<double> w(8, 0.0);
  w[0] = 1.0;
  w[1] = -2.0;
  const auto data = linear_data(200, 8, w, 31);
  const auto model = train(data, {});
  EXPECT_TRUE(model.diagnostics.converged);
  EXPECT_LT(train_mse(model, data), 1e-3);
}

TEST(Train, ZeroTargetsGiveZeroFunction) {
  TrainingSet s = noisy_data(30, 3, 4);
  for (auto& t : s.targets) t = 0.0;
  const auto model = train(s, {});
  EXPECT_TRUE(model.diagnostics.converged);
  for (double w : model.weights) EXPECT_NEAR(w, 0.0, 1e-12);
  for (const auto& f : s.features) EXPECT_NEAR(predict(model, f), 0.0, 1e-12);
  EXPECT_NEAR(duality_gap(model, s), 0.0, 1e-12);
}

TEST(Train, MatchesDualOracleOnTinyInstances) {
  std::uint64_t rng = 555;
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + synth::next(rng) % 5;
    const std::size_t d = 1 + synth::next(rng) % 3;
    const TrainingSet data = noisy_data(n, d, synth::next(rng));
    SolverConfig cfg;
    cfg.c = std::pow(2.0, static_cast<double>(synth::next(rng) % 9) - 4.0);
    cfg.nu = 0.1 + 0.9 * synth::uniform(rng);
    cfg.standardize = false;
    const auto model = train(data, cfg);
    const auto ref = oracle::solve_nu_svr_dual(data.features, data.targets, cfg.c, cfg.nu);
    EXPECT_NEAR(model.diagnostics.dual_objective, ref.objective, 1e-4) << "instance " << t;
    EXPECT_NEAR(dual_objective(model, data), model.diagnostics.dual_objective, 1e-9);
    if (model.diagnostics.converged) EXPECT_LE(duality_gap(model, data), cfg.tolerance);
    EXPECT_GE(duality_gap(model, data), -1e-9);
  }
}

TEST(Train, OracleOptimumIsFeasible) {
  const TrainingSet data = noisy_data(5, 2, 17);
  const auto ref = oracle::solve_nu_svr_dual(data.features, data.targets, 1.0, 0.5);
  EXPECT_GE(ref.objective, 0.0);
  double abs_sum = 0.0, sum = 0.0;
  for (double b : ref.beta) {
    abs_sum += std::fabs(b);
    sum += b;
    EXPECT_LE(std::fabs(b), 1.0 + 1e-9);
  }
  EXPECT_NEAR(sum, 0.0, 1e-9);
  EXPECT_LE(abs_sum, 0.5 * 5 + 1e-9);
}

TEST(Train, DualObjectiveIsMonotone) {
  const TrainingSet data = noisy_data(80, 4, 8);
  std::vector<double> trace;
  const auto model = train(data, {.c = 4.0}, [&](std::size_t, double obj) { trace.push_back(obj); });
  ASSERT_GT(trace.size(), 10u);
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_GE(trace[k], trace[k - 1] - 1e-9) << "step " << k;
  EXPECT_NEAR(trace.back(), model.diagnostics.dual_objective, 1e-6);
}

TEST(Train, IterationCapIsFlagged) {
  const TrainingSet data = noisy_data(40, 3, 9);
  const auto model = train(data, {.c = 10.0, .max_iterations = 1});
  EXPECT_FALSE(model.diagnostics.converged);
  EXPECT_EQ(model.diagnostics.iterations, 1u);
  EXPECT_GT(duality_gap(model, data), model.config.tolerance);
}

TEST(Train, Deterministic) {
  const TrainingSet data = noisy_data(120, 5, 10);
  const auto a = train(data, {.c = 2.0});
  const auto b = train(data, {.c = 2.0});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.diagnostics.iterations, b.diagnostics.iterations);
}

TEST(Train, LargeProblemsUseRowKernel) {
  // Above the cached-Gram size the solver recomputes kernel rows on demand.
  const std::vector<double> w = {0.5, -1.0, 2.0};
  const auto data = linear_data(4200, 3, w, 12);
  const auto model = train(data, {});
  EXPECT_TRUE(model.diagnostics.converged);
  EXPECT_LT(train_mse(model, data), 1e-3);
  EXPECT_LE(duality_gap(model, data), 1e-4);
}

TEST(DualityGap, NeedsDualState) {
  const TrainingSet data = noisy_data(10, 2, 13);
  auto model = train(data, {});
  model.drop_dual_state();
  EXPECT_THROW(duality_gap(model, data), StateUnavailable);
  EXPECT_THROW(dual_objective(model, data), StateUnavailable);
}

TEST(Predict, DotProductPlusBias) {
  EXPECT_EQ(predict(identity_model({0.0, 0.0, 0.0}, 0.0), std::vector<double>{4.0, -1.0, 9.0}), 0.0);
  EXPECT_EQ(predict(identity_model({2.0, 0.0, 0.0}, 1.0), std::vector<double>{3.0, 5.0, -2.0}), 7.0);
  EXPECT_THROW(predict(identity_model({1.0}, 0.0), std::vector<double>{1.0, 2.0}), LengthMismatch);
}

TEST(Predict, ReversedPairShiftsByTwiceBias) {
  const auto m = identity_model({0.3, -1.1, 2.0}, 0.25);
  const std::vector<double> a = {1.0, 2.0, 3.0}, b = {-0.5, 0.0, 4.0};
  const double ab = predict(m, compose_pair(a, b)), ba = predict(m, compose_pair(b, a));
  EXPECT_NEAR(ab, -ba + 2.0 * m.bias, 1e-12);
  const auto unbiased = identity_model({0.3, -1.1, 2.0}, 0.0);
  EXPECT_EQ(predict(unbiased, compose_pair(a, b)), -predict(unbiased, compose_pair(b, a)));
}

TEST(ScoreIndividuals, Basics) {
  const auto m = identity_model({0.6}, 0.0);
  const std::vector<std::vector<double>> one = {{1.0}};
  EXPECT_EQ(score_individuals(m, one), std::vector<double>{0.0});
  const std::vector<std::vector<double>> two = {{1.0}, {0.0}};
  const auto s = score_individuals(m, two);
  EXPECT_DOUBLE_EQ(s[0], 0.6);
  EXPECT_DOUBLE_EQ(s[1], -0.6);
}

TEST(ScoreIndividuals, ArgmaxWinsMostMarginMass) {
  std::uint64_t rng = 14;
  for (int t = 0; t < 20; ++t) {
    const auto m = identity_model({synth::uniform(rng) - 0.5, synth::uniform(rng) - 0.5, synth::uniform(rng) - 0.5}, 0.0);
    std::vector<std::vector<double>> faces(4, std::vector<double>(3));
    for (auto& f : faces) {
      for (auto& v : f) v = synth::uniform(rng);
    }
    std::vector<double> mass(4, 0.0);
    for (std::size_t p = 0; p < 4; ++p) {
      for (std::size_t q = 0; q < 4; ++q) {
        if (p != q) mass[p] += predict(m, compose_pair(faces[p], faces[q]));
      }
    }
    const auto scores = score_individuals(m, faces);
    EXPECT_EQ(std::max_element(scores.begin(), scores.end()) - scores.begin(),
              std::max_element(mass.begin(), mass.end()) - mass.begin());
  }
}

TEST(ModelIo, RoundTrip) {
  const TrainingSet data = noisy_data(50, 4, 15);
  const auto model = train(data, {.c = 0.5, .nu = 0.3});
  const auto again = parse_model(serialize_model(model));
  EXPECT_EQ(again.weights, model.weights);
  EXPECT_EQ(again.bias, model.bias);
  EXPECT_EQ(again.standardization.mean, model.standardization.mean);
  EXPECT_EQ(again.standardization.scale, model.standardization.scale);
  EXPECT_EQ(again.config.c, 0.5);
  EXPECT_EQ(again.config.nu, 0.3);
  EXPECT_EQ(again.diagnostics.iterations, model.diagnostics.iterations);
  EXPECT_FALSE(again.dual.has_value());
  for (const auto& f : data.features) EXPECT_EQ(predict(again, f), predict(model, f));

  const auto path = std::filesystem::temp_directory_path() / "importance_model.json";
  save_model(model, path);
  EXPECT_EQ(load_model(path).weights, model.weights);
  std::filesystem::remove(path);
}

TEST(ModelIo, RejectsMalformedFiles) {
  EXPECT_THROW(parse_model("{}"), ParseError);
  EXPECT_THROW(parse_model("not json"), ParseError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), ParseError);
}
