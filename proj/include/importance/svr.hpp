#pragma once

// Linear nu-support-vector regression.
//
// Primal, over standardized features z_i and targets y_i (l rows):
//
//   min  1/2 |w|^2 + C (nu l eps + sum_i (xi_i + xi*_i))
//   s.t. y_i - (w.z_i + b) <= eps + xi_i,  (w.z_i + b) - y_i <= eps + xi*_i,  xi, xi* >= 0
//
// Dual, with beta_i = a_i - a*_i and w = sum_i beta_i z_i:
//
//   max  -1/2 |w|^2 + sum_i y_i beta_i
//   s.t. sum_i beta_i = 0,  sum_i (a_i + a*_i) = C nu l,  0 <= a_i, a*_i <= C
//
// solved by sequential minimal optimization over maximal violating pairs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace importance {

struct SolverConfig {
  double c = 1.0;
  double nu = 0.5;
  double tolerance = 1e-4;
  std::size_t max_iterations = 100000;
  // Recorded with the model; working-set ties are broken by lowest index, so
  // the solve itself does not consume randomness.
  std::uint64_t seed = 42;
  bool standardize = true;

  void validate() const;
};

struct TrainingSet {
  std::vector<std::vector<double>> features;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  std::size_t dims() const { return features.empty() ? 0 : features.front().size(); }
  void add(std::vector<double> f, double target) {
    features.push_back(std::move(f));
    targets.push_back(target);
  }
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;  // divisor; 1 for constant columns
};

struct SolveDiagnostics {
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  double dual_objective = 0.0;
  double primal_objective = 0.0;
  double duality_gap = 0.0;
  double epsilon = 0.0;  // tube half-width from the KKT conditions
};

// Dual variables retained after training (needed for duality_gap()).
struct DualState {
  std::vector<double> alpha;       // a_i
  std::vector<double> alpha_star;  // a*_i
};

struct RegressionModel {
  std::vector<double> weights;  // in standardized coordinates
  double bias = 0.0;
  Standardization standardization;
  SolverConfig config;
  SolveDiagnostics diagnostics;
  std::optional<DualState> dual;

  std::size_t dims() const { return weights.size(); }
  void drop_dual_state() { dual.reset(); }
};

// Per-iteration observer: (iteration, dual objective).
using DualObserver = std::function<void(std::size_t, double)>;

// Throws DegenerateInput for fewer than 2 rows, zero-length features, or
// rows of unequal length / non-finite values.
RegressionModel train(const TrainingSet& data, const SolverConfig& cfg, const DualObserver& observer = {});

// w . standardize(f) + b. Throws LengthMismatch.
double predict(const RegressionModel& model, std::span<const double> f);

// Mean pairwise prediction of each face against every other face of the same
// image; a lone face scores 0.
std::vector<double> score_individuals(const RegressionModel& model, std::span<const std::vector<double>> faces);

// Dual objective of the retained dual state on the given training set.
double dual_objective(const RegressionModel& model, const TrainingSet& data);

// Primal minus dual objective, with (b, eps) chosen to minimize the primal for
// the dual's w. Throws StateUnavailable when the dual state was dropped.
double duality_gap(const RegressionModel& model, const TrainingSet& data);

std::string serialize_model(const RegressionModel& model);
RegressionModel parse_model(const std::string& text);
void save_model(const RegressionModel& model, const std::filesystem::path& path);
RegressionModel load_model(const std::filesystem::path& path);

}  // namespace importance
