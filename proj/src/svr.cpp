#include "importance/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "importance/error.hpp"
#include "importance/features.hpp"
#include "json.hpp"

namespace importance {

void SolverConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw InputError("solver: C must be a positive real");
  if (!(nu > 0.0 && nu <= 1.0)) throw InputError("solver: nu must lie in (0, 1]");
  if (!(tolerance > 0.0)) throw InputError("solver: tolerance must be positive");
  if (max_iterations == 0) throw InputError("solver: max_iterations must be positive");
}

namespace {

constexpr double kMinCurvature = 1e-12;
constexpr double kInnerToleranceFloor = 1e-14;

// Row-major standardized copy of the training features.
struct Design {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> z;

  std::span<const double> row(std::size_t i) const { return {z.data() + i * dims, dims}; }
};

void check_training_set(const TrainingSet& data) {
  if (data.size() < 2) throw DegenerateInput("training needs at least 2 rows");
  if (data.features.size() != data.targets.size()) throw DegenerateInput("feature/target count mismatch");
  const std::size_t d = data.dims();
  if (d == 0) throw DegenerateInput("training rows have zero-length features");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.features[i].size() != d) throw DegenerateInput("training rows have unequal feature lengths");
    if (!std::isfinite(data.targets[i])) throw DegenerateInput("non-finite training target");
    for (double v : data.features[i]) {
      if (!std::isfinite(v)) throw DegenerateInput("non-finite training feature");
    }
  }
}

Standardization fit_standardization(const TrainingSet& data, bool enabled) {
  const std::size_t d = data.dims();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (!enabled) return s;
  const double n = static_cast<double>(data.size());
  for (const auto& row : data.features) {
    for (std::size_t k = 0; k < d; ++k) s.mean[k] += row[k];
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& row : data.features) {
    for (std::size_t k = 0; k < d; ++k) var[k] += (row[k] - s.mean[k]) * (row[k] - s.mean[k]);
  }
  for (std::size_t k = 0; k < d; ++k) {
    const double sd = std::sqrt(var[k] / n);
    s.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Design standardize(const TrainingSet& data, const Standardization& s) {
  Design x;
  x.rows = data.size();
  x.dims = data.dims();
  x.z.resize(x.rows * x.dims);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < x.dims; ++k) {
      x.z[i * x.dims + k] = (data.features[i][k] - s.mean[k]) / s.scale[k];
    }
  }
  return x;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::vector<double> weights_from_dual(const Design& x, const DualState& dual) {
  std::vector<double> w(x.dims, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double beta = dual.alpha[i] - dual.alpha_star[i];
    if (beta == 0.0) continue;
    const auto z = x.row(i);
    for (std::size_t k = 0; k < x.dims; ++k) w[k] += beta * z[k];
  }
  return w;
}

double dual_value(const Design& x, std::span<const double> y, const DualState& dual, std::span<const double> w) {
  double linear = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) linear += y[i] * (dual.alpha[i] - dual.alpha_star[i]);
  return -0.5 * dot(w, w) + linear;
}

// min over eps >= 0 of C nu l eps + C sum_i max(0, |r_i| - eps).
// Restricting to eps >= 0 loses nothing for nu <= 1.
double tube_cost(std::vector<double>& abs_residuals, double c, double nu) {
  std::sort(abs_residuals.begin(), abs_residuals.end(), std::greater<>());
  const double l = static_cast<double>(abs_residuals.size());
  double total = 0.0;
  for (double a : abs_residuals) total += a;
  double best = c * total;  // eps = 0
  double prefix = 0.0;      // sum of residuals strictly before position k
  for (std::size_t k = 0; k < abs_residuals.size(); ++k) {
    const double eps = abs_residuals[k];
    best = std::min(best, c * (nu * l * eps + prefix - static_cast<double>(k) * eps));
    prefix += abs_residuals[k];
  }
  return best;
}

struct PrimalResult {
  double value = 0.0;
  double bias = 0.0;
};

// Primal objective for fixed w, minimized over (b, eps).
PrimalResult primal_value(const Design& x, std::span<const double> y, std::span<const double> w, double c, double nu,
                          double bias_hint) {
  std::vector<double> base(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) base[i] = y[i] - dot(x.row(i), w);
  std::vector<double> scratch(x.rows);
  const double half_w2 = 0.5 * dot(w, w);
  auto cost = [&](double b) {
    for (std::size_t i = 0; i < x.rows; ++i) scratch[i] = std::abs(base[i] - b);
    return half_w2 + tube_cost(scratch, c, nu);
  };

  // The cost is convex in b and minimized inside the residual range.
  double lo = *std::min_element(base.begin(), base.end());
  double hi = *std::max_element(base.begin(), base.end());
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double m1 = hi - inv_phi * (hi - lo), m2 = lo + inv_phi * (hi - lo);
  double f1 = cost(m1), f2 = cost(m2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = cost(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = cost(m2);
    }
  }
  PrimalResult best{f1 <= f2 ? f1 : f2, f1 <= f2 ? m1 : m2};
  const double at_hint = cost(bias_hint);
  if (at_hint < best.value) best = {at_hint, bias_hint};
  return best;
}

// Linear-kernel rows K(i, .) = z_i . z_r. Small problems keep the whole Gram
// matrix; larger ones recompute the two rows an iteration needs.
class KernelRows {
 public:
  explicit KernelRows(const Design& x) : x_(x), diag_(x.rows) {
    for (std::size_t i = 0; i < x.rows; ++i) diag_[i] = dot(x.row(i), x.row(i));
    if (x.rows <= kFullGramRows) {
      full_.resize(x.rows * x.rows);
      for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t r = i; r < x.rows; ++r) {
          full_[i * x.rows + r] = full_[r * x.rows + i] = i == r ? diag_[i] : dot(x.row(i), x.row(r));
        }
      }
    } else {
      for (auto& buf : slot_) buf.resize(x.rows);
    }
  }

  // Valid until the next call that fills a different row into the same slot.
  std::span<const double> row(std::size_t i, int slot) {
    if (!full_.empty()) return {full_.data() + i * x_.rows, x_.rows};
    auto& buf = slot_[slot];
    if (cached_[slot] != i) {
      for (std::size_t r = 0; r < x_.rows; ++r) buf[r] = dot(x_.row(i), x_.row(r));
      cached_[slot] = i;
    }
    return buf;
  }

  double diag(std::size_t i) const { return diag_[i]; }

 private:
  static constexpr std::size_t kFullGramRows = 4096;
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const Design& x_;
  std::vector<double> diag_;
  std::vector<double> full_;
  std::vector<double> slot_[3];
  std::size_t cached_[3] = {kNone, kNone, kNone};
};

// Sequential minimal optimization on the 2l dual variables. The "alpha"
// class raises beta_i, the "alpha*" class lowers it; both classes share the
// violation value v_i = y_i - w.z_i. The first index is the maximal violator
// of its class; the partner maximizes the second-order gain (v_i - v_j)^2 / eta.
class Smo {
 public:
  Smo(const Design& x, std::span<const double> y, const SolverConfig& cfg)
      : x_(x), y_(y), cfg_(cfg), kernel_(x), w_(x.dims, 0.0), residual_(y.begin(), y.end()) {
    const std::size_t l = x.rows;
    dual_.alpha.assign(l, 0.0);
    dual_.alpha_star.assign(l, 0.0);
    double remaining = cfg.c * cfg.nu * static_cast<double>(l) / 2.0;
    for (std::size_t i = 0; i < l && remaining > 0.0; ++i) {
      const double a = std::min(remaining, cfg.c);
      dual_.alpha[i] = a;
      dual_.alpha_star[i] = a;
      remaining -= a;
    }
  }

  // Runs until the maximal violation is <= tol or the iteration budget is
  // spent. Returns the final violation.
  double run(double tol, std::size_t& iterations, const DualObserver& observer) {
    for (;;) {
      const Selection sel = select();
      violation_ = sel.violation;
      if (sel.violation <= tol || iterations >= cfg_.max_iterations) return sel.violation;
      step(sel);
      ++iterations;
      if (observer) observer(iterations, objective_);
    }
  }

  // Recomputes w and residuals from the dual variables to shed drift.
  void refresh() {
    w_ = weights_from_dual(x_, dual_);
    for (std::size_t k = 0; k < x_.rows; ++k) residual_[k] = y_[k] - dot(x_.row(k), w_);
    objective_ = dual_value(x_, y_, dual_, w_);
  }

  // (bias, eps) from the KKT conditions of the free variables.
  std::pair<double, double> kkt_bias_eps() const {
    const double inf = std::numeric_limits<double>::infinity();
    // Gradients of the minimization form: alpha class G = -v, alpha* class G = v.
    double ub1 = inf, lb1 = -inf, sum1 = 0.0, ub2 = inf, lb2 = -inf, sum2 = 0.0;
    std::size_t free1 = 0, free2 = 0;
    for (std::size_t i = 0; i < x_.rows; ++i) {
      const double g1 = -residual_[i], g2 = residual_[i];
      classify(dual_.alpha[i], g1, ub1, lb1, sum1, free1);
      classify(dual_.alpha_star[i], g2, ub2, lb2, sum2, free2);
    }
    const double r1 = free1 > 0 ? sum1 / static_cast<double>(free1) : midpoint(ub1, lb1);
    const double r2 = free2 > 0 ? sum2 / static_cast<double>(free2) : midpoint(ub2, lb2);
    return {-(r1 - r2) / 2.0, -(r1 + r2) / 2.0};
  }

  const DualState& dual() const { return dual_; }
  const std::vector<double>& weights() const { return w_; }
  double objective() const { return objective_; }
  double violation() const { return violation_; }

 private:
  struct Selection {
    bool alpha_class = true;
    std::size_t up = 0;
    std::size_t low = 0;
    double violation = 0.0;
  };

  void classify(double a, double g, double& ub, double& lb, double& sum, std::size_t& nfree) const {
    if (a >= cfg_.c) {
      lb = std::max(lb, g);
    } else if (a <= 0.0) {
      ub = std::min(ub, g);
    } else {
      sum += g;
      ++nfree;
    }
  }

  static double midpoint(double ub, double lb) {
    if (std::isinf(ub) && std::isinf(lb)) return 0.0;
    if (std::isinf(ub)) return lb;
    if (std::isinf(lb)) return ub;
    return (ub + lb) / 2.0;
  }

  // Alpha class: up = {a < C}, low = {a > 0}. Alpha* class: up = {a* > 0},
  // low = {a* < C}. "up" may raise beta_i, "low" may lower beta_j.
  Selection select() {
    const double inf = std::numeric_limits<double>::infinity();
    const double c = cfg_.c;
    const double* a = dual_.alpha.data();
    const double* s = dual_.alpha_star.data();
    const double* v = residual_.data();
    const std::size_t l = x_.rows;
    double max_a = -inf, min_a = inf, max_s = -inf, min_s = inf;
    std::size_t up_a = 0, up_s = 0;
    for (std::size_t r = 0; r < l; ++r) {
      if (a[r] < c && v[r] > max_a) max_a = v[r], up_a = r;
      if (a[r] > 0.0 && v[r] < min_a) min_a = v[r];
      if (s[r] > 0.0 && v[r] > max_s) max_s = v[r], up_s = r;
      if (s[r] < c && v[r] < min_s) min_s = v[r];
    }
    const bool open_a = std::isfinite(max_a) && std::isfinite(min_a) && max_a > min_a;
    const bool open_s = std::isfinite(max_s) && std::isfinite(min_s) && max_s > min_s;
    Selection sel;
    sel.violation = std::max(open_a ? max_a - min_a : 0.0, open_s ? max_s - min_s : 0.0);
    if (!open_a && !open_s) return sel;

    const auto ka = kernel_.row(up_a, 0);
    const auto ks = kernel_.row(up_s, 1);
    const double kaa = kernel_.diag(up_a), kss = kernel_.diag(up_s);
    double gain_a = -1.0, gain_s = -1.0;
    std::size_t low_a = 0, low_s = 0;
    for (std::size_t r = 0; r < l; ++r) {
      const double kd = kernel_.diag(r);
      if (open_a && a[r] > 0.0 && v[r] < max_a) {
        const double b = max_a - v[r];
        const double g = b * b / std::max(kaa + kd - 2.0 * ka[r], kMinCurvature);
        if (g > gain_a) gain_a = g, low_a = r;
      }
      if (open_s && s[r] < c && v[r] < max_s) {
        const double b = max_s - v[r];
        const double g = b * b / std::max(kss + kd - 2.0 * ks[r], kMinCurvature);
        if (g > gain_s) gain_s = g, low_s = r;
      }
    }
    if (gain_a >= gain_s) {
      sel.alpha_class = true;
      sel.up = up_a;
      sel.low = low_a;
    } else {
      sel.alpha_class = false;
      sel.up = up_s;
      sel.low = low_s;
    }
    return sel;
  }

  void step(const Selection& sel) {
    const std::size_t i = sel.up, j = sel.low;
    const auto ki = kernel_.row(i, sel.alpha_class ? 0 : 1);
    const auto kj = kernel_.row(j, 2);
    const double eta = std::max(kernel_.diag(i) + kernel_.diag(j) - 2.0 * ki[j], kMinCurvature);

    const double diff = residual_[i] - residual_[j];
    double delta = diff / eta;
    if (sel.alpha_class) {
      delta = std::min({delta, cfg_.c - dual_.alpha[i], dual_.alpha[j]});
      dual_.alpha[i] += delta;
      dual_.alpha[j] -= delta;
    } else {
      delta = std::min({delta, dual_.alpha_star[i], cfg_.c - dual_.alpha_star[j]});
      dual_.alpha_star[i] -= delta;
      dual_.alpha_star[j] += delta;
    }
    // beta_i += delta, beta_j -= delta.
    const auto zi = x_.row(i), zj = x_.row(j);
    for (std::size_t k = 0; k < x_.dims; ++k) w_[k] += delta * (zi[k] - zj[k]);
    for (std::size_t r = 0; r < x_.rows; ++r) residual_[r] -= delta * (ki[r] - kj[r]);
    objective_ += delta * diff - 0.5 * delta * delta * eta;
  }

  const Design& x_;
  std::span<const double> y_;
  const SolverConfig& cfg_;
  KernelRows kernel_;
  DualState dual_;
  std::vector<double> w_;
  std::vector<double> residual_;
  double objective_ = 0.0;
  double violation_ = 0.0;
};

}  // namespace

RegressionModel train(const TrainingSet& data, const SolverConfig& cfg, const DualObserver& observer) {
  cfg.validate();
  check_training_set(data);

  RegressionModel model;
  model.config = cfg;
  model.standardization = fit_standardization(data, cfg.standardize);
  const Design x = standardize(data, model.standardization);

  Smo smo(x, data.targets, cfg);
  std::size_t iterations = 0;
  double inner_tol = cfg.tolerance;
  PrimalResult primal;
  for (;;) {
    smo.run(inner_tol, iterations, observer);
    smo.refresh();
    const auto [kkt_bias, kkt_eps] = smo.kkt_bias_eps();
    primal = primal_value(x, data.targets, smo.weights(), cfg.c, cfg.nu, kkt_bias);
    model.bias = kkt_bias;
    model.diagnostics.epsilon = kkt_eps;
    const double gap = primal.value - smo.objective();
    if (gap <= cfg.tolerance) {
      model.diagnostics.converged = smo.violation() <= cfg.tolerance;
      break;
    }
    if (iterations >= cfg.max_iterations || inner_tol <= kInnerToleranceFloor) {
      model.diagnostics.converged = false;
      break;
    }
    inner_tol *= 0.1;
  }

  model.weights = smo.weights();
  model.dual = smo.dual();
  model.diagnostics.iterations = iterations;
  model.diagnostics.kkt_violation = smo.violation();
  model.diagnostics.dual_objective = smo.objective();
  model.diagnostics.primal_objective = primal.value;
  model.diagnostics.duality_gap = primal.value - smo.objective();
  return model;
}

double predict(const RegressionModel& model, std::span<const double> f) {
  if (f.size() != model.weights.size()) throw LengthMismatch("predict: feature length differs from model");
  const auto& s = model.standardization;
  double out = model.bias;
  for (std::size_t k = 0; k < f.size(); ++k) out += model.weights[k] * ((f[k] - s.mean[k]) / s.scale[k]);
  return out;
}

std::vector<double> score_individuals(const RegressionModel& model, std::span<const std::vector<double>> faces) {
  std::vector<double> scores(faces.size(), 0.0);
  if (faces.size() < 2) return scores;
  for (std::size_t p = 0; p < faces.size(); ++p) {
    double sum = 0.0;
    for (std::size_t q = 0; q < faces.size(); ++q) {
      if (q != p) sum += predict(model, compose_pair(faces[p], faces[q]));
    }
    scores[p] = sum / static_cast<double>(faces.size() - 1);
  }
  return scores;
}

namespace {

Design design_for(const RegressionModel& model, const TrainingSet& data) {
  check_training_set(data);
  if (data.dims() != model.dims()) throw LengthMismatch("training set dims differ from model");
  if (!model.dual) throw StateUnavailable("model carries no dual state");
  if (model.dual->alpha.size() != data.size()) throw LengthMismatch("dual state size differs from training set");
  return standardize(data, model.standardization);
}

}  // namespace

double dual_objective(const RegressionModel& model, const TrainingSet& data) {
  const Design x = design_for(model, data);
  const auto w = weights_from_dual(x, *model.dual);
  return dual_value(x, data.targets, *model.dual, w);
}

double duality_gap(const RegressionModel& model, const TrainingSet& data) {
  const Design x = design_for(model, data);
  const auto w = weights_from_dual(x, *model.dual);
  const double dual = dual_value(x, data.targets, *model.dual, w);
  const auto primal = primal_value(x, data.targets, w, model.config.c, model.config.nu, model.bias);
  return primal.value - dual;
}

// ---------------------------------------------------------------------------

using nlohmann::json;

std::string serialize_model(const RegressionModel& model) {
  json doc;
  doc["format"] = "importance-model";
  doc["layout_version"] = kFeatureLayoutVersion;
  doc["dims"] = model.dims();
  doc["standardization"] = {{"mean", model.standardization.mean}, {"scale", model.standardization.scale}};
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  const auto& c = model.config;
  doc["hyperparameters"] = {{"C", c.c},
                            {"nu", c.nu},
                            {"tolerance", c.tolerance},
                            {"max_iterations", c.max_iterations},
                            {"seed", c.seed},
                            {"standardize", c.standardize}};
  const auto& d = model.diagnostics;
  doc["diagnostics"] = {{"iterations", d.iterations},
                        {"converged", d.converged},
                        {"kkt_violation", d.kkt_violation},
                        {"dual_objective", d.dual_objective},
                        {"primal_objective", d.primal_objective},
                        {"duality_gap", d.duality_gap},
                        {"epsilon", d.epsilon}};
  return doc.dump(2) + "\n";
}

RegressionModel parse_model(const std::string& text) {
  RegressionModel model;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "importance-model") throw ParseError("not a model file");
    if (doc.at("layout_version").get<int>() != kFeatureLayoutVersion) {
      throw ParseError("model layout version does not match this build");
    }
    const auto dims = doc.at("dims").get<std::size_t>();
    model.standardization.mean = doc.at("standardization").at("mean").get<std::vector<double>>();
    model.standardization.scale = doc.at("standardization").at("scale").get<std::vector<double>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<double>();
    if (model.weights.size() != dims || model.standardization.mean.size() != dims ||
        model.standardization.scale.size() != dims) {
      throw ParseError("model vectors disagree with dims");
    }
    const auto& h = doc.at("hyperparameters");
    model.config.c = h.at("C").get<double>();
    model.config.nu = h.at("nu").get<double>();
    model.config.tolerance = h.at("tolerance").get<double>();
    model.config.max_iterations = h.at("max_iterations").get<std::size_t>();
    model.config.seed = h.at("seed").get<std::uint64_t>();
    model.config.standardize = h.at("standardize").get<bool>();
    const auto& d = doc.at("diagnostics");
    model.diagnostics.iterations = d.at("iterations").get<std::size_t>();
    model.diagnostics.converged = d.at("converged").get<bool>();
    model.diagnostics.kkt_violation = d.at("kkt_violation").get<double>();
    model.diagnostics.dual_objective = d.at("dual_objective").get<double>();
    model.diagnostics.primal_objective = d.at("primal_objective").get<double>();
    model.diagnostics.duality_gap = d.at("duality_gap").get<double>();
    model.diagnostics.epsilon = d.at("epsilon").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  return model;
}

void save_model(const RegressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model '" + path.string() + "'");
  out << serialize_model(model);
}

RegressionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace importance
