// importance: batch command-line driver for feature extraction, training,
// evaluation, ranking, saliency comparison and description selection.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "importance/corpus.hpp"
#include "importance/error.hpp"
#include "importance/eval.hpp"
#include "importance/features.hpp"
#include "importance/ranking.hpp"
#include "importance/svr.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace importance;

namespace {

struct RunConfig {
  std::string manifest;
  std::string out = ".";
  std::uint64_t seed = 42;
  std::vector<double> c_grid;
  double nu = 0.5;
  double tolerance = 1e-4;
  std::size_t folds = 10;
  bool no_pixels = false;
  bool no_pose = false;
  std::string energy = "squared";
  std::string fixations;
  std::string model;
  bool loho = false;
  bool agreement = false;
  bool ablation = false;
  bool per_judgment = false;
  double test_fraction = 0.3;
};

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw InputError("cannot write '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("output directory '" + cfg.out + "' is not writable");
  return dir;
}

ExtractOptions extract_options(const RunConfig& cfg) {
  ExtractOptions opts;
  opts.use_pixels = !cfg.no_pixels;
  opts.use_pose = !cfg.no_pose;
  opts.energy = cfg.energy == "magnitude" ? EnergyMode::Magnitude : EnergyMode::Squared;
  return opts;
}

CorpusFeatures features_for(const Corpus& corpus, const RunConfig& cfg) {
  auto features = extract_corpus(corpus, extract_options(cfg), file_pixel_source());
  if (!cfg.no_pixels && features.missing_pixel_images > 0) {
    std::cerr << "warning: " << features.missing_pixel_images << " image(s) without pixels; sharpness set to 0\n";
  }
  return features;
}

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig s;
  s.nu = cfg.nu;
  s.tolerance = cfg.tolerance;
  s.seed = cfg.seed;
  if (!cfg.c_grid.empty()) s.c = cfg.c_grid.front();
  s.validate();
  return s;
}

CvConfig cv_config(const RunConfig& cfg) {
  CvConfig cv;
  if (!cfg.c_grid.empty()) cv.c_grid = cfg.c_grid;
  cv.solver = solver_config(cfg);
  cv.folds = cfg.folds;
  cv.seed = cfg.seed;
  return cv;
}

std::vector<std::size_t> all_pairs(const Corpus& corpus) {
  std::vector<std::size_t> idx(corpus.pairs().size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  return idx;
}

int cmd_extract(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  const auto features = features_for(corpus, cfg);
  std::ostringstream table;
  write_feature_table(table, corpus, features);
  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "features.tsv", table.str());
  std::size_t faces = 0;
  for (const auto& img : corpus.images()) faces += img.faces.size();
  std::cout << "images=" << corpus.images().size() << " faces=" << faces
            << " missing_pixels=" << features.missing_pixel_images << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  const auto features = features_for(corpus, cfg);
  SolverConfig solver = solver_config(cfg);
  if (cfg.c_grid.size() != 1) {
    // Most frequently selected C across the CV rotations; ties toward smaller C.
    CvConfig cv = cv_config(cfg);
    cv.include_baselines = false;
    const EvalReport report = cross_validate(corpus, features, nullptr, cv);
    std::map<double, std::size_t> votes;
    for (double c : report.selected_c) ++votes[c];
    std::size_t best = 0;
    for (const auto& [c, n] : votes) {
      if (n > best) {
        best = n;
        solver.c = c;
      }
    }
  }
  RegressionModel model = train(build_training_set(corpus, features, all_pairs(corpus)), solver);
  model.drop_dual_state();
  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "model.json", serialize_model(model));
  std::cout << "pairs=" << corpus.pairs().size() << " c=" << fixed(solver.c)
            << " converged=" << (model.diagnostics.converged ? "yes" : "no")
            << " iterations=" << model.diagnostics.iterations << "\n";
  return 0;
}

std::optional<FixationData> fixations_for(const Corpus& corpus, const RunConfig& cfg) {
  if (cfg.fixations.empty()) return std::nullopt;
  FixationData data = load_fixations(cfg.fixations, corpus);
  if (data.dropped > 0) std::cerr << "warning: " << data.dropped << " fixation(s) outside their image dropped\n";
  return data;
}

int cmd_eval(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  const auto features = features_for(corpus, cfg);
  const auto fix = fixations_for(corpus, cfg);
  const CorpusSaliency saliency = corpus_saliency(corpus, fix ? &*fix : nullptr, true);
  const CvConfig cv = cv_config(cfg);

  const EvalReport report = cross_validate(corpus, features, &saliency, cv);
  std::optional<AgreementResult> agreement;
  std::optional<LohoReport> loho;
  std::vector<AblationRow> ablation;
  if (cfg.agreement) agreement = inter_human_agreement(corpus);
  if (cfg.loho) loho = leave_one_human_out_training(corpus, features, &saliency, cv);
  if (cfg.ablation) ablation = feature_ablation(corpus, features, cv);

  std::ostringstream tsv;
  write_report_tsv(tsv, report);
  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "report.tsv", tsv.str());
  write_atomic(dir / "report.json", report_to_json(report, agreement, loho, ablation));
  for (const auto& m : report.methods) {
    std::cout << m.method << '\t' << (m.available ? fixed(m.wa_mean) : std::string("unavailable")) << "\n";
  }
  if (report.unconverged_solves > 0) {
    std::cerr << "warning: " << report.unconverged_solves << " solve(s) hit the iteration limit\n";
  }
  return 0;
}

int cmd_rank(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  EloConfig elo;
  elo.seed = cfg.seed;

  // group -> (items, outcomes)
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<Outcome>>> groups;
  const bool image_level = corpus.style() == PairStyle::ImageLevel;
  if (image_level) {
    for (const auto& img : corpus.images()) {
      auto& items = groups[img.image_id].first;
      for (const auto& f : img.faces) items.push_back(f.face_id);
    }
  }
  for (const auto& pair : corpus.pairs()) {
    const std::string group = image_level ? pair.side_a.image_id : pair.person.value_or("all");
    const std::string a = image_level ? pair.side_a.face_id : pair.side_a.image_id;
    const std::string b = image_level ? pair.side_b.face_id : pair.side_b.image_id;
    auto& [items, outcomes] = groups[group];
    if (!image_level) {
      for (const auto& id : {a, b}) {
        if (std::find(items.begin(), items.end(), id) == items.end()) items.push_back(id);
      }
    }
    if (cfg.per_judgment) {
      for (const auto& j : pair.judgments) outcomes.push_back({a, b, convert_judgment(j).s_a});
    } else {
      outcomes.push_back({a, b, aggregate_scores(pair).s_a});
    }
  }

  std::ostringstream out;
  out << "group\titem\trating\trank\n";
  for (const auto& [group, data] : groups) {
    std::vector<std::string> items = data.first;
    std::sort(items.begin(), items.end());
    write_ranking(out, group, elo_rank(items, data.second, elo));
  }
  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "ranking.tsv", out.str());
  std::cout << "groups=" << groups.size() << "\n";
  return 0;
}

int cmd_saliency_compare(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  const auto fix = fixations_for(corpus, cfg);
  const CorpusSaliency saliency = corpus_saliency(corpus, fix ? &*fix : nullptr, true);
  EloConfig elo;
  elo.seed = cfg.seed;
  const SaliencyComparison cmp = saliency_vs_importance(corpus, saliency, elo);

  std::ostringstream tsv;
  tsv << "image_id\ttau\tties\tsaliency_fallback\n";
  for (const auto& t : cmp.images) {
    tsv << t.image_id << '\t' << fixed(t.tau) << '\t' << (t.ties ? "yes" : "no") << '\t'
        << (t.saliency_fallback ? "yes" : "no") << '\n';
  }
  nlohmann::ordered_json j;
  j["tau_mean"] = fixed(cmp.tau_mean);
  j["images"] = cmp.images.size();
  j["top1_agreement"] = fixed(cmp.top1_agreement);
  nlohmann::ordered_json rows = nlohmann::ordered_json::object();
  for (PairCategory s : kPairCategories) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (PairCategory i : kPairCategories) {
      const auto si = static_cast<std::size_t>(s), ii = static_cast<std::size_t>(i);
      row[std::string(to_string(i))] = {{"count", cmp.confusion[si][ii]}, {"fraction", fixed(cmp.row_fraction(si, ii))}};
    }
    rows[std::string(to_string(s))] = row;
  }
  j["confusion_by_saliency_category"] = rows;

  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "saliency.tsv", tsv.str());
  write_atomic(dir / "saliency.json", j.dump(2) + "\n");
  std::cout << "tau=" << fixed(cmp.tau_mean) << "\n";
  return 0;
}

int cmd_describe(const RunConfig& cfg) {
  const Corpus corpus = load_corpus(cfg.manifest);
  const auto features = features_for(corpus, cfg);
  EloConfig elo;
  elo.seed = cfg.seed;
  DescribeReport report;
  if (!cfg.model.empty()) {
    report = describe_images(corpus, features, load_model(cfg.model), {}, elo, cfg.seed);
  } else {
    report = describe_protocol(corpus, features, solver_config(cfg), cfg.test_fraction, elo, cfg.seed);
  }

  std::ostringstream tsv;
  tsv << "image_id\tmodel_face\toracle_face\tcenter_face\trandom_face\tsentence\n";
  for (const auto& r : report.rows) {
    tsv << r.image_id << '\t' << r.model_face << '\t' << r.oracle_face << '\t' << r.center_face << '\t' << r.random_face
        << '\t' << r.sentence << '\n';
  }
  nlohmann::ordered_json j;
  j["images"] = report.rows.size();
  j["model_agreement"] = fixed(report.model_agreement);
  j["center_agreement"] = fixed(report.center_agreement);
  j["random_agreement"] = fixed(report.random_agreement);

  const fs::path dir = out_dir(cfg);
  write_atomic(dir / "descriptions.tsv", tsv.str());
  write_atomic(dir / "describe.json", j.dump(2) + "\n");
  std::cout << "images=" << report.rows.size() << " model_agreement=" << fixed(report.model_agreement) << "\n";
  return 0;
}

void add_common(CLI::App* sub, RunConfig& cfg, bool pixels) {
  sub->add_option("--manifest", cfg.manifest, "Corpus manifest (JSON)")->required();
  sub->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "Seed for every randomized step")->capture_default_str();
  if (pixels) {
    sub->add_flag("--no-pixels", cfg.no_pixels, "Skip image decoding; sharpness is zero-filled");
    sub->add_flag("--no-pose", cfg.no_pose, "Ignore pose estimates; pose slots are zero-filled");
    sub->add_option("--energy", cfg.energy, "Sobel energy: squared or magnitude")
        ->check(CLI::IsMember({"squared", "magnitude"}))
        ->capture_default_str();
  }
}

void add_solver(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--c-grid", cfg.c_grid, "Candidate C values (comma separated)")->delimiter(',');
  sub->add_option("--nu", cfg.nu, "nu in (0, 1]")->capture_default_str();
  sub->add_option("--tolerance", cfg.tolerance, "Solver tolerance")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Person importance: features, pairwise regression, ranking and evaluation"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* extract = app.add_subcommand("extract", "Write the per-face feature table");
  add_common(extract, cfg, true);

  auto* train_cmd = app.add_subcommand("train", "Train a model on all pairs");
  add_common(train_cmd, cfg, true);
  add_solver(train_cmd, cfg);
  train_cmd->add_option("--folds", cfg.folds, "Folds used to pick C")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Cross-validate the model and the baselines");
  add_common(eval, cfg, true);
  add_solver(eval, cfg);
  eval->add_option("--folds", cfg.folds, "Number of folds")->capture_default_str();
  eval->add_option("--fixations", cfg.fixations, "Fixation CSV (image_id,x,y)");
  eval->add_flag("--agreement", cfg.agreement, "Also report leave-one-human-out agreement");
  eval->add_flag("--loho", cfg.loho, "Also cross-validate against each held-out worker");
  eval->add_flag("--ablation", cfg.ablation, "Also run the feature-group ablation");

  auto* rank = app.add_subcommand("rank", "Elo ranking from pair judgments");
  add_common(rank, cfg, false);
  rank->add_flag("--per-judgment", cfg.per_judgment, "One Elo match per judgment instead of per pair");

  auto* sal = app.add_subcommand("saliency-compare", "Saliency ranking vs importance ranking");
  add_common(sal, cfg, false);
  sal->add_option("--fixations", cfg.fixations, "Fixation CSV (image_id,x,y)");

  auto* describe = app.add_subcommand("describe", "Pick one sentence per image");
  add_common(describe, cfg, true);
  add_solver(describe, cfg);
  describe->add_option("--model", cfg.model, "Trained model; otherwise images are held out and a model is trained");
  describe->add_option("--test-fraction", cfg.test_fraction, "Held-out image fraction")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*extract) return cmd_extract(cfg);
    if (*train_cmd) return cmd_train(cfg);
    if (*eval) return cmd_eval(cfg);
    if (*rank) return cmd_rank(cfg);
    if (*sal) return cmd_saliency_compare(cfg);
    if (*describe) return cmd_describe(cfg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
