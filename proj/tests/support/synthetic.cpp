#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "importance/ranking.hpp"
#include "json.hpp"

namespace synth {

using namespace importance;

std::uint64_t next(std::uint64_t& state) { return splitmix64(state); }

double uniform(std::uint64_t& state) { return static_cast<double>(next(state) >> 11) * 0x1.0p-53; }

namespace {

bool overlaps(const Box& a, const Box& b) {
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

ImageRecord make_image(std::size_t index, const Options& opts, std::uint64_t& rng) {
  ImageRecord img;
  img.image_id = "img" + std::to_string(1000 + index);
  img.pixel_width = opts.width;
  img.pixel_height = opts.height;
  img.image_path = img.image_id + ".pgm";
  const std::size_t n = opts.min_faces + uniform_index(rng, opts.max_faces - opts.min_faces + 1);
  for (std::size_t k = 0; k < n; ++k) {
    FaceRecord face;
    face.face_id = "f" + std::to_string(k);
    for (int attempt = 0; attempt < 60; ++attempt) {
      const double side = 10.0 + 30.0 * uniform(rng);
      const double h = side * (1.0 + 0.3 * uniform(rng));
      face.box = {std::floor((opts.width - side) * uniform(rng)), std::floor((opts.height - h) * uniform(rng)),
                  std::round(side), std::round(h)};
      const bool clash = std::any_of(img.faces.begin(), img.faces.end(),
                                     [&](const FaceRecord& other) { return overlaps(face.box, other.box); });
      if (!clash) break;
    }
    face.detected_automatically = uniform(rng) < 0.7;
    std::array<double, kPoseComponents> scores{};
    for (auto& s : scores) s = std::round((2.0 * uniform(rng) - 1.0) * 1000.0) / 1000.0;
    face.pose = PoseEstimate::from_scores(scores);
    face.sentence = "person " + face.face_id + " in " + img.image_id;
    img.faces.push_back(std::move(face));
  }
  return img;
}

GrayImage make_pixels(const ImageRecord& img, std::uint64_t& rng) {
  GrayImage g(img.pixel_width, img.pixel_height);
  const double tilt = 20.0 * uniform(rng);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) g.at(x, y) = std::round(90.0 + tilt * x / g.width);
  }
  for (const auto& face : img.faces) {
    const double contrast = 4.0 + 56.0 * uniform(rng);
    const PixelRect r = clip_box(face.box, g.width, g.height);
    for (int y = r.y0; y < r.y1; ++y) {
      for (int x = r.x0; x < r.x1; ++x) {
        g.at(x, y) = std::clamp(std::round(128.0 + contrast * (2.0 * uniform(rng) - 1.0)), 0.0, 255.0);
      }
    }
  }
  return g;
}

}  // namespace

PixelSource memory_source(const std::vector<GrayImage>& pixels) {
  return [&pixels](const Corpus&, std::size_t i) -> std::optional<GrayImage> { return pixels.at(i); };
}

World make_world(const Options& opts) {
  std::uint64_t rng = opts.seed;
  std::vector<ImageRecord> images;
  std::vector<GrayImage> pixels;
  for (std::size_t i = 0; i < opts.images; ++i) {
    images.push_back(make_image(i, opts, rng));
    pixels.push_back(make_pixels(images.back(), rng));
  }

  std::vector<ImageFeatures> feats;
  for (std::size_t i = 0; i < images.size(); ++i) feats.push_back(extract_image(images[i], &pixels[i]));

  // Generating weights, scaled by each feature's spread so that every cue matters.
  const std::vector<std::pair<std::size_t, double>> cues = {{feature::kScale, 1.0},
                                                            {feature::kSharpness, 1.0},
                                                            {feature::kWeightedDistCenter, -1.0},
                                                            {feature::kDetected, 0.5},
                                                            {feature::kDominantScore, 0.5}};
  std::vector<double> weights(kFeatureDims, 0.0);
  for (const auto& [k, sign] : cues) {
    double sum = 0.0, sq = 0.0, n = 0.0;
    for (const auto& img : feats) {
      for (const auto& f : img.faces) {
        sum += f[k];
        sq += f[k] * f[k];
        n += 1.0;
      }
    }
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(sq / n - mean * mean, 1e-12));
    weights[k] = sign / sd;
  }

  std::vector<std::vector<double>> truth(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& f : feats[i].faces) {
      double g = 0.0;
      for (std::size_t k = 0; k < kFeatureDims; ++k) g += weights[k] * f[k];
      truth[i].push_back(g);
    }
  }

  struct Draft {
    std::size_t image, a, b;
    double gap;
  };
  std::vector<Draft> drafts;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    const std::size_t n = images[i].faces.size();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
    }
    for (std::size_t k = all.size(); k > 1; --k) std::swap(all[k - 1], all[uniform_index(rng, k)]);
    all.resize(std::min(all.size(), opts.pairs_per_image));
    for (auto [a, b] : all) {
      if (next(rng) & 1) std::swap(a, b);
      drafts.push_back({i, a, b, truth[i][a] - truth[i][b]});
    }
  }
  std::vector<double> gaps;
  for (const auto& d : drafts) gaps.push_back(std::fabs(d.gap));
  std::sort(gaps.begin(), gaps.end());
  const double same_below = gaps[gaps.size() / 40];
  const double significant_above = gaps[gaps.size() / 2];

  std::vector<AnnotatedPair> pairs;
  for (std::size_t p = 0; p < drafts.size(); ++p) {
    const auto& d = drafts[p];
    AnnotatedPair pair;
    pair.pair_id = "p" + std::to_string(p);
    pair.side_a = {images[d.image].image_id, images[d.image].faces[d.a].face_id};
    pair.side_b = {images[d.image].image_id, images[d.image].faces[d.b].face_id};
    const double mag = std::fabs(d.gap);
    PairJudgment j;
    j.winner = d.gap >= 0.0 ? Side::A : Side::B;
    j.magnitude = mag > significant_above ? Magnitude::Significant
                  : mag > same_below      ? Magnitude::Slight
                                          : Magnitude::Same;
    for (std::size_t w = 0; w < opts.workers; ++w) {
      j.worker_id = "w" + std::to_string(w);
      pair.judgments.push_back(j);
    }
    pairs.push_back(std::move(pair));
  }

  FixationData fixations;
  for (const auto& img : images) {
    double total_area = 0.0;
    for (const auto& f : img.faces) total_area += f.box.area();
    auto& pts = fixations.points[img.image_id];
    for (std::size_t k = 0; k < opts.fixations_per_image; ++k) {
      if (uniform(rng) < 0.2) {
        pts.push_back({std::floor(uniform(rng) * img.pixel_width), std::floor(uniform(rng) * img.pixel_height)});
        continue;
      }
      double pick = uniform(rng) * total_area;
      const FaceRecord* face = &img.faces.back();
      for (const auto& f : img.faces) {
        if (pick < f.box.area()) {
          face = &f;
          break;
        }
        pick -= f.box.area();
      }
      pts.push_back({std::floor(face->box.x + uniform(rng) * face->box.w),
                     std::floor(face->box.y + uniform(rng) * face->box.h)});
    }
  }

  return World{Corpus(PairStyle::ImageLevel, std::move(images), std::move(pairs)), std::move(pixels),
               std::move(fixations), std::move(weights), std::move(truth)};
}

void write_world(const World& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << serialize_corpus(world.corpus);
  }
  for (std::size_t i = 0; i < world.pixels.size(); ++i) {
    save_gray_image(world.pixels[i], dir / *world.corpus.images()[i].image_path);
  }
  std::ofstream fix(dir / "fixations.csv", std::ios::binary);
  fix << "image_id,x,y\n";
  for (const auto& [id, pts] : world.fixations.points) {
    for (const auto& p : pts) fix << id << ',' << p.x << ',' << p.y << '\n';
  }
}

}  // namespace synth
