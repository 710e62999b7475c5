#pragma once

// Seeded synthetic worlds whose ground-truth importance is a linear function
// of the extracted features.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "importance/corpus.hpp"
#include "importance/eval.hpp"
#include "importance/features.hpp"
#include "importance/image.hpp"

namespace synth {

struct Options {
  std::size_t images = 120;
  std::size_t min_faces = 3;
  std::size_t max_faces = 7;
  std::size_t pairs_per_image = 6;  // capped at n*(n-1)/2
  std::size_t workers = 3;
  int width = 160;
  int height = 120;
  std::size_t fixations_per_image = 40;
  std::uint64_t seed = 7;
};

struct World {
  importance::Corpus corpus;
  std::vector<importance::GrayImage> pixels;
  importance::FixationData fixations;
  std::vector<double> weights;            // over the 37 features, in raw units
  std::vector<std::vector<double>> truth;  // per image, per face
};

World make_world(const Options& opts = {});

// Pixel source serving the in-memory images.
importance::PixelSource memory_source(const std::vector<importance::GrayImage>& pixels);

// Writes manifest.json, PGM images and fixations.csv into dir.
void write_world(const World& world, const std::filesystem::path& dir);

std::uint64_t next(std::uint64_t& state);
double uniform(std::uint64_t& state);  // [0, 1)

}  // namespace synth
