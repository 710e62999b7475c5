// Writes a synthetic corpus (manifest, PGM images, fixations) for CLI tests.
#include <cstdlib>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_world DIR [IMAGES] [SEED]\n";
    return 2;
  }
  synth::Options opts;
  if (argc > 2) opts.images = std::strtoul(argv[2], nullptr, 10);
  if (argc > 3) opts.seed = std::strtoull(argv[3], nullptr, 10);
  synth::write_world(synth::make_world(opts), argv[1]);
  return 0;
}
