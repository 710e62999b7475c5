#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "importance/error.hpp"
#include "importance/eval.hpp"

namespace importance {

namespace {

bool inside(const Box& b, double x, double y) { return x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h; }

ShareResult normalize(std::vector<double> mass) {
  ShareResult out;
  double total = 0.0;
  for (double m : mass) total += m;
  if (total > 0.0) {
    for (auto& m : mass) m /= total;
  } else {
    std::fill(mass.begin(), mass.end(), 1.0 / static_cast<double>(mass.size()));
    out.fallback = true;
  }
  out.shares = std::move(mass);
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

ShareResult saliency_share(const ImageRecord& image, std::span<const FixationPoint> fixations) {
  std::vector<double> counts(image.faces.size(), 0.0);
  for (const auto& p : fixations) {
    for (std::size_t f = 0; f < image.faces.size(); ++f) {
      if (inside(image.faces[f].box, p.x, p.y)) counts[f] += 1.0;
    }
  }
  return normalize(std::move(counts));
}

ShareResult saliency_map_share(const ImageRecord& image, const GrayImage& map) {
  std::vector<double> mass(image.faces.size(), 0.0);
  for (std::size_t f = 0; f < image.faces.size(); ++f) {
    mass[f] = box_sum(map.pixels, map.width, map.height, image.faces[f].box);
  }
  return normalize(std::move(mass));
}

FixationData parse_fixations(std::string_view text, const Corpus& corpus) {
  FixationData data;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (line_no == 1 && cells.size() == 3 && cells[0] == "image_id") continue;
    if (cells.size() != 3) throw ParseError("fixations line " + std::to_string(line_no) + ": expected image_id,x,y");
    FixationPoint p;
    try {
      std::size_t used = 0;
      p.x = std::stod(cells[1], &used);
      if (used != cells[1].size()) throw std::invalid_argument("x");
      p.y = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("y");
    } catch (const std::exception&) {
      throw ParseError("fixations line " + std::to_string(line_no) + ": coordinates must be numbers");
    }
    const auto idx = corpus.image_index(cells[0]);
    if (!idx) throw DanglingReference("fixations line " + std::to_string(line_no) + ": unknown image '" + cells[0] + "'");
    const auto& image = corpus.images()[*idx];
    if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < image.pixel_width && p.y < image.pixel_height)) {
      ++data.dropped;
      continue;
    }
    data.points[cells[0]].push_back(p);
  }
  return data;
}

FixationData load_fixations(const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFixations("cannot open fixation file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_fixations(buffer.str(), corpus);
}

bool CorpusSaliency::complete() const {
  return std::all_of(images.begin(), images.end(), [](const auto& s) { return s.has_value(); });
}

CorpusSaliency corpus_saliency(const Corpus& corpus, const FixationData* fixations, bool load_maps) {
  CorpusSaliency out;
  out.images.resize(corpus.images().size());
  for (std::size_t i = 0; i < corpus.images().size(); ++i) {
    const auto& image = corpus.images()[i];
    if (fixations != nullptr) {
      const auto it = fixations->points.find(image.image_id);
      const std::span<const FixationPoint> pts =
          it == fixations->points.end() ? std::span<const FixationPoint>{} : std::span<const FixationPoint>(it->second);
      out.images[i] = saliency_share(image, pts);
      continue;
    }
    if (load_maps && image.saliency_map_path) {
      std::filesystem::path path(*image.saliency_map_path);
      if (path.is_relative()) path = corpus.base_dir() / path;
      if (auto map = load_gray_image(path)) out.images[i] = saliency_map_share(image, *map);
    }
  }
  return out;
}

}  // namespace importance
