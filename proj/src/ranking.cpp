#include "importance/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "importance/error.hpp"

namespace importance {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t uniform_index(std::uint64_t& state, std::size_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t n = bound;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = 0;
  do {
    r = splitmix64(state);
  } while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

const RankingEntry& RankingTable::find(const std::string& item_id) const {
  for (const auto& e : entries) {
    if (e.item_id == item_id) return e;
  }
  throw UnknownItem("ranking has no item '" + item_id + "'");
}

RankingTable rank_by_score(std::span<const std::string> items, std::span<const double> scores) {
  if (items.size() != scores.size()) throw LengthMismatch("rank_by_score: items and scores differ in length");
  RankingTable table;
  for (std::size_t i = 0; i < items.size(); ++i) table.entries.push_back({items[i], scores[i], 0});
  std::sort(table.entries.begin(), table.entries.end(), [](const RankingEntry& x, const RankingEntry& y) {
    if (x.rating != y.rating) return x.rating > y.rating;
    return x.item_id < y.item_id;
  });
  for (std::size_t i = 0; i < table.entries.size(); ++i) table.entries[i].rank = i + 1;
  return table;
}

RankingTable elo_rank(std::span<const std::string> items, std::span<const Outcome> outcomes, const EloConfig& cfg) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) index.emplace(items[i], i);

  struct Match {
    std::size_t a, b;
    double score_a;
  };
  std::vector<Match> matches;
  matches.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    const auto ia = index.find(o.a), ib = index.find(o.b);
    if (ia == index.end()) throw UnknownItem("outcome references unknown item '" + o.a + "'");
    if (ib == index.end()) throw UnknownItem("outcome references unknown item '" + o.b + "'");
    if (!(o.score_a >= 0.0 && o.score_a <= 1.0)) throw InputError("outcome score must lie in [0, 1]");
    matches.push_back({ia->second, ib->second, o.score_a});
  }

  std::vector<double> rating(items.size(), cfg.initial_rating);
  std::uint64_t rng = cfg.seed;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = matches.size(); i > 1; --i) std::swap(matches[i - 1], matches[uniform_index(rng, i)]);
    for (const auto& m : matches) {
      const double expected_a = 1.0 / (1.0 + std::pow(10.0, (rating[m.b] - rating[m.a]) / cfg.scale));
      const double delta = cfg.k_factor * (m.score_a - expected_a);
      rating[m.a] += delta;
      rating[m.b] -= delta;
    }
  }
  return rank_by_score(items, rating);
}

TauResult kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw LengthMismatch("kendall_tau: vectors differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw EmptyInput("kendall_tau needs at least two items");
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0) ++ties_x;
      if (dy == 0.0) ++ties_y;
      if (dx == 0.0 || dy == 0.0) continue;
      if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  TauResult out;
  out.ties = ties_x > 0 || ties_y > 0;
  if (!out.ties) {
    out.tau = static_cast<double>(concordant - discordant) / pairs;
  } else {
    const double denom = std::sqrt((pairs - ties_x) * (pairs - ties_y));
    out.tau = denom > 0.0 ? static_cast<double>(concordant - discordant) / denom : 0.0;
  }
  return out;
}

TauResult kendall_tau(const RankingTable& r1, const RankingTable& r2) {
  if (r1.size() != r2.size()) throw ItemSetMismatch("rankings cover different numbers of items");
  std::vector<double> x, y;
  for (const auto& e : r1.entries) {
    const RankingEntry* other = nullptr;
    for (const auto& f : r2.entries) {
      if (f.item_id == e.item_id) other = &f;
    }
    if (other == nullptr) throw ItemSetMismatch("item '" + e.item_id + "' missing from the second ranking");
    // Lower rank is better; negate so that larger = better.
    x.push_back(-static_cast<double>(e.rank));
    y.push_back(-static_cast<double>(other->rank));
  }
  return kendall_tau(x, y);
}

void write_ranking(std::ostream& out, const std::string& group, const RankingTable& table) {
  char buf[64];
  for (const auto& e : table.entries) {
    std::snprintf(buf, sizeof buf, "%.6f", e.rating);
    out << group << '\t' << e.item_id << '\t' << buf << '\t' << e.rank << '\n';
  }
}

}  // namespace importance
