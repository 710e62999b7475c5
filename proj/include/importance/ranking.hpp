#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace importance {

struct EloConfig {
  double initial_rating = 1000.0;
  double k_factor = 32.0;
  std::size_t epochs = 100;
  std::uint64_t seed = 42;
  double scale = 400.0;  // logistic scale of the expected-score curve
};

// One graded outcome; score_a is A's actual score in [0, 1] (1 = A wins).
struct Outcome {
  std::string a;
  std::string b;
  double score_a = 0.5;
};

struct RankingEntry {
  std::string item_id;
  double rating = 0.0;
  std::size_t rank = 0;  // 1 = best
};

// Entries sorted by rank: non-increasing rating, ties by item_id.
struct RankingTable {
  std::vector<RankingEntry> entries;

  const RankingEntry& find(const std::string& item_id) const;  // throws UnknownItem
  std::size_t size() const { return entries.size(); }
};

RankingTable rank_by_score(std::span<const std::string> items, std::span<const double> scores);

// Multi-epoch Elo; outcome order is reshuffled every epoch from cfg.seed.
// Throws UnknownItem when an outcome names an item outside `items`.
RankingTable elo_rank(std::span<const std::string> items, std::span<const Outcome> outcomes, const EloConfig& cfg = {});

struct TauResult {
  double tau = 0.0;
  bool ties = false;  // tau-b correction applied
};

// Kendall's tau between two aligned score vectors (higher = better ranked).
// Without ties this is tau-a; with ties, tau-b.
TauResult kendall_tau(std::span<const double> x, std::span<const double> y);

// Tau between two rankings over the same item set (compared by rank).
// Throws ItemSetMismatch.
TauResult kendall_tau(const RankingTable& r1, const RankingTable& r2);

void write_ranking(std::ostream& out, const std::string& group, const RankingTable& table);

// Deterministic across standard libraries (std::shuffle and the std
// distributions are not).
std::size_t uniform_index(std::uint64_t& state, std::size_t bound);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace importance
