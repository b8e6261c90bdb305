#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sigaudit/metrics.hpp"

namespace sigaudit {

class WorkerPool;

/// Unordered run pair in canonical form a < b.
struct PairId {
  std::size_t a = 0;
  std::size_t b = 0;

  auto operator<=>(const PairId&) const = default;
};

/// Position of (a, b) in the lexicographic enumeration of the C(m, 2) canonical pairs.
[[nodiscard]] constexpr std::size_t pair_index(PairId p, std::size_t m) noexcept {
  return p.a * (2 * m - p.a - 1) / 2 + (p.b - p.a - 1);
}

/// Inverse of pair_index.
[[nodiscard]] PairId pair_at(std::size_t index, std::size_t m);

/// All canonical pairs over m runs, in pair_index order.
[[nodiscard]] std::vector<PairId> all_pairs(std::size_t m);

/// Absolute-difference slack for comparing permuted and observed statistics. Mathematically
/// equal mean differences can differ in the last bits when summed over different values.
inline constexpr double kStatisticTolerance = 1e-12;

/// p-values for every canonical pair, stored in pair_index order.
struct PValueTable {
  std::vector<std::string> run_tags;
  std::vector<double> pvalues;
  std::uint64_t permutations = 0;
  std::uint64_t seed = 0;
  double alpha_hint = 0.05;
  std::string metric;
  std::string qrels_name;

  [[nodiscard]] std::size_t runs() const noexcept { return run_tags.size(); }
  [[nodiscard]] std::size_t size() const noexcept { return pvalues.size(); }
  [[nodiscard]] double p(PairId pair) const { return pvalues[pair_index(pair, runs())]; }
};

/// Pairs with p < alpha, as flags in pair_index order.
struct SignificanceSet {
  std::vector<std::string> run_tags;
  double alpha = 0.05;
  std::vector<bool> flags;

  [[nodiscard]] std::size_t runs() const noexcept { return run_tags.size(); }
  [[nodiscard]] bool contains(PairId pair) const { return flags[pair_index(pair, runs())]; }
  [[nodiscard]] std::size_t count() const;
  [[nodiscard]] std::vector<PairId> pairs() const;
};

/// Two-sided randomized Tukey HSD. Each permutation shuffles every topic column
/// independently across runs and records the range of the permuted run means;
/// p(i, j) is the fraction of permutations whose range reaches |mean_i - mean_j|.
/// Output depends only on (matrix, permutations, seed), not on the worker count.
PValueTable randomized_tukey_hsd(const ScoreMatrix& matrix, std::uint64_t permutations,
                                 std::uint64_t seed, WorkerPool* workers = nullptr);

/// Maximum (m!)^n that exact_tukey_hsd accepts.
inline constexpr std::uint64_t kExactAssignmentLimit = 10'000'000;

/// Same statistic as the randomized test, enumerating all (m!)^n within-topic assignments.
PValueTable exact_tukey_hsd(const ScoreMatrix& matrix);

/// Strict p < alpha.
SignificanceSet significant_set(const PValueTable& table, double alpha);

/// CSV: `# permutations=B seed=S metric=M qrels=Q` then `run_a,run_b,pvalue` rows.
void write_pvalue_table(std::ostream& out, const PValueTable& table);
PValueTable read_pvalue_table(std::istream& in);

}  // namespace sigaudit
