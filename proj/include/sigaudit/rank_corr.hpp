#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sigaudit/significance.hpp"

namespace sigaudit {

/// Run pairs ordered by (p ascending, PairId ascending).
struct PairRanking {
  std::size_t runs = 0;
  std::vector<PairId> items;
  std::vector<double> pvalues;  // aligned with items
  /// Half-open [begin, end) position ranges of items sharing one p-value.
  std::vector<std::pair<std::size_t, std::size_t>> tie_groups;

  [[nodiscard]] std::size_t size() const noexcept { return items.size(); }
};

struct CorrelationReport {
  std::optional<double> kendall_tau;  // empty when tau-b is undefined (a ranking is fully tied)
  double rbo = 0.0;
  double rbo_p = 0.07;
};

PairRanking rank_pairs_by_pvalue(const PValueTable& table);

/// Kendall tau-b between the p-values the two rankings assign to each pair, by Knight's
/// O(N log N) merge-sort count. Returns nullopt when either side has every item tied.
std::optional<double> kendall_tau(const PairRanking& gold, const PairRanking& alt);

/// Rank-biased overlap with conjoint extrapolation:
///   sum_{d=1..k} (1-p) p^(d-1) A_d + p^k A_k,  A_d = |prefix_d(gold) n prefix_d(alt)| / d.
double rbo(const PairRanking& gold, const PairRanking& alt, double p);

CorrelationReport correlate(const PValueTable& gold, const PValueTable& alt, double rbo_p);

/// `dataset,metric,tau,rbo,rbo_p`
void write_correlation_header(std::ostream& out);
void write_correlation_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                           const std::optional<double>& tau, const std::optional<double>& rbo_value,
                           double rbo_p);

std::string format_real(const std::optional<double>& v);

}  // namespace sigaudit
