#include "sigaudit/rank_corr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <fmt/format.h>

namespace sigaudit {

namespace {

// Per-item p-values in pair_index order; throws unless `r` is a full ranking of all pairs.
std::vector<double> values_by_item(const PairRanking& r) {
  if (r.items.size() != pair_count(r.runs) || r.pvalues.size() != r.items.size()) {
    throw ValidationError("ranking does not cover every run pair");
  }
  std::vector<double> out(r.items.size(), 0.0);
  std::vector<bool> seen(r.items.size(), false);
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    const auto& pair = r.items[i];
    if (pair.a >= pair.b || pair.b >= r.runs) throw ValidationError("ranking holds a non-canonical pair");
    const auto k = pair_index(pair, r.runs);
    if (seen[k]) throw ValidationError("ranking lists a pair twice");
    seen[k] = true;
    out[k] = r.pvalues[i];
  }
  return out;
}

void require_same_items(const PairRanking& gold, const PairRanking& alt) {
  if (gold.runs != alt.runs || gold.items.size() != alt.items.size()) {
    throw ValidationError("rankings are over different pair sets");
  }
}

std::int64_t tie_pairs(std::int64_t group) { return group * (group - 1) / 2; }

// Sorts `v` ascending and returns the number of strict inversions.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buffer, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buffer, lo, mid) + merge_count(v, buffer, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buffer[k++] = v[j++];
    } else {
      buffer[k++] = v[i++];
    }
  }
  while (i < mid) buffer[k++] = v[i++];
  while (j < hi) buffer[k++] = v[j++];
  std::copy(buffer.begin() + static_cast<std::ptrdiff_t>(lo),
            buffer.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

PairRanking rank_pairs_by_pvalue(const PValueTable& table) {
  const std::size_t m = table.runs();
  if (table.pvalues.empty()) throw ValidationError("p-value table is empty");
  if (table.pvalues.size() != pair_count(m)) throw ValidationError("p-value table is incomplete");

  std::vector<std::size_t> order(table.pvalues.size());
  std::iota(order.begin(), order.end(), 0);
  // pair_index order coincides with PairId order, so a stable sort on p alone suffices.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.pvalues[a] < table.pvalues[b];
  });

  PairRanking r;
  r.runs = m;
  r.items.reserve(order.size());
  r.pvalues.reserve(order.size());
  for (auto k : order) {
    r.items.push_back(pair_at(k, m));
    r.pvalues.push_back(table.pvalues[k]);
  }
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= r.pvalues.size(); ++i) {
    if (i == r.pvalues.size() || r.pvalues[i] != r.pvalues[begin]) {
      r.tie_groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return r;
}

std::optional<double> kendall_tau(const PairRanking& gold, const PairRanking& alt) {
  require_same_items(gold, alt);
  const auto x = values_by_item(gold);
  const auto y = values_by_item(alt);
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("Kendall tau needs at least 2 items");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  std::int64_t ties_x = 0;
  std::int64_t ties_xy = 0;
  std::int64_t run_x = 1;
  std::int64_t run_xy = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[idx[i]] == x[idx[i - 1]]) {
      ++run_x;
      if (y[idx[i]] == y[idx[i - 1]]) {
        ++run_xy;
      } else {
        ties_xy += tie_pairs(run_xy);
        run_xy = 1;
      }
    } else {
      ties_x += tie_pairs(run_x);
      ties_xy += tie_pairs(run_xy);
      run_x = 1;
      run_xy = 1;
    }
  }
  ties_x += tie_pairs(run_x);
  ties_xy += tie_pairs(run_xy);

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  std::vector<double> buffer(n);
  const std::int64_t discordant = merge_count(ys, buffer, 0, n);

  std::int64_t ties_y = 0;
  std::int64_t run_y = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (ys[i] == ys[i - 1]) {
      ++run_y;
    } else {
      ties_y += tie_pairs(run_y);
      run_y = 1;
    }
  }
  ties_y += tie_pairs(run_y);

  const std::int64_t total = tie_pairs(static_cast<std::int64_t>(n));
  const std::int64_t untied_x = total - ties_x;
  const std::int64_t untied_y = total - ties_y;
  if (untied_x == 0 || untied_y == 0) return std::nullopt;
  const std::int64_t numerator = total - ties_x - ties_y + ties_xy - 2 * discordant;
  return static_cast<double>(numerator) /
         std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
}

double rbo(const PairRanking& gold, const PairRanking& alt, double p) {
  if (!(p > 0.0 && p < 1.0)) throw UsageError("RBO persistence p must lie in (0, 1)");
  require_same_items(gold, alt);
  values_by_item(gold);
  values_by_item(alt);
  const std::size_t k = gold.items.size();
  const std::size_t m = gold.runs;

  std::vector<bool> in_gold(k, false);
  std::vector<bool> in_alt(k, false);
  std::size_t overlap = 0;
  // The weights (1-p) p^(d-1) for d = 1..k plus the tail p^k sum to 1, so accumulating the
  // shortfall 1 - A_d keeps identical rankings at exactly 1.
  double weight = 1.0 - p;
  double shortfall = 0.0;
  double agreement = 0.0;
  for (std::size_t d = 1; d <= k; ++d) {
    const auto g = pair_index(gold.items[d - 1], m);
    const auto a = pair_index(alt.items[d - 1], m);
    in_gold[g] = true;
    if (in_alt[g]) ++overlap;
    in_alt[a] = true;
    if (in_gold[a]) ++overlap;
    agreement = static_cast<double>(overlap) / static_cast<double>(d);
    shortfall += weight * (1.0 - agreement);
    weight *= p;
  }
  return 1.0 - shortfall - std::pow(p, static_cast<double>(k)) * (1.0 - agreement);
}

CorrelationReport correlate(const PValueTable& gold, const PValueTable& alt, double rbo_p) {
  if (gold.run_tags != alt.run_tags) throw ValidationError("p-value tables cover different run pools");
  const auto rg = rank_pairs_by_pvalue(gold);
  const auto ra = rank_pairs_by_pvalue(alt);
  CorrelationReport report;
  report.kendall_tau = rg.size() >= 2 ? kendall_tau(rg, ra) : std::nullopt;
  report.rbo = rbo(rg, ra, rbo_p);
  report.rbo_p = rbo_p;
  return report;
}

std::string format_real(const std::optional<double>& v) {
  return v ? fmt::format("{:.10g}", *v) : std::string("NA");
}

void write_correlation_header(std::ostream& out) { out << "dataset,metric,tau,rbo,rbo_p\n"; }

void write_correlation_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                           const std::optional<double>& tau, const std::optional<double>& rbo_value,
                           double rbo_p) {
  out << fmt::format("{},{},{},{},{}\n", dataset, metric, format_real(tau), format_real(rbo_value),
                     rbo_p);
}

}  // namespace sigaudit
