#include "sigaudit/significance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>

#include <fmt/format.h>

#include "sigaudit/parallel.hpp"
#include "sigaudit/random.hpp"

namespace sigaudit {

namespace {

void check_matrix(const ScoreMatrix& matrix) {
  if (matrix.runs() < 2) throw ValidationError("Tukey HSD needs at least 2 runs");
  if (matrix.topics() < 1) throw ValidationError("Tukey HSD needs at least 1 topic");
  for (double v : matrix.values()) {
    if (!std::isfinite(v)) throw ValidationError("score matrix contains a non-finite value");
  }
}

// Per-run means, summed in topic order. The permutation loops accumulate in the same
// order, so the identity assignment reproduces these values bit for bit.
std::vector<double> run_means(const ScoreMatrix& matrix) {
  std::vector<double> means(matrix.runs());
  const auto n = static_cast<double>(matrix.topics());
  for (std::size_t r = 0; r < matrix.runs(); ++r) {
    double sum = 0.0;
    for (double v : matrix.row(r)) sum += v;
    means[r] = sum / n;
  }
  return means;
}

std::vector<double> observed_differences(const std::vector<double>& means) {
  const std::size_t m = means.size();
  std::vector<double> d;
  d.reserve(pair_count(m));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) d.push_back(std::abs(means[a] - means[b]));
  }
  return d;
}

// Column-major copy: columns[t * m + r] = score of run r on topic t.
std::vector<double> column_major(const ScoreMatrix& matrix) {
  const std::size_t m = matrix.runs();
  const std::size_t n = matrix.topics();
  std::vector<double> cols(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t t = 0; t < n; ++t) cols[t * m + r] = matrix.at(r, t);
  }
  return cols;
}

double range_of_means(const std::vector<double>& sums, double n) {
  double lo = sums[0] / n;
  double hi = lo;
  for (std::size_t i = 1; i < sums.size(); ++i) {
    const double mean = sums[i] / n;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
  }
  return hi - lo;
}

std::vector<double> counts_to_pvalues(const std::vector<double>& observed,
                                      std::vector<double> ranges) {
  std::sort(ranges.begin(), ranges.end());
  const auto total = static_cast<double>(ranges.size());
  std::vector<double> p;
  p.reserve(observed.size());
  for (double d : observed) {
    auto first = std::lower_bound(ranges.begin(), ranges.end(), d - kStatisticTolerance);
    p.push_back(static_cast<double>(ranges.end() - first) / total);
  }
  return p;
}

}  // namespace

PairId pair_at(std::size_t index, std::size_t m) {
  for (std::size_t a = 0; a + 1 < m; ++a) {
    const std::size_t row = m - 1 - a;
    if (index < row) return PairId{a, a + 1 + index};
    index -= row;
  }
  throw std::out_of_range("pair index out of range");
}

std::vector<PairId> all_pairs(std::size_t m) {
  std::vector<PairId> out;
  out.reserve(pair_count(m));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) out.push_back(PairId{a, b});
  }
  return out;
}

std::size_t SignificanceSet::count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

std::vector<PairId> SignificanceSet::pairs() const {
  std::vector<PairId> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) out.push_back(pair_at(i, runs()));
  }
  return out;
}

PValueTable randomized_tukey_hsd(const ScoreMatrix& matrix, std::uint64_t permutations,
                                 std::uint64_t seed, WorkerPool* workers) {
  check_matrix(matrix);
  if (permutations < 1) throw UsageError("number of permutations must be >= 1");

  const std::size_t m = matrix.runs();
  const std::size_t n = matrix.topics();
  const auto n_real = static_cast<double>(n);
  const auto observed = observed_differences(run_means(matrix));
  const auto cols = column_major(matrix);

  std::vector<double> ranges(permutations);
  auto simulate = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> order(m);
    std::vector<double> sums(m);
    for (std::size_t b = begin; b < end; ++b) {
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        CounterRng rng(derive_key(seed, b, t));
        std::iota(order.begin(), order.end(), 0U);
        shuffle(std::span(order), rng);
        const double* column = cols.data() + t * m;
        for (std::size_t r = 0; r < m; ++r) sums[r] += column[order[r]];
      }
      ranges[b] = range_of_means(sums, n_real);
    }
  };
  if (workers) {
    workers->for_each_block(permutations, 512, simulate);
  } else {
    simulate(0, permutations);
  }

  PValueTable table;
  table.run_tags = matrix.run_tags();
  table.pvalues = counts_to_pvalues(observed, std::move(ranges));
  table.permutations = permutations;
  table.seed = seed;
  table.metric = matrix.metric().label();
  table.qrels_name = matrix.qrels_name();
  return table;
}

PValueTable exact_tukey_hsd(const ScoreMatrix& matrix) {
  check_matrix(matrix);
  const std::size_t m = matrix.runs();
  const std::size_t n = matrix.topics();

  std::uint64_t per_topic = 1;
  for (std::size_t i = 2; i <= m; ++i) {
    per_topic *= i;
    if (per_topic > kExactAssignmentLimit) throw ValidationError("instance too large for exact enumeration");
  }
  std::uint64_t total = 1;
  for (std::size_t t = 0; t < n; ++t) {
    total *= per_topic;
    if (total > kExactAssignmentLimit) throw ValidationError("instance too large for exact enumeration");
  }

  std::vector<std::vector<std::uint32_t>> orders;
  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0U);
  do {
    orders.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));

  const auto observed = observed_differences(run_means(matrix));
  const auto cols = column_major(matrix);
  const auto n_real = static_cast<double>(n);

  std::vector<double> ranges;
  ranges.reserve(total);
  std::vector<std::size_t> digits(n, 0);
  std::vector<double> sums(m);
  for (std::uint64_t k = 0; k < total; ++k) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const auto& o = orders[digits[t]];
      for (std::size_t r = 0; r < m; ++r) sums[r] += cols[t * m + o[r]];
    }
    ranges.push_back(range_of_means(sums, n_real));
    for (std::size_t t = 0; t < n; ++t) {
      if (++digits[t] < orders.size()) break;
      digits[t] = 0;
    }
  }

  PValueTable table;
  table.run_tags = matrix.run_tags();
  table.pvalues = counts_to_pvalues(observed, std::move(ranges));
  table.permutations = total;
  table.seed = 0;
  table.metric = matrix.metric().label();
  table.qrels_name = matrix.qrels_name();
  return table;
}

SignificanceSet significant_set(const PValueTable& table, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  SignificanceSet set;
  set.run_tags = table.run_tags;
  set.alpha = alpha;
  set.flags.reserve(table.pvalues.size());
  for (double p : table.pvalues) set.flags.push_back(p < alpha);
  return set;
}

void write_pvalue_table(std::ostream& out, const PValueTable& table) {
  out << fmt::format("# permutations={} seed={} metric={} qrels={}\n", table.permutations,
                     table.seed, table.metric.empty() ? "unknown" : table.metric,
                     table.qrels_name.empty() ? "unknown" : table.qrels_name);
  out << "run_a,run_b,pvalue\n";
  const std::size_t m = table.runs();
  for (std::size_t i = 0; i < table.pvalues.size(); ++i) {
    const auto pair = pair_at(i, m);
    out << fmt::format("{},{},{}\n", table.run_tags[pair.a], table.run_tags[pair.b],
                       table.pvalues[i]);
  }
}

PValueTable read_pvalue_table(std::istream& in) {
  PValueTable table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::map<std::string, std::size_t> index_of;
  struct Row {
    std::size_t a, b;
    double p;
    std::size_t line;
  };
  std::vector<Row> rows;

  auto tag_index = [&](const std::string& tag) {
    auto [it, inserted] = index_of.emplace(tag, table.run_tags.size());
    if (inserted) table.run_tags.push_back(tag);
    return it->second;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "permutations") table.permutations = std::stoull(value);
        else if (key == "seed") table.seed = std::stoull(value);
        else if (key == "metric") table.metric = value;
        else if (key == "qrels") table.qrels_name = value;
      }
      continue;
    }
    if (!have_header) {
      if (line != "run_a,run_b,pvalue") throw ParseError("expected header run_a,run_b,pvalue", lineno);
      have_header = true;
      continue;
    }
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ParseError("expected 3 cells", lineno);
    }
    std::string ta = line.substr(0, c1);
    std::string tb = line.substr(c1 + 1, c2 - c1 - 1);
    std::string_view ps(line.data() + c2 + 1, line.size() - c2 - 1);
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(ps.data(), ps.data() + ps.size(), p);
    if (ec != std::errc{} || ptr != ps.data() + ps.size() || !(p >= 0.0 && p <= 1.0)) {
      throw ParseError(fmt::format("invalid p-value '{}'", ps), lineno);
    }
    if (ta == tb) throw ParseError("pair of a run with itself", lineno);
    rows.push_back(Row{tag_index(ta), tag_index(tb), p, lineno});
  }
  if (!have_header) throw ParseError("empty p-value CSV", 0);

  const std::size_t m = table.run_tags.size();
  if (m < 2) throw ValidationError("p-value table needs at least 2 runs");
  if (rows.size() != pair_count(m)) {
    throw ValidationError(fmt::format("p-value table over {} runs must have {} rows, found {}", m,
                                      pair_count(m), rows.size()));
  }
  table.pvalues.assign(rows.size(), -1.0);
  for (const auto& r : rows) {
    PairId pair{std::min(r.a, r.b), std::max(r.a, r.b)};
    auto& slot = table.pvalues[pair_index(pair, m)];
    if (slot >= 0.0) throw ParseError("duplicate pair", r.line);
    slot = r.p;
  }
  return table;
}

}  // namespace sigaudit
