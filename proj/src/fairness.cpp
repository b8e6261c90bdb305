#include "sigaudit/fairness.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "sigaudit/agreement.hpp"

namespace sigaudit {

namespace {

double median_of_sorted(std::span<const double> v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

std::vector<std::size_t> per_run_counts(const SignificanceSet& sig) {
  const std::size_t m = sig.runs();
  std::vector<std::size_t> counts(m, 0);
  for (std::size_t i = 0; i < sig.flags.size(); ++i) {
    if (!sig.flags[i]) continue;
    const auto pair = pair_at(i, m);
    ++counts[pair.a];
    ++counts[pair.b];
  }
  return counts;
}

DistributionSummary summarize(std::span<const double> values) {
  DistributionSummary s;
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  const std::size_t half = (n + 1) / 2;
  s.min = v.front();
  s.max = v.back();
  s.median = median_of_sorted(v);
  s.q1 = median_of_sorted(std::span<const double>(v).first(half));
  s.q3 = median_of_sorted(std::span<const double>(v).last(half));
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  return s;
}

DropReport per_run_drops(const SignificanceSet& gold, const SignificanceSet& alt) {
  require_same_pool(gold.run_tags, alt.run_tags);
  const std::size_t m = gold.runs();
  const auto gold_counts = per_run_counts(gold);
  const auto alt_counts = per_run_counts(alt);
  std::vector<std::size_t> drops(m, 0);
  for (std::size_t i = 0; i < gold.flags.size(); ++i) {
    if (gold.flags[i] && !alt.flags[i]) {
      const auto pair = pair_at(i, m);
      ++drops[pair.a];
      ++drops[pair.b];
    }
  }

  DropReport report;
  std::vector<double> values;
  for (std::size_t r = 0; r < m; ++r) {
    const auto g = static_cast<double>(gold_counts[r]);
    const auto a = static_cast<double>(alt_counts[r]);
    report.per_run.push_back(RunDrop{gold.run_tags[r], g, a, static_cast<double>(drops[r]), g - a});
    values.push_back(static_cast<double>(drops[r]));
  }
  report.summary = summarize(values);
  return report;
}

DropReport average_drops(std::span<const DropReport> reports) {
  if (reports.empty()) throw ValidationError("no drop reports to average");
  DropReport out = reports.front();
  for (auto& r : out.per_run) r = RunDrop{r.run_tag};
  for (const auto& rep : reports) {
    if (rep.per_run.size() != out.per_run.size()) throw ValidationError("drop reports differ in run count");
    for (std::size_t i = 0; i < rep.per_run.size(); ++i) {
      auto& acc = out.per_run[i];
      if (rep.per_run[i].run_tag != acc.run_tag) throw ValidationError("drop reports differ in run pool");
      acc.gold_count += rep.per_run[i].gold_count;
      acc.alt_count += rep.per_run[i].alt_count;
      acc.drop += rep.per_run[i].drop;
      acc.signed_delta += rep.per_run[i].signed_delta;
    }
  }
  const auto k = static_cast<double>(reports.size());
  std::vector<double> values;
  for (auto& r : out.per_run) {
    r.gold_count /= k;
    r.alt_count /= k;
    r.drop /= k;
    r.signed_delta /= k;
    values.push_back(r.drop);
  }
  out.summary = summarize(values);
  return out;
}

void write_drops(std::ostream& out, const DropReport& report) {
  out << "run,gold_count,alt_count,drop,signed_delta\n";
  for (const auto& r : report.per_run) {
    out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g}\n", r.run_tag, r.gold_count, r.alt_count,
                       r.drop, r.signed_delta);
  }
}

void write_drop_summary_header(std::ostream& out) {
  out << "dataset,metric,min,q1,median,q3,max,mean\n";
}

void write_drop_summary_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                            const DistributionSummary& s) {
  out << fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", dataset, metric,
                     s.min, s.q1, s.median, s.q3, s.max, s.mean);
}

}  // namespace sigaudit
