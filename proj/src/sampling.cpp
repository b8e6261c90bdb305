#include "sigaudit/sampling.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "sigaudit/parallel.hpp"
#include "sigaudit/random.hpp"

namespace sigaudit {

std::uint64_t stage_seed(std::uint64_t master, std::string_view stage) {
  return derive_key(master, label_hash(stage));
}

std::vector<TopicId> undersample_topics(std::span<const TopicId> topics, std::size_t size,
                                        std::uint64_t seed, std::uint64_t iteration) {
  if (size > topics.size()) {
    throw ValidationError(fmt::format("cannot sample {} topics from {}", size, topics.size()));
  }
  std::vector<TopicId> pool(topics.begin(), topics.end());
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end()) {
    throw ValidationError("topic set contains duplicates");
  }
  CounterRng rng(derive_key(seed, iteration));
  for (std::size_t i = 0; i < size; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

FieldStats field_stats(std::span<const std::optional<double>> values) {
  FieldStats s;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v) {
      ++s.excluded;
      continue;
    }
    sum += *v;
    ++n;
  }
  if (n == 0) return s;
  const double mean = sum / static_cast<double>(n);
  s.mean = mean;
  if (n >= 2) {
    double ss = 0.0;
    for (const auto& v : values) {
      if (v) ss += (*v - mean) * (*v - mean);
    }
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

ReplicateReport run_replicates(const RunPool& pool, const PValueTable& gold_table,
                               const Qrels& alt_qrels, const MetricSpec& spec,
                               const ReplicateConfig& cfg, const PipelineParams& params,
                               WorkerPool* workers) {
  if (cfg.iterations < 1) throw UsageError("iterations must be >= 1");
  if (cfg.target_size < 1) throw UsageError("undersampling target size must be >= 1");
  if (gold_table.run_tags != pool.tags()) throw ValidationError("gold table does not match run pool");

  const auto candidates = scorable_topics(alt_qrels, spec);
  if (cfg.target_size > candidates.size()) {
    throw ValidationError(fmt::format(
        "undersampling target {} exceeds the {} scorable alternative topics", cfg.target_size,
        candidates.size()));
  }

  const auto gold_sig = significant_set(gold_table, params.alpha);
  const auto sample_seed = stage_seed(cfg.seed, "undersample");
  const auto tukey_seed = stage_seed(cfg.seed, "tukey");

  ReplicateReport report;
  report.rbo_p = params.rbo_p;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    try {
      IterationResult result;
      result.topics = undersample_topics(candidates, cfg.target_size, sample_seed, it);
      const auto matrix = build_score_matrix(pool, alt_qrels, spec, result.topics, nullptr, workers);
      const auto alt_table = randomized_tukey_hsd(matrix, params.permutations, tukey_seed, workers);
      const auto alt_sig = significant_set(alt_table, params.alpha);
      result.rates = confusion_rates(classify_pairs(gold_sig, alt_sig));
      result.correlation = correlate(gold_table, alt_table, params.rbo_p);
      result.drops = per_run_drops(gold_sig, alt_sig);
      report.per_iteration.push_back(std::move(result));
    } catch (const std::exception& e) {
      throw ValidationError(fmt::format("undersampling iteration {}: {}", it, e.what()));
    }
  }

  const auto& first = report.per_iteration.front().rates;
  report.gold_positive = first.gold_positive();
  report.gold_negative = first.gold_negative();

  auto collect = [&](auto getter) {
    std::vector<std::optional<double>> v;
    for (const auto& r : report.per_iteration) v.push_back(getter(r));
    return field_stats(v);
  };
  report.tp = collect([](const IterationResult& r) { return r.rates.tp_pct(); });
  report.fn = collect([](const IterationResult& r) { return r.rates.fn_pct(); });
  report.tn = collect([](const IterationResult& r) { return r.rates.tn_pct(); });
  report.fp = collect([](const IterationResult& r) { return r.rates.fp_pct(); });
  report.tau = collect([](const IterationResult& r) { return r.correlation.kendall_tau; });
  report.rbo = collect(
      [](const IterationResult& r) { return std::optional<double>(r.correlation.rbo); });
  report.mean_drop = collect(
      [](const IterationResult& r) { return std::optional<double>(r.drops.summary.mean); });
  report.max_drop = collect(
      [](const IterationResult& r) { return std::optional<double>(r.drops.summary.max); });

  std::vector<DropReport> drops;
  drops.reserve(report.per_iteration.size());
  for (const auto& r : report.per_iteration) drops.push_back(r.drops);
  report.mean_drops = average_drops(drops);
  return report;
}

ReplicateReport run_replicates(const RunPool& pool, const Qrels& gold_qrels, const Qrels& alt_qrels,
                               const MetricSpec& spec, const ReplicateConfig& cfg,
                               const PipelineParams& params, WorkerPool* workers) {
  const auto gold_matrix = build_score_matrix(pool, gold_qrels, spec, std::nullopt, nullptr, workers);
  const auto gold_table = randomized_tukey_hsd(gold_matrix, params.permutations,
                                               stage_seed(cfg.seed, "tukey"), workers);
  ReplicateConfig resolved = cfg;
  if (resolved.target_size == 0) resolved.target_size = gold_matrix.topics();
  return run_replicates(pool, gold_table, alt_qrels, spec, resolved, params, workers);
}

void write_replicates(std::ostream& out, const ReplicateReport& report) {
  out << "iteration,tp,fn,tn,fp,tau,rbo,mean_drop,max_drop\n";
  for (std::size_t i = 0; i < report.per_iteration.size(); ++i) {
    const auto& r = report.per_iteration[i];
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", i, format_pct(r.rates.tp_pct()),
                       format_pct(r.rates.fn_pct()), format_pct(r.rates.tn_pct()),
                       format_pct(r.rates.fp_pct()), format_real(r.correlation.kendall_tau),
                       format_real(r.correlation.rbo), format_real(r.drops.summary.mean),
                       format_real(r.drops.summary.max));
  }
  auto row = [&](const char* label, auto pick) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", label, format_pct(pick(report.tp)),
                       format_pct(pick(report.fn)), format_pct(pick(report.tn)),
                       format_pct(pick(report.fp)), format_real(pick(report.tau)),
                       format_real(pick(report.rbo)), format_real(pick(report.mean_drop)),
                       format_real(pick(report.max_drop)));
  };
  row("mean", [](const FieldStats& s) { return s.mean; });
  row("stddev", [](const FieldStats& s) { return s.stddev; });
}

}  // namespace sigaudit
