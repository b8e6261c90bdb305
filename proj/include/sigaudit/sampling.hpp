#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "sigaudit/agreement.hpp"
#include "sigaudit/fairness.hpp"
#include "sigaudit/metrics.hpp"
#include "sigaudit/rank_corr.hpp"
#include "sigaudit/significance.hpp"

namespace sigaudit {

class WorkerPool;

struct ReplicateConfig {
  std::size_t iterations = 50;
  std::uint64_t seed = 0;
  /// Topics drawn per iteration; 0 means "as many as the gold score matrix has".
  std::size_t target_size = 0;
};

/// Seed of a named pipeline stage, derived from the master seed.
std::uint64_t stage_seed(std::uint64_t master, std::string_view stage);

/// Uniform sample of `size` topics without replacement, returned sorted. A pure function
/// of (topics, size, seed, iteration); distinct iterations use independent streams.
std::vector<TopicId> undersample_topics(std::span<const TopicId> topics, std::size_t size,
                                        std::uint64_t seed, std::uint64_t iteration);

struct IterationResult {
  std::vector<TopicId> topics;
  ConfusionRates rates;
  CorrelationReport correlation;
  DropReport drops;
};

/// Mean and sample standard deviation over the defined (non-NA) values.
struct FieldStats {
  std::optional<double> mean;
  std::optional<double> stddev;
  std::size_t excluded = 0;  // NA values left out
};

FieldStats field_stats(std::span<const std::optional<double>> values);

struct ReplicateReport {
  std::vector<IterationResult> per_iteration;
  std::size_t gold_positive = 0;
  std::size_t gold_negative = 0;
  FieldStats tp, fn, tn, fp, tau, rbo, mean_drop, max_drop;
  double rbo_p = 0.07;
  DropReport mean_drops;  // per-run drops averaged over iterations

  [[nodiscard]] RatePercentages mean_rates() const { return {tp.mean, fn.mean, tn.mean, fp.mean}; }
};

struct PipelineParams {
  std::uint64_t permutations = 100'000;
  double alpha = 0.05;
  double rbo_p = 0.07;
};

/// Undersampled comparison against a precomputed gold table. Every iteration scores the
/// alternative qrels on a fresh topic sample and runs the full comparison. Here
/// cfg.target_size must be set explicitly.
ReplicateReport run_replicates(const RunPool& pool, const PValueTable& gold_table,
                               const Qrels& alt_qrels, const MetricSpec& spec,
                               const ReplicateConfig& cfg, const PipelineParams& params,
                               WorkerPool* workers = nullptr);

/// Scores the gold side itself; target_size 0 resolves to the gold topic count.
ReplicateReport run_replicates(const RunPool& pool, const Qrels& gold_qrels, const Qrels& alt_qrels,
                               const MetricSpec& spec, const ReplicateConfig& cfg,
                               const PipelineParams& params, WorkerPool* workers = nullptr);

/// One row per iteration, then `mean` and `stddev` rows.
void write_replicates(std::ostream& out, const ReplicateReport& report);

}  // namespace sigaudit
