#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sigaudit/agreement.hpp"
#include "sigaudit/fairness.hpp"
#include "sigaudit/metrics.hpp"
#include "sigaudit/rank_corr.hpp"
#include "sigaudit/sampling.hpp"
#include "sigaudit/trec_io.hpp"

namespace sigaudit {

class WorkerPool;

inline constexpr const char* kToolVersion = "sigaudit 0.3.0";

/// End-to-end audit settings. Defaults: 100,000 permutations, alpha 0.05, RBO p 0.07,
/// 50 undersampling iterations, cutoff 1000.
struct ExperimentConfig {
  std::filesystem::path runs_dir;
  std::filesystem::path gold_qrels;
  std::filesystem::path alt_qrels;
  std::filesystem::path output_dir;
  MetricSpec metric;
  std::uint64_t permutations = 100'000;
  double alpha = 0.05;
  double rbo_p = 0.07;
  std::size_t iterations = 50;
  bool undersample = false;
  std::uint64_t seed = 0;
  std::size_t target_size = 0;  // 0: gold topic count
  std::string dataset = "dataset";
  bool force = false;

  /// Throws UsageError on a missing path or an out-of-range parameter.
  void validate() const;
};

/// Applies `key = value` lines onto `base`. Blank lines and `#` comments are ignored.
/// Unknown keys and malformed values raise UsageError naming the line.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Applies a single setting; shared by the config file reader and the CLI.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);
/// Digest over the sorted (name, content digest) list of a run directory.
std::string sha256_directory(const std::filesystem::path& dir);

struct AuditOutcome {
  CollectionStats gold_stats;
  CollectionStats alt_stats;
  std::size_t gold_topics = 0;
  std::size_t alt_topics = 0;
  PValueTable gold_table;
  PValueTable alt_table;
  ConfusionRates rates;
  CorrelationReport correlation;
  DropReport drops;
  std::optional<ReplicateReport> replicates;
  std::vector<std::filesystem::path> files;
};

/// Runs the whole pipeline and writes every report into cfg.output_dir. Refuses to
/// overwrite reports produced from different inputs unless cfg.force is set.
AuditOutcome run_audit(const ExperimentConfig& cfg, WorkerPool& workers, Diagnostics* diag = nullptr);

}  // namespace sigaudit
