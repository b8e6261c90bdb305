// Command-line front end: one subcommand per pipeline stage plus `audit` for the whole run.
//
// Exit codes: 0 success, 1 pipeline or validation failure, 2 usage or configuration error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sigaudit/agreement.hpp"
#include "sigaudit/audit.hpp"
#include "sigaudit/fairness.hpp"
#include "sigaudit/metrics.hpp"
#include "sigaudit/parallel.hpp"
#include "sigaudit/rank_corr.hpp"
#include "sigaudit/significance.hpp"
#include "sigaudit/trec_io.hpp"

namespace {

using namespace sigaudit;
namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::ifstream open_in(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("file not found: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  return in;
}

// Writes to `path`, or stdout when empty or "-".
template <typename Fn>
void emit(const std::string& path, Fn&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  body(out);
}

void print_warnings(const Diagnostics& diag) {
  for (const auto& w : diag.warnings()) std::cerr << "warning: " << w << '\n';
}

std::vector<TopicId> read_topic_list(const std::string& path) {
  auto in = open_in(path);
  std::vector<TopicId> topics;
  std::string tok;
  while (in >> tok) topics.push_back(TopicId{tok});
  return topics;
}

struct ScoreArgs {
  std::string runs;
  std::string qrels;
  std::string metric = "ap";
  std::size_t cutoff = 1000;
  int rel_threshold = 2;
  std::string gain = "linear";
  std::string topics;
  std::string out;
};

struct TukeyArgs {
  std::string scores;
  std::uint64_t permutations = 100'000;
  std::uint64_t seed = 0;
  std::string metric = "unknown";
  std::string qrels;
  std::string out;
};

struct CompareArgs {
  std::string gold;
  std::string alt;
  double alpha = 0.05;
  double rbo_p = 0.07;
  std::string dataset = "dataset";
  std::string metric = "unknown";
  std::string out;
  std::string pairs_out;
  std::string summary_out;
};

int cmd_score(const ScoreArgs& a, WorkerPool& workers) {
  MetricSpec spec;
  spec.kind = parse_metric_kind(a.metric);
  spec.cutoff = a.cutoff;
  spec.relevance_threshold = a.rel_threshold;
  if (a.gain == "exponential") spec.gain = GainKind::Exponential;
  else if (a.gain != "linear") throw UsageError("--gain must be linear or exponential");
  spec.validate();

  Diagnostics diag;
  const auto pool = read_run_directory(a.runs);
  const auto qrels = read_qrels_file(a.qrels, &diag);
  std::optional<std::vector<TopicId>> topics;
  if (!a.topics.empty()) topics = read_topic_list(a.topics);
  const Grade rel = spec.kind == MetricKind::AP ? spec.relevance_threshold : 1;
  if (pool.size() >= 2) validate_collection(pool, qrels, rel, &diag);
  const auto matrix = build_score_matrix(pool, qrels, spec, topics, &diag, &workers);
  print_warnings(diag);
  emit(a.out, [&](std::ostream& o) { write_score_matrix(o, matrix); });
  return 0;
}

int cmd_tukey(const TukeyArgs& a, WorkerPool& workers) {
  auto in = open_in(a.scores);
  const auto qrels_name = a.qrels.empty() ? fs::path(a.scores).stem().string() : a.qrels;
  const auto matrix = read_score_matrix(in, MetricSpec{}, qrels_name);
  auto table = randomized_tukey_hsd(matrix, a.permutations, a.seed, &workers);
  table.metric = a.metric;
  emit(a.out, [&](std::ostream& o) { write_pvalue_table(o, table); });
  return 0;
}

std::pair<PValueTable, PValueTable> load_pair(const CompareArgs& a) {
  auto g = open_in(a.gold);
  auto l = open_in(a.alt);
  auto gold = read_pvalue_table(g);
  auto alt = read_pvalue_table(l);
  require_same_pool(gold.run_tags, alt.run_tags);
  return {std::move(gold), std::move(alt)};
}

int cmd_agree(const CompareArgs& a) {
  const auto [gold, alt] = load_pair(a);
  const auto classes = classify_pairs(significant_set(gold, a.alpha), significant_set(alt, a.alpha));
  const auto rates = confusion_rates(classes);
  emit(a.out, [&](std::ostream& o) {
    write_agreement_header(o);
    write_agreement_row(o, a.dataset, a.metric, rates);
  });
  if (!a.pairs_out.empty()) {
    emit(a.pairs_out, [&](std::ostream& o) {
      o << "run_a,run_b,gold_p,alt_p,label\n";
      for (const auto& c : classes) {
        o << fmt::format("{},{},{},{},{}\n", gold.run_tags[c.pair.a], gold.run_tags[c.pair.b],
                         gold.p(c.pair), alt.p(c.pair), to_string(c.label));
      }
    });
  }
  return 0;
}

int cmd_corr(const CompareArgs& a) {
  const auto [gold, alt] = load_pair(a);
  const auto report = correlate(gold, alt, a.rbo_p);
  emit(a.out, [&](std::ostream& o) {
    write_correlation_header(o);
    write_correlation_row(o, a.dataset, a.metric, report.kendall_tau, report.rbo, report.rbo_p);
  });
  return 0;
}

int cmd_drops(const CompareArgs& a) {
  const auto [gold, alt] = load_pair(a);
  const auto report = per_run_drops(significant_set(gold, a.alpha), significant_set(alt, a.alpha));
  emit(a.out, [&](std::ostream& o) { write_drops(o, report); });
  if (!a.summary_out.empty()) {
    emit(a.summary_out, [&](std::ostream& o) {
      write_drop_summary_header(o);
      write_drop_summary_row(o, a.dataset, a.metric, report.summary);
    });
  }
  return 0;
}

int cmd_audit(const std::string& config_path, const std::map<std::string, std::optional<std::string>>& flags,
              WorkerPool& workers) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  for (const auto& [key, value] : flags) {
    if (value) apply_setting(cfg, key, *value);
  }
  Diagnostics diag;
  const auto outcome = run_audit(cfg, workers, &diag);
  print_warnings(diag);
  std::cerr << fmt::format("{} pairs; wrote {} files to {}\n", outcome.gold_stats.pair_count,
                           outcome.files.size(), cfg.output_dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit whether alternative relevance judgments preserve pairwise significance decisions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  std::size_t worker_count = default_worker_count();
  app.add_option("-j,--workers", worker_count,
                 fmt::format("Worker threads (default: ${} or machine parallelism)", kWorkersEnv))
      ->check(CLI::PositiveNumber);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score runs against qrels into a run x topic CSV");
  score_cmd->add_option("--runs", score.runs, "Directory of TREC run files")->required();
  score_cmd->add_option("--qrels", score.qrels, "TREC qrels file")->required();
  score_cmd->add_option("--metric", score.metric, "ap or ndcg")->capture_default_str();
  score_cmd->add_option("--cutoff", score.cutoff, "Evaluation depth")->capture_default_str();
  score_cmd->add_option("--rel-threshold", score.rel_threshold, "Minimum grade counted relevant by AP")
      ->capture_default_str();
  score_cmd->add_option("--gain", score.gain, "NDCG gain: linear or exponential")->capture_default_str();
  score_cmd->add_option("--topics", score.topics, "File listing the topics to score");
  score_cmd->add_option("-o,--out", score.out, "Output CSV (default stdout)");

  TukeyArgs tukey;
  auto* tukey_cmd = app.add_subcommand("tukey", "Randomized Tukey HSD p-values for every run pair");
  tukey_cmd->add_option("--scores", tukey.scores, "Score matrix CSV")->required();
  tukey_cmd->add_option("--permutations", tukey.permutations)->capture_default_str();
  tukey_cmd->add_option("--seed", tukey.seed)->capture_default_str();
  tukey_cmd->add_option("--metric", tukey.metric, "Metric label recorded in the header");
  tukey_cmd->add_option("--qrels-name", tukey.qrels, "Qrels label recorded in the header");
  tukey_cmd->add_option("-o,--out", tukey.out, "Output CSV (default stdout)");

  auto add_compare = [&](CLI::App* cmd, CompareArgs& args) {
    cmd->add_option("--gold", args.gold, "Gold p-value CSV")->required();
    cmd->add_option("--alt", args.alt, "Alternative p-value CSV")->required();
    cmd->add_option("--dataset", args.dataset, "Dataset label for report rows")->capture_default_str();
    cmd->add_option("--metric", args.metric, "Metric label for report rows")->capture_default_str();
    cmd->add_option("-o,--out", args.out, "Output CSV (default stdout)");
  };

  CompareArgs agree, corr, drops;
  auto* agree_cmd = app.add_subcommand("agree", "TP/FN/TN/FP rates of alternative vs gold decisions");
  add_compare(agree_cmd, agree);
  agree_cmd->add_option("--alpha", agree.alpha)->capture_default_str();
  agree_cmd->add_option("--pairs", agree.pairs_out, "Also write per-pair labels to this CSV");

  auto* corr_cmd = app.add_subcommand("corr", "Kendall tau-b and RBO between p-value rankings of pairs");
  add_compare(corr_cmd, corr);
  corr_cmd->add_option("--rbo-p", corr.rbo_p, "RBO persistence")->capture_default_str();

  auto* drops_cmd = app.add_subcommand("drops", "Per-run significant differences lost under the alternative");
  add_compare(drops_cmd, drops);
  drops_cmd->add_option("--alpha", drops.alpha)->capture_default_str();
  drops_cmd->add_option("--summary", drops.summary_out, "Also write the distribution summary CSV");

  auto* audit_cmd = app.add_subcommand("audit", "Run the full pipeline and write every report");
  std::string config_path;
  audit_cmd->add_option("--config", config_path, "Flat key = value config file; flags override it");
  std::map<std::string, std::optional<std::string>> audit_flags;
  struct AuditOption {
    const char* flag;
    const char* key;
    const char* help;
  };
  const std::vector<AuditOption> audit_options = {
      {"--runs", "runs", "Directory of run files"},
      {"--gold-qrels", "gold_qrels", "Reference qrels"},
      {"--alt-qrels", "alt_qrels", "Alternative qrels under audit"},
      {"-o,--output", "output", "Output directory"},
      {"--metric", "metric", "ap or ndcg (default ap)"},
      {"--cutoff", "cutoff", "Rank cutoff (default 1000)"},
      {"--rel-threshold", "rel_threshold", "Minimum relevant grade for AP (default 2)"},
      {"--gain", "gain", "NDCG gain: linear or exponential"},
      {"--permutations", "permutations", "Tukey HSD permutations (default 100000)"},
      {"--alpha", "alpha", "Significance level (default 0.05)"},
      {"--rbo-p", "rbo_p", "RBO persistence (default 0.07)"},
      {"--iterations", "iterations", "Undersampling iterations (default 50)"},
      {"--seed", "seed", "Master seed (default 0)"},
      {"--target-size", "target_size", "Topics per undersample (default: gold topic count)"},
      {"--dataset", "dataset", "Dataset label written into report rows"},
  };
  for (const auto& o : audit_options) {
    audit_cmd->add_option(o.flag, audit_flags[o.key], o.help);
  }
  bool undersample = false;
  bool force = false;
  audit_cmd->add_flag("--undersample", undersample, "Also run the undersampled replicate analysis");
  audit_cmd->add_flag("--force", force, "Overwrite reports produced from different inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    WorkerPool workers(worker_count);
    if (score_cmd->parsed()) return cmd_score(score, workers);
    if (tukey_cmd->parsed()) {
      if (tukey.permutations < 1) throw UsageError("--permutations must be >= 1");
      return cmd_tukey(tukey, workers);
    }
    if (agree_cmd->parsed()) return cmd_agree(agree);
    if (corr_cmd->parsed()) return cmd_corr(corr);
    if (drops_cmd->parsed()) return cmd_drops(drops);
    if (audit_cmd->parsed()) {
      if (undersample) audit_flags["undersample"] = "true";
      if (force) audit_flags["force"] = "true";
      return cmd_audit(config_path, audit_flags, workers);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
