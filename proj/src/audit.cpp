#include "sigaudit/audit.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "sigaudit/parallel.hpp"

namespace sigaudit {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw UsageError(fmt::format("invalid value '{}' for {}", value, key));
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError(fmt::format("invalid boolean '{}' for {}", value, key));
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialisation failed");
    }
  }

  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw std::runtime_error("SHA-256 update failed");
  }
  void update(std::string_view s) { update(s.data(), s.size()); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw std::runtime_error("SHA-256 final failed");
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

// Runs one pipeline stage, prefixing any failure with the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(fmt::format("{}: {}", name, e.what()));
  } catch (const std::exception& e) {
    throw ValidationError(fmt::format("{}: {}", name, e.what()));
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string pct_text(const std::optional<double>& v) {
  return v ? fmt::format("{:.0f}%", *v) : std::string("NA");
}

std::string corr_text(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("NA");
}

std::string provenance_text(const ExperimentConfig& cfg, const std::string& runs_digest,
                            const std::string& gold_digest, const std::string& alt_digest) {
  std::string s;
  s += fmt::format("tool = {}\n", kToolVersion);
  s += fmt::format("dataset = {}\n", cfg.dataset);
  s += fmt::format("runs = {}\n", cfg.runs_dir.string());
  s += fmt::format("gold_qrels = {}\n", cfg.gold_qrels.string());
  s += fmt::format("alt_qrels = {}\n", cfg.alt_qrels.string());
  s += fmt::format("metric = {}\n", cfg.metric.kind == MetricKind::AP ? "ap" : "ndcg");
  s += fmt::format("cutoff = {}\n", cfg.metric.cutoff);
  s += fmt::format("rel_threshold = {}\n", cfg.metric.relevance_threshold);
  s += fmt::format("gain = {}\n", cfg.metric.gain == GainKind::Linear ? "linear" : "exponential");
  s += fmt::format("permutations = {}\n", cfg.permutations);
  s += fmt::format("alpha = {}\n", cfg.alpha);
  s += fmt::format("rbo_p = {}\n", cfg.rbo_p);
  s += fmt::format("undersample = {}\n", cfg.undersample);
  s += fmt::format("iterations = {}\n", cfg.iterations);
  s += fmt::format("target_size = {}\n", cfg.target_size);
  s += fmt::format("seed = {}\n", cfg.seed);
  s += fmt::format("digest.runs = {}\n", runs_digest);
  s += fmt::format("digest.gold_qrels = {}\n", gold_digest);
  s += fmt::format("digest.alt_qrels = {}\n", alt_digest);
  return s;
}

std::map<std::string, std::string> digest_lines(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("digest.")) continue;
    auto eq = line.find('=');
    if (eq != std::string::npos) out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "runs" || key == "runs_dir") cfg.runs_dir = value;
  else if (key == "gold_qrels") cfg.gold_qrels = value;
  else if (key == "alt_qrels") cfg.alt_qrels = value;
  else if (key == "output" || key == "output_dir") cfg.output_dir = value;
  else if (key == "metric") cfg.metric.kind = parse_metric_kind(value);
  else if (key == "cutoff") cfg.metric.cutoff = parse_number<std::size_t>(key, value);
  else if (key == "rel_threshold") cfg.metric.relevance_threshold = parse_number<int>(key, value);
  else if (key == "gain") {
    if (value == "linear") cfg.metric.gain = GainKind::Linear;
    else if (value == "exponential") cfg.metric.gain = GainKind::Exponential;
    else throw UsageError(fmt::format("invalid gain '{}' (linear or exponential)", value));
  } else if (key == "permutations") cfg.permutations = parse_number<std::uint64_t>(key, value);
  else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
  else if (key == "rbo_p") cfg.rbo_p = parse_number<double>(key, value);
  else if (key == "iterations") cfg.iterations = parse_number<std::size_t>(key, value);
  else if (key == "undersample") cfg.undersample = parse_bool(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "target_size") cfg.target_size = parse_number<std::size_t>(key, value);
  else if (key == "dataset") cfg.dataset = value;
  else if (key == "force") cfg.force = parse_bool(key, value);
  else throw UsageError(fmt::format("unknown setting '{}'", key));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("config line {}: expected key = value", lineno));
    try {
      apply_setting(base, trim(std::string_view(text).substr(0, eq)),
                    trim(std::string_view(text).substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(fmt::format("config line {}: {}", lineno, e.what()));
    }
  }
  return base;
}

ExperimentConfig load_config_file(const fs::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

void ExperimentConfig::validate() const {
  metric.validate();
  if (runs_dir.empty()) throw UsageError("runs directory not set");
  if (!fs::is_directory(runs_dir)) throw UsageError("runs directory not found: " + runs_dir.string());
  for (const auto& [label, path] : {std::pair{"gold qrels", gold_qrels}, std::pair{"alt qrels", alt_qrels}}) {
    if (path.empty()) throw UsageError(fmt::format("{} not set", label));
    if (!fs::is_regular_file(path)) throw UsageError(fmt::format("{} not found: {}", label, path.string()));
  }
  if (output_dir.empty()) throw UsageError("output directory not set");
  if (permutations < 1) throw UsageError("permutations must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (!(rbo_p > 0.0 && rbo_p < 1.0)) throw UsageError("rbo_p must lie in (0, 1)");
  if (undersample && iterations < 1) throw UsageError("iterations must be >= 1");
  if (dataset.empty() || dataset.find(',') != std::string::npos) {
    throw UsageError("dataset label must be non-empty and contain no commas");
  }
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && !entry.path().filename().string().starts_with('.')) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  Sha256 h;
  for (const auto& f : files) h.update(fmt::format("{} {}\n", f.filename().string(), sha256_file(f)));
  return h.hex();
}

AuditOutcome run_audit(const ExperimentConfig& cfg, WorkerPool& workers, Diagnostics* diag) {
  cfg.validate();
  AuditOutcome out;

  const auto runs_digest = sha256_directory(cfg.runs_dir);
  const auto gold_digest = sha256_file(cfg.gold_qrels);
  const auto alt_digest = sha256_file(cfg.alt_qrels);
  const auto provenance = provenance_text(cfg, runs_digest, gold_digest, alt_digest);

  const fs::path prov_path = cfg.output_dir / "provenance.txt";
  if (fs::exists(prov_path) && !cfg.force) {
    std::ifstream old(prov_path);
    std::istringstream now(provenance);
    if (digest_lines(old) != digest_lines(now)) {
      throw ValidationError("output directory " + cfg.output_dir.string() +
                            " holds reports from different inputs; rerun with --force to overwrite");
    }
  }
  fs::create_directories(cfg.output_dir);

  auto write = [&](const std::string& name, auto&& body) {
    const fs::path p = cfg.output_dir / name;
    auto f = open_output(p);
    body(f);
    out.files.push_back(p);
  };

  const auto pool = stage("load runs", [&] { return read_run_directory(cfg.runs_dir); });
  const auto gold_qrels = stage("load gold qrels", [&] { return read_qrels_file(cfg.gold_qrels, diag); });
  const auto alt_qrels = stage("load alternative qrels", [&] { return read_qrels_file(cfg.alt_qrels, diag); });

  const Grade rel = cfg.metric.kind == MetricKind::AP ? cfg.metric.relevance_threshold : 1;
  out.gold_stats = stage("validate", [&] { return validate_collection(pool, gold_qrels, rel, diag); });
  out.alt_stats = stage("validate", [&] { return validate_collection(pool, alt_qrels, rel, diag); });

  const auto gold_matrix = stage("score gold", [&] {
    return build_score_matrix(pool, gold_qrels, cfg.metric, std::nullopt, diag, &workers);
  });
  const auto alt_matrix = stage("score alternative", [&] {
    return build_score_matrix(pool, alt_qrels, cfg.metric, std::nullopt, diag, &workers);
  });
  out.gold_topics = gold_matrix.topics();
  out.alt_topics = alt_matrix.topics();

  // Both sides share one Tukey seed: identical score matrices give identical p-values.
  const auto tukey_seed = stage_seed(cfg.seed, "tukey");
  out.gold_table = stage("tukey gold", [&] {
    return randomized_tukey_hsd(gold_matrix, cfg.permutations, tukey_seed, &workers);
  });
  out.alt_table = stage("tukey alternative", [&] {
    return randomized_tukey_hsd(alt_matrix, cfg.permutations, tukey_seed, &workers);
  });
  out.gold_table.alpha_hint = cfg.alpha;
  out.alt_table.alpha_hint = cfg.alpha;

  const auto gold_sig = significant_set(out.gold_table, cfg.alpha);
  const auto alt_sig = significant_set(out.alt_table, cfg.alpha);
  out.rates = stage("agreement", [&] { return confusion_rates(classify_pairs(gold_sig, alt_sig)); });
  out.correlation = stage("correlation", [&] { return correlate(out.gold_table, out.alt_table, cfg.rbo_p); });
  out.drops = stage("drops", [&] { return per_run_drops(gold_sig, alt_sig); });

  if (cfg.undersample) {
    out.replicates = stage("undersampling", [&] {
      ReplicateConfig rc;
      rc.iterations = cfg.iterations;
      rc.seed = cfg.seed;
      rc.target_size = cfg.target_size == 0 ? gold_matrix.topics() : cfg.target_size;
      return run_replicates(pool, out.gold_table, alt_qrels, cfg.metric, rc,
                            PipelineParams{cfg.permutations, cfg.alpha, cfg.rbo_p}, &workers);
    });
  }

  const std::string metric = cfg.metric.label();
  const std::string undersampled = cfg.dataset + ":undersampled";

  stage("write reports", [&] {
    write("collection.csv", [&](std::ostream& f) {
      f << "qrels,runs,pairs,topics,topics_with_relevant,scored_topics,judgments_per_topic\n";
      f << fmt::format("gold,{},{},{},{},{},{:.10g}\n", out.gold_stats.run_count,
                       out.gold_stats.pair_count, out.gold_stats.qrels_topics,
                       out.gold_stats.topics_with_relevant, out.gold_topics,
                       out.gold_stats.judgments_per_topic);
      f << fmt::format("alternative,{},{},{},{},{},{:.10g}\n", out.alt_stats.run_count,
                       out.alt_stats.pair_count, out.alt_stats.qrels_topics,
                       out.alt_stats.topics_with_relevant, out.alt_topics,
                       out.alt_stats.judgments_per_topic);
    });
    write("scores_gold.csv", [&](std::ostream& f) { write_score_matrix(f, gold_matrix); });
    write("scores_alt.csv", [&](std::ostream& f) { write_score_matrix(f, alt_matrix); });
    write("pvalues_gold.csv", [&](std::ostream& f) { write_pvalue_table(f, out.gold_table); });
    write("pvalues_alt.csv", [&](std::ostream& f) { write_pvalue_table(f, out.alt_table); });
    write("agreement.csv", [&](std::ostream& f) {
      write_agreement_header(f);
      write_agreement_row(f, cfg.dataset, metric, out.rates);
      if (out.replicates) {
        write_agreement_row(f, undersampled, metric, out.replicates->mean_rates(),
                            out.replicates->gold_positive, out.replicates->gold_negative);
      }
    });
    write("correlation.csv", [&](std::ostream& f) {
      write_correlation_header(f);
      write_correlation_row(f, cfg.dataset, metric, out.correlation.kendall_tau,
                            out.correlation.rbo, cfg.rbo_p);
      if (out.replicates) {
        write_correlation_row(f, undersampled, metric, out.replicates->tau.mean,
                              out.replicates->rbo.mean, cfg.rbo_p);
      }
    });
    write("drops.csv", [&](std::ostream& f) { write_drops(f, out.drops); });
    write("drops_summary.csv", [&](std::ostream& f) {
      write_drop_summary_header(f);
      write_drop_summary_row(f, cfg.dataset, metric, out.drops.summary);
      if (out.replicates) {
        write_drop_summary_row(f, undersampled, metric, out.replicates->mean_drops.summary);
      }
    });
    if (out.replicates) {
      write("replicates.csv", [&](std::ostream& f) { write_replicates(f, *out.replicates); });
      write("drops_undersampled.csv", [&](std::ostream& f) { write_drops(f, out.replicates->mean_drops); });
    }

    write("summary.txt", [&](std::ostream& f) {
      f << fmt::format("Significance agreement audit: {} ({})\n\n", cfg.dataset, metric);
      f << fmt::format("Runs: {}   Pairs: {}\n", out.gold_stats.run_count, out.gold_stats.pair_count);
      f << fmt::format("Gold topics scored: {}   Alternative topics scored: {}\n",
                       out.gold_topics, out.alt_topics);
      f << fmt::format("Permutations: {}   alpha: {}   seed: {}\n\n", cfg.permutations, cfg.alpha,
                       cfg.seed);

      auto rates_block = [&](const char* title, const RatePercentages& p, std::size_t pos,
                             std::size_t neg) {
        f << title << '\n';
        f << fmt::format("  TP {:>5}   FN {:>5}\n", pct_text(p.tp), pct_text(p.fn));
        f << fmt::format("  TN {:>5}   FP {:>5}\n", pct_text(p.tn), pct_text(p.fp));
        f << fmt::format("  gold significant pairs: {}   gold non-significant pairs: {}\n\n", pos, neg);
      };
      auto corr_block = [&](const std::optional<double>& tau, const std::optional<double>& r) {
        f << fmt::format("  Kendall's tau {}   RBO (p = {}) {}\n\n", corr_text(tau), cfg.rbo_p,
                         corr_text(r));
      };
      auto drop_block = [&](const DistributionSummary& s) {
        f << fmt::format("  per-run drops: min {:.2f}  q1 {:.2f}  median {:.2f}  q3 {:.2f}  max {:.2f}  mean {:.2f}\n\n",
                         s.min, s.q1, s.median, s.q3, s.max, s.mean);
      };

      rates_block("Full topic sets", out.rates.percentages(), out.rates.gold_positive(),
                  out.rates.gold_negative());
      f << "Correlation of p-value rankings (full topic sets)\n";
      corr_block(out.correlation.kendall_tau, out.correlation.rbo);
      f << "Drops (full topic sets, drops.csv)\n";
      drop_block(out.drops.summary);

      if (out.replicates) {
        const auto& rep = *out.replicates;
        const auto title = fmt::format("Undersampled alternative topics ({} iterations, {} topics each)",
                                       rep.per_iteration.size(),
                                       rep.per_iteration.front().topics.size());
        rates_block(title.c_str(), rep.mean_rates(), rep.gold_positive, rep.gold_negative);
        f << "Correlation of p-value rankings (undersampled means)\n";
        corr_block(rep.tau.mean, rep.rbo.mean);
        f << "Drops (undersampled, per-run means, drops_undersampled.csv)\n";
        drop_block(rep.mean_drops.summary);
      }
    });
    write("provenance.txt", [&](std::ostream& f) { f << provenance; });
    return 0;
  });
  return out;
}

}  // namespace sigaudit
