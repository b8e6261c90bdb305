#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sigaudit/errors.hpp"
#include "sigaudit/trec_io.hpp"

namespace sigaudit {

class WorkerPool;

enum class MetricKind { AP, NDCG };
enum class GainKind { Linear, Exponential };

struct MetricSpec {
  MetricKind kind = MetricKind::AP;
  std::size_t cutoff = 1000;
  Grade relevance_threshold = 2;  // AP binarization; TREC DL convention
  GainKind gain = GainKind::Linear;  // NDCG only

  /// Throws UsageError unless cutoff >= 1 and relevance_threshold >= 1.
  void validate() const;
  /// Short label such as "ap@1000" or "ndcg@10".
  [[nodiscard]] std::string label() const;
};

MetricKind parse_metric_kind(std::string_view name);

/// Run-by-topic effectiveness scores, row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> run_tags, std::vector<TopicId> topics,
              std::vector<double> values, MetricSpec metric = {}, std::string qrels_name = {});

  [[nodiscard]] std::size_t runs() const noexcept { return run_tags_.size(); }
  [[nodiscard]] std::size_t topics() const noexcept { return topic_ids_.size(); }
  [[nodiscard]] const std::vector<std::string>& run_tags() const noexcept { return run_tags_; }
  [[nodiscard]] const std::vector<TopicId>& topic_ids() const noexcept { return topic_ids_; }
  [[nodiscard]] const MetricSpec& metric() const noexcept { return metric_; }
  [[nodiscard]] const std::string& qrels_name() const noexcept { return qrels_name_; }

  [[nodiscard]] double at(std::size_t run, std::size_t topic) const {
    return values_[run * topic_ids_.size() + topic];
  }
  [[nodiscard]] std::span<const double> row(std::size_t run) const {
    return {values_.data() + run * topic_ids_.size(), topic_ids_.size()};
  }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  /// Columns restricted to `keep` (which must be a subset of topic_ids), in matrix order.
  [[nodiscard]] ScoreMatrix select_topics(std::span<const TopicId> keep) const;

  bool operator==(const ScoreMatrix& other) const {
    return run_tags_ == other.run_tags_ && topic_ids_ == other.topic_ids_ &&
           values_ == other.values_;
  }

 private:
  std::vector<std::string> run_tags_;
  std::vector<TopicId> topic_ids_;
  std::vector<double> values_;
  MetricSpec metric_;
  std::string qrels_name_;
};

/// grade >= threshold becomes 1, anything else 0.
Qrels binarize(const Qrels& qrels, Grade threshold);

/// AP over the top `cutoff` entries with binary `qrels`. Unjudged documents are non-relevant.
double average_precision(const RankedList& list, const Qrels& qrels, const TopicId& topic,
                         std::size_t cutoff);

double ndcg_at_k(const RankedList& list, const Qrels& qrels, const TopicId& topic, std::size_t k,
                 GainKind gain = GainKind::Linear);

/// Topics of `qrels` the metric can score: at least one grade >= threshold for AP, any
/// positive grade for NDCG.
std::vector<TopicId> scorable_topics(const Qrels& qrels, const MetricSpec& spec);

/// Scores every run on the scorable topics (optionally intersected with `topics`).
/// Rows follow pool order, columns sorted topic order.
ScoreMatrix build_score_matrix(const RunPool& pool, const Qrels& qrels, const MetricSpec& spec,
                               const std::optional<std::vector<TopicId>>& topics = std::nullopt,
                               Diagnostics* diag = nullptr, WorkerPool* workers = nullptr);

/// CSV: `run,<topic1>,...` header, one row per run, 10 significant digits.
void write_score_matrix(std::ostream& out, const ScoreMatrix& matrix);
ScoreMatrix read_score_matrix(std::istream& in, MetricSpec metric = {}, std::string qrels_name = {});

}  // namespace sigaudit
