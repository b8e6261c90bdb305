#include "sigaudit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>

#include <fmt/format.h>

#include "sigaudit/parallel.hpp"

namespace sigaudit {

namespace {

double gain_of(Grade g, GainKind kind) {
  if (g <= 0) return 0.0;
  return kind == GainKind::Linear ? static_cast<double>(g) : std::exp2(static_cast<double>(g)) - 1.0;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void MetricSpec::validate() const {
  if (cutoff < 1) throw UsageError("metric cutoff must be >= 1");
  if (relevance_threshold < 1) throw UsageError("relevance threshold must be >= 1");
}

std::string MetricSpec::label() const {
  return fmt::format("{}@{}", kind == MetricKind::AP ? "ap" : "ndcg", cutoff);
}

MetricKind parse_metric_kind(std::string_view name) {
  if (name == "ap" || name == "AP" || name == "map") return MetricKind::AP;
  if (name == "ndcg" || name == "NDCG") return MetricKind::NDCG;
  throw UsageError(fmt::format("unknown metric '{}' (expected ap or ndcg)", name));
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> run_tags, std::vector<TopicId> topics,
                         std::vector<double> values, MetricSpec metric, std::string qrels_name)
    : run_tags_(std::move(run_tags)),
      topic_ids_(std::move(topics)),
      values_(std::move(values)),
      metric_(metric),
      qrels_name_(std::move(qrels_name)) {
  if (values_.size() != run_tags_.size() * topic_ids_.size()) {
    throw ValidationError(fmt::format("score matrix shape mismatch: {} values for {}x{}",
                                      values_.size(), run_tags_.size(), topic_ids_.size()));
  }
}

ScoreMatrix ScoreMatrix::select_topics(std::span<const TopicId> keep) const {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < topic_ids_.size(); ++c) {
    if (std::find(keep.begin(), keep.end(), topic_ids_[c]) != keep.end()) cols.push_back(c);
  }
  if (cols.size() != keep.size()) throw ValidationError("topic subset not contained in score matrix");
  std::vector<TopicId> topics;
  for (auto c : cols) topics.push_back(topic_ids_[c]);
  std::vector<double> values;
  values.reserve(runs() * cols.size());
  for (std::size_t r = 0; r < runs(); ++r) {
    for (auto c : cols) values.push_back(at(r, c));
  }
  return ScoreMatrix(run_tags_, std::move(topics), std::move(values), metric_, qrels_name_);
}

Qrels binarize(const Qrels& qrels, Grade threshold) {
  Qrels out(fmt::format("{}>={}", qrels.name(), threshold));
  for (const auto& [topic, docs] : qrels.by_topic()) {
    for (const auto& [doc, grade] : docs) out.add(topic, doc, grade >= threshold ? 1 : 0);
  }
  return out;
}

double average_precision(const RankedList& list, const Qrels& qrels, const TopicId& topic,
                         std::size_t cutoff) {
  const auto& judged = qrels.judgments(topic);
  const auto relevant = std::count_if(judged.begin(), judged.end(),
                                      [](const auto& kv) { return kv.second > 0; });
  if (relevant == 0) throw ValidationError("average precision undefined: topic " + topic.value +
                                           " has no relevant documents");

  const auto& entries = list.entries();
  const std::size_t depth = std::min(cutoff, entries.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = judged.find(entries[i].doc);
    if (it != judged.end() && it->second > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

double ndcg_at_k(const RankedList& list, const Qrels& qrels, const TopicId& topic, std::size_t k,
                 GainKind gain) {
  const auto& judged = qrels.judgments(topic);
  std::vector<Grade> ideal;
  ideal.reserve(judged.size());
  for (const auto& [doc, g] : judged) {
    if (g > 0) ideal.push_back(g);
  }
  if (ideal.empty()) throw ValidationError("NDCG undefined: topic " + topic.value +
                                           " has no positively graded documents");
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }

  const auto& entries = list.entries();
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, entries.size()); ++i) {
    auto it = judged.find(entries[i].doc);
    if (it == judged.end()) continue;
    dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

std::vector<TopicId> scorable_topics(const Qrels& qrels, const MetricSpec& spec) {
  const Grade threshold = spec.kind == MetricKind::AP ? spec.relevance_threshold : 1;
  std::vector<TopicId> out;
  for (const auto& [topic, docs] : qrels.by_topic()) {
    if (std::any_of(docs.begin(), docs.end(),
                    [&](const auto& kv) { return kv.second >= threshold; })) {
      out.push_back(topic);
    }
  }
  return out;
}

ScoreMatrix build_score_matrix(const RunPool& pool, const Qrels& qrels, const MetricSpec& spec,
                               const std::optional<std::vector<TopicId>>& topics,
                               Diagnostics* diag, WorkerPool* workers) {
  spec.validate();
  if (pool.empty()) throw ValidationError("run pool is empty");

  std::vector<TopicId> requested;
  if (topics) {
    requested = *topics;
    std::sort(requested.begin(), requested.end());
    requested.erase(std::unique(requested.begin(), requested.end()), requested.end());
    for (const auto& t : requested) {
      if (!qrels.contains(t)) {
        throw ValidationError("topic " + t.value + " is not judged in qrels " + qrels.name());
      }
    }
  } else {
    requested = qrels.topics();
  }

  const auto scorable = scorable_topics(qrels, spec);
  std::vector<TopicId> columns;
  for (const auto& t : requested) {
    if (std::binary_search(scorable.begin(), scorable.end(), t)) {
      columns.push_back(t);
    } else if (diag) {
      diag->warn(fmt::format("topic {} has no relevant documents in {}; excluded", t.value,
                             qrels.name()));
    }
  }
  if (columns.empty()) {
    throw ValidationError("no scorable topics remain for qrels " + qrels.name());
  }

  const Qrels binary = spec.kind == MetricKind::AP ? binarize(qrels, spec.relevance_threshold)
                                                   : Qrels{};
  const Qrels& judged = spec.kind == MetricKind::AP ? binary : qrels;

  const std::size_t m = pool.size();
  const std::size_t n = columns.size();
  std::vector<double> values(m * n, 0.0);
  const RankedList empty;

  auto score_row = [&](std::size_t r) {
    const Run& run = pool.runs()[r];
    for (std::size_t c = 0; c < n; ++c) {
      const RankedList* list = run.find(columns[c]);
      if (!list) list = &empty;
      values[r * n + c] = spec.kind == MetricKind::AP
                              ? average_precision(*list, judged, columns[c], spec.cutoff)
                              : ndcg_at_k(*list, judged, columns[c], spec.cutoff, spec.gain);
    }
  };
  if (workers) {
    workers->for_each(m, score_row);
  } else {
    for (std::size_t r = 0; r < m; ++r) score_row(r);
  }

  return ScoreMatrix(pool.tags(), std::move(columns), std::move(values), spec, qrels.name());
}

void write_score_matrix(std::ostream& out, const ScoreMatrix& matrix) {
  out << "run";
  for (const auto& t : matrix.topic_ids()) out << ',' << t.value;
  out << '\n';
  for (std::size_t r = 0; r < matrix.runs(); ++r) {
    out << matrix.run_tags()[r];
    for (double v : matrix.row(r)) out << fmt::format(",{:.10g}", v);
    out << '\n';
  }
}

ScoreMatrix read_score_matrix(std::istream& in, MetricSpec metric, std::string qrels_name) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<TopicId> topics;
  bool have_header = false;
  std::vector<std::string> tags;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split_csv(line);
    if (!have_header) {
      if (cells.empty() || cells[0] != "run" || cells.size() < 2) {
        throw ParseError("score CSV header must be run,<topic>,...", lineno);
      }
      for (std::size_t i = 1; i < cells.size(); ++i) topics.push_back(TopicId{std::string(cells[i])});
      have_header = true;
      continue;
    }
    if (cells.size() != topics.size() + 1) {
      throw ParseError(fmt::format("expected {} cells, found {}", topics.size() + 1, cells.size()),
                       lineno);
    }
    tags.emplace_back(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double v = 0.0;
      auto s = cells[i];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(fmt::format("invalid score '{}'", s), lineno);
      }
      values.push_back(v);
    }
  }
  if (!have_header) throw ParseError("empty score CSV", 0);
  if (tags.empty()) throw ParseError("score CSV has no runs", 0);
  return ScoreMatrix(std::move(tags), std::move(topics), std::move(values), metric,
                     std::move(qrels_name));
}

}  // namespace sigaudit
