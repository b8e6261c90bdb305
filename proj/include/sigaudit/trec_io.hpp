#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sigaudit/errors.hpp"

namespace sigaudit {

// Topic and document identifiers compare as exact strings: "019" and "19" are distinct.
struct TopicId {
  std::string value;

  auto operator<=>(const TopicId&) const = default;
};

struct DocId {
  std::string value;

  auto operator<=>(const DocId&) const = default;
};

using Grade = int;

class Qrels {
 public:
  Qrels() = default;
  explicit Qrels(std::string name) : name_(std::move(name)) {}

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  /// Inserts a judgment; throws ValidationError when one already exists for (topic, doc).
  void add(const TopicId& topic, const DocId& doc, Grade grade);

  [[nodiscard]] std::optional<Grade> grade(const TopicId& topic, const DocId& doc) const;
  [[nodiscard]] bool contains(const TopicId& topic) const { return by_topic_.contains(topic); }

  /// Judgments of one topic; empty when the topic has none.
  [[nodiscard]] const std::map<DocId, Grade>& judgments(const TopicId& topic) const;

  /// Topics with at least one judgment, sorted.
  [[nodiscard]] std::vector<TopicId> topics() const;

  [[nodiscard]] std::size_t judgment_count() const noexcept { return total_; }
  [[nodiscard]] const std::map<TopicId, std::map<DocId, Grade>>& by_topic() const noexcept {
    return by_topic_;
  }

 private:
  std::string name_;
  std::map<TopicId, std::map<DocId, Grade>> by_topic_;
  std::size_t total_ = 0;
};

struct RankedEntry {
  DocId doc;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

/// A per-topic result list, kept in (score desc, docid desc) order.
class RankedList {
 public:
  RankedList() = default;
  /// Sorts the entries; throws ValidationError on a duplicate document.
  explicit RankedList(std::vector<RankedEntry> entries);

  [[nodiscard]] const std::vector<RankedEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  bool operator==(const RankedList&) const = default;

 private:
  std::vector<RankedEntry> entries_;
};

struct Run {
  std::string tag;
  std::map<TopicId, RankedList> lists;

  [[nodiscard]] const RankedList* find(const TopicId& topic) const;

  bool operator==(const Run&) const = default;
};

/// Runs sorted by tag; tags are unique.
class RunPool {
 public:
  RunPool() = default;
  explicit RunPool(std::vector<Run> runs);

  [[nodiscard]] const std::vector<Run>& runs() const noexcept { return runs_; }
  [[nodiscard]] std::size_t size() const noexcept { return runs_.size(); }
  [[nodiscard]] bool empty() const noexcept { return runs_.empty(); }
  [[nodiscard]] std::vector<std::string> tags() const;

 private:
  std::vector<Run> runs_;
};

struct CollectionStats {
  std::size_t run_count = 0;
  std::size_t pair_count = 0;
  std::size_t qrels_topics = 0;
  std::size_t topics_with_relevant = 0;
  double judgments_per_topic = 0.0;
  /// (run tag, number of qrels topics the run has no list for), in pool order.
  std::vector<std::pair<std::string, std::size_t>> missing_topics;
};

/// C(m, 2).
[[nodiscard]] constexpr std::size_t pair_count(std::size_t runs) noexcept {
  return runs < 2 ? 0 : runs * (runs - 1) / 2;
}

/// Reads `topic Q0 docid rank score tag` lines. The rank column is ignored.
Run parse_run(std::istream& in, const std::optional<std::string>& tag_override = std::nullopt);

/// Reads `topic iteration docid grade` lines. Negative grades clamp to 0 with a warning.
Qrels parse_qrels(std::istream& in, std::string name, Diagnostics* diag = nullptr);

Run read_run_file(const std::filesystem::path& path,
                  const std::optional<std::string>& tag_override = std::nullopt);
Qrels read_qrels_file(const std::filesystem::path& path, Diagnostics* diag = nullptr);

/// Loads every regular, non-hidden file in `dir` as one run.
RunPool read_run_directory(const std::filesystem::path& dir);

/// Writes a run in TREC format with ranks recomputed from list order.
void write_run(std::ostream& out, const Run& run);

/// A relevant document is one with grade >= relevance_threshold.
CollectionStats validate_collection(const RunPool& pool, const Qrels& qrels,
                                    Grade relevance_threshold = 1, Diagnostics* diag = nullptr);

}  // namespace sigaudit
