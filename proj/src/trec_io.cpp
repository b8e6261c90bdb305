#include "sigaudit/trec_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include <fmt/format.h>

namespace sigaudit {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

bool skippable(std::string_view line) {
  auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string_view::npos || line[pos] == '#';
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return in;
}

}  // namespace

void Qrels::add(const TopicId& topic, const DocId& doc, Grade grade) {
  auto& docs = by_topic_[topic];
  auto [it, inserted] = docs.emplace(doc, grade);
  if (!inserted) {
    throw ValidationError(
        fmt::format("duplicate judgment for topic {} document {}", topic.value, doc.value));
  }
  ++total_;
}

std::optional<Grade> Qrels::grade(const TopicId& topic, const DocId& doc) const {
  auto t = by_topic_.find(topic);
  if (t == by_topic_.end()) return std::nullopt;
  auto d = t->second.find(doc);
  if (d == t->second.end()) return std::nullopt;
  return d->second;
}

const std::map<DocId, Grade>& Qrels::judgments(const TopicId& topic) const {
  static const std::map<DocId, Grade> kEmpty;
  auto t = by_topic_.find(topic);
  return t == by_topic_.end() ? kEmpty : t->second;
}

std::vector<TopicId> Qrels::topics() const {
  std::vector<TopicId> out;
  out.reserve(by_topic_.size());
  for (const auto& [topic, docs] : by_topic_) {
    if (!docs.empty()) out.push_back(topic);
  }
  return out;
}

RankedList::RankedList(std::vector<RankedEntry> entries) : entries_(std::move(entries)) {
  // trec_eval ordering: score descending, then docid descending.
  std::sort(entries_.begin(), entries_.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc > b.doc;
  });
  // Equal docids with different scores are not adjacent after the sort.
  std::vector<const DocId*> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) ids.push_back(&e.doc);
  std::sort(ids.begin(), ids.end(), [](const DocId* a, const DocId* b) { return *a < *b; });
  auto dup = std::adjacent_find(ids.begin(), ids.end(),
                                [](const DocId* a, const DocId* b) { return *a == *b; });
  if (dup != ids.end()) throw ValidationError("duplicate document " + (*dup)->value + " in ranked list");
}

const RankedList* Run::find(const TopicId& topic) const {
  auto it = lists.find(topic);
  return it == lists.end() ? nullptr : &it->second;
}

RunPool::RunPool(std::vector<Run> runs) : runs_(std::move(runs)) {
  std::sort(runs_.begin(), runs_.end(),
            [](const Run& a, const Run& b) { return a.tag < b.tag; });
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    if (runs_[i].tag.empty()) throw ValidationError("run with empty tag");
    if (i > 0 && runs_[i].tag == runs_[i - 1].tag) {
      throw ValidationError("duplicate run tag " + runs_[i].tag);
    }
  }
}

std::vector<std::string> RunPool::tags() const {
  std::vector<std::string> out;
  out.reserve(runs_.size());
  for (const auto& r : runs_) out.push_back(r.tag);
  return out;
}

Run parse_run(std::istream& in, const std::optional<std::string>& tag_override) {
  std::map<TopicId, std::vector<RankedEntry>> entries;
  std::map<TopicId, std::set<DocId>> seen;
  std::optional<std::string> file_tag;
  std::string line;
  std::size_t lineno = 0;
  std::size_t records = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto f = split_fields(line);
    if (f.size() != 6) {
      throw ParseError(fmt::format("expected 6 fields in run line, found {}", f.size()), lineno);
    }
    auto score = to_double(f[4]);
    if (!score || !std::isfinite(*score)) {
      throw ParseError(fmt::format("invalid score '{}'", f[4]), lineno);
    }
    std::string tag(f[5]);
    if (file_tag && *file_tag != tag) {
      throw ParseError(fmt::format("mixed run tags '{}' and '{}'", *file_tag, tag), lineno);
    }
    file_tag = tag;

    TopicId topic{std::string(f[0])};
    DocId doc{std::string(f[2])};
    if (!seen[topic].insert(doc).second) {
      throw ValidationError(fmt::format("line {}: document {} retrieved twice for topic {}",
                                        lineno, doc.value, topic.value));
    }
    entries[topic].push_back(RankedEntry{std::move(doc), *score});
    ++records;
  }
  if (records == 0) throw ParseError("empty run file", 0);

  Run run;
  run.tag = tag_override ? *tag_override : *file_tag;
  if (run.tag.empty()) throw ValidationError("run tag must not be empty");
  for (auto& [topic, list] : entries) run.lists.emplace(topic, RankedList(std::move(list)));
  return run;
}

Qrels parse_qrels(std::istream& in, std::string name, Diagnostics* diag) {
  Qrels qrels(std::move(name));
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto f = split_fields(line);
    if (f.size() != 4) {
      throw ParseError(fmt::format("expected 4 fields in qrels line, found {}", f.size()), lineno);
    }
    auto grade = to_int(f[3]);
    if (!grade) throw ParseError(fmt::format("invalid grade '{}'", f[3]), lineno);
    if (*grade < 0) {
      if (diag) diag->warn(fmt::format("line {}: negative grade {} clamped to 0", lineno, *grade));
      grade = 0;
    }
    TopicId topic{std::string(f[0])};
    DocId doc{std::string(f[2])};
    if (auto existing = qrels.grade(topic, doc)) {
      if (*existing != *grade) {
        throw ValidationError(fmt::format(
            "line {}: conflicting grades {} and {} for topic {} document {}", lineno, *existing,
            *grade, topic.value, doc.value));
      }
      if (diag) {
        diag->warn(fmt::format("line {}: repeated judgment for topic {} document {}", lineno,
                               topic.value, doc.value));
      }
      continue;
    }
    qrels.add(topic, doc, *grade);
  }
  return qrels;
}

Run read_run_file(const std::filesystem::path& path, const std::optional<std::string>& tag_override) {
  auto in = open_input(path);
  try {
    return parse_run(in, tag_override);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Qrels read_qrels_file(const std::filesystem::path& path, Diagnostics* diag) {
  auto in = open_input(path);
  try {
    return parse_qrels(in, path.stem().string(), diag);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

RunPool read_run_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().starts_with('.')) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Run> runs;
  runs.reserve(files.size());
  for (const auto& f : files) runs.push_back(read_run_file(f));
  return RunPool(std::move(runs));
}

void write_run(std::ostream& out, const Run& run) {
  for (const auto& [topic, list] : run.lists) {
    std::size_t rank = 1;
    for (const auto& e : list.entries()) {
      out << fmt::format("{} Q0 {} {} {} {}\n", topic.value, e.doc.value, rank++, e.score, run.tag);
    }
  }
}

CollectionStats validate_collection(const RunPool& pool, const Qrels& qrels,
                                    Grade relevance_threshold, Diagnostics* diag) {
  if (pool.empty()) throw ValidationError("run pool is empty");
  if (pool.size() < 2) throw ValidationError("need at least 2 runs to form pairs");

  CollectionStats stats;
  stats.run_count = pool.size();
  stats.pair_count = pair_count(pool.size());

  const auto topics = qrels.topics();
  stats.qrels_topics = topics.size();
  for (const auto& t : topics) {
    const auto& docs = qrels.judgments(t);
    bool any = std::any_of(docs.begin(), docs.end(),
                           [&](const auto& kv) { return kv.second >= relevance_threshold; });
    if (any) ++stats.topics_with_relevant;
  }
  stats.judgments_per_topic =
      topics.empty() ? 0.0
                     : static_cast<double>(qrels.judgment_count()) / static_cast<double>(topics.size());

  for (const auto& run : pool.runs()) {
    std::size_t missing = 0;
    for (const auto& t : topics) {
      if (!run.find(t)) ++missing;
    }
    if (missing > 0 && diag) {
      diag->warn(fmt::format("run {} has no results for {} qrels topic(s); scored 0", run.tag,
                             missing));
    }
    stats.missing_topics.emplace_back(run.tag, missing);
  }
  return stats;
}

}  // namespace sigaudit
