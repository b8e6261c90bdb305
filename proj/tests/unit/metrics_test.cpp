#include "sigaudit/metrics.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "../support/oracles.hpp"
#include "sigaudit/parallel.hpp"

namespace sigaudit {
namespace {

// Builds a ranked list whose i-th document is "d<i>" with descending scores.
RankedList ranked(std::size_t n, const std::string& prefix = "d") {
  std::vector<RankedEntry> e;
  for (std::size_t i = 0; i < n; ++i) {
    e.push_back({DocId{prefix + std::to_string(i)}, static_cast<double>(n - i)});
  }
  return RankedList(std::move(e));
}

Qrels grades_for(const TopicId& t, const std::vector<int>& grades, const std::string& prefix = "d") {
  Qrels q("q");
  for (std::size_t i = 0; i < grades.size(); ++i) q.add(t, DocId{prefix + std::to_string(i)}, grades[i]);
  return q;
}

const TopicId kTopic{"1"};

TEST(Binarize, Threshold) {
  auto q = grades_for(kTopic, {0, 1, 2, 3});
  auto b = binarize(q, 2);
  EXPECT_EQ(b.grade(kTopic, DocId{"d0"}), 0);
  EXPECT_EQ(b.grade(kTopic, DocId{"d1"}), 0);
  EXPECT_EQ(b.grade(kTopic, DocId{"d2"}), 1);
  EXPECT_EQ(b.grade(kTopic, DocId{"d3"}), 1);
  EXPECT_NE(b.name().find("2"), std::string::npos);

  auto b1 = binarize(q, 1);
  EXPECT_EQ(b1.grade(kTopic, DocId{"d1"}), 1);
  EXPECT_EQ(b1.grade(kTopic, DocId{"d3"}), 1);

  auto zero = binarize(grades_for(kTopic, {0, 0}), 1);
  EXPECT_TRUE(scorable_topics(zero, MetricSpec{MetricKind::AP, 10, 1}).empty());
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(average_precision(ranked(1), grades_for(kTopic, {1}), kTopic, 1000), 1.0);
  // [N, R, N, R], R = 2: (1/2 + 2/4) / 2
  EXPECT_NEAR(average_precision(ranked(4), grades_for(kTopic, {0, 1, 0, 1}), kTopic, 1000), 0.5, 1e-9);
  // three relevant documents, none retrieved
  auto q = grades_for(kTopic, {0, 0});
  q.add(kTopic, DocId{"x1"}, 1);
  q.add(kTopic, DocId{"x2"}, 1);
  q.add(kTopic, DocId{"x3"}, 1);
  EXPECT_DOUBLE_EQ(average_precision(ranked(2), q, kTopic, 1000), 0.0);
  EXPECT_THROW(average_precision(ranked(2), grades_for(kTopic, {0, 0}), kTopic, 1000), ValidationError);
}

TEST(AveragePrecision, UnjudgedCountAsNonRelevant) {
  auto q = grades_for(kTopic, {1}, "j");
  std::vector<RankedEntry> e{{DocId{"unjudged"}, 2.0}, {DocId{"j0"}, 1.0}};
  EXPECT_DOUBLE_EQ(average_precision(RankedList(e), q, kTopic, 1000), 0.5);
}

TEST(AveragePrecision, CutoffTruncates) {
  auto q = grades_for(kTopic, {0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(average_precision(ranked(4), q, kTopic, 2), 0.25);
  EXPECT_DOUBLE_EQ(average_precision(ranked(4), q, kTopic, 1), 0.0);
}

TEST(AveragePrecision, TailBelowLastRelevantIsIrrelevant) {
  auto q = grades_for(kTopic, {1, 0, 1});
  const double base = average_precision(ranked(3), q, kTopic, 1000);
  for (std::size_t extra = 1; extra < 20; ++extra) {
    std::vector<RankedEntry> e(ranked(3).entries());
    for (std::size_t i = 0; i < extra; ++i) e.push_back({DocId{"tail" + std::to_string(i)}, -1.0 - i});
    EXPECT_DOUBLE_EQ(average_precision(RankedList(e), q, kTopic, 1000), base);
  }
}

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked(3), grades_for(kTopic, {3, 2, 1}), kTopic, 10), 1.0);
  // retrieved grades [0, 2, 1], judged {2, 1, 0}
  const double v = ndcg_at_k(ranked(3), grades_for(kTopic, {0, 2, 1}), kTopic, 10);
  EXPECT_NEAR(v, 0.66967181649423, 1e-9);
  EXPECT_NEAR(v, oracle::ndcg({0, 2, 1}, {0, 2, 1}, 10), 1e-12);
  EXPECT_DOUBLE_EQ(ndcg_at_k(RankedList{}, grades_for(kTopic, {1}), kTopic, 10), 0.0);
  EXPECT_THROW(ndcg_at_k(ranked(2), grades_for(kTopic, {0, 0}), kTopic, 10), ValidationError);
}

TEST(Ndcg, ExponentialGain) {
  // grades [0, 2, 1]: DCG = 3/log2(3) + 1/2, IDCG = 3 + 1/log2(3)
  const double expected = (3.0 / std::log2(3.0) + 0.5) / (3.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(ranked(3), grades_for(kTopic, {0, 2, 1}), kTopic, 10, GainKind::Exponential),
              expected, 1e-12);
}

TEST(Ndcg, SwappingHigherGradeUpwardNeverDecreases) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> grade(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> g(8);
    for (auto& x : g) x = grade(rng);
    g[0] = std::max(g[0], 1);
    std::shuffle(g.begin(), g.end(), rng);
    // Judged pool is fixed; the retrieved order is a permutation of it.
    auto q = grades_for(kTopic, g);
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto list_of = [&](const std::vector<std::size_t>& o) {
      std::vector<RankedEntry> e;
      for (std::size_t i = 0; i < o.size(); ++i) {
        e.push_back({DocId{"d" + std::to_string(o[i])}, static_cast<double>(o.size() - i)});
      }
      return RankedList(e);
    };
    const double before = ndcg_at_k(list_of(order), q, kTopic, 5);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (g[order[i]] > g[order[i - 1]]) {
        auto swapped = order;
        std::swap(swapped[i], swapped[i - 1]);
        EXPECT_GE(ndcg_at_k(list_of(swapped), q, kTopic, 5), before - 1e-15);
      }
    }
  }
}

TEST(Metrics, RandomSmallCasesMatchDirectSummation) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> grade(0, 3);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t judged = len(rng);
    std::vector<int> grades(judged);
    for (auto& g : grades) g = grade(rng);
    grades[0] = 2;
    auto q = grades_for(kTopic, grades);
    // Retrieve a random subset in random order plus unjudged noise.
    std::vector<std::size_t> order(judged);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(len(rng) % (judged + 1));
    std::vector<RankedEntry> e;
    std::vector<int> retrieved;
    for (std::size_t i = 0; i < order.size(); ++i) {
      e.push_back({DocId{"d" + std::to_string(order[i])}, 100.0 - i});
      retrieved.push_back(grades[order[i]]);
      if (i % 3 == 2) {
        e.push_back({DocId{"u" + std::to_string(i)}, 100.0 - i - 0.5});
        retrieved.push_back(0);
      }
    }
    RankedList list(e);
    const std::size_t k = 1 + trial % 10;

    EXPECT_NEAR(ndcg_at_k(list, q, kTopic, k), oracle::ndcg(retrieved, grades, k), 1e-12);

    std::vector<int> rel;
    for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i) rel.push_back(retrieved[i] >= 2);
    const auto total = static_cast<std::size_t>(std::count_if(grades.begin(), grades.end(),
                                                              [](int g) { return g >= 2; }));
    EXPECT_NEAR(average_precision(list, binarize(q, 2), kTopic, k),
                oracle::average_precision(rel, total), 1e-12);
  }
}

class ScoreMatrixTest : public ::testing::Test {
 protected:
  void SetUp() override {
    qrels = Qrels("gold");
    qrels.add(TopicId{"1"}, DocId{"a"}, 2);
    qrels.add(TopicId{"1"}, DocId{"b"}, 0);
    qrels.add(TopicId{"2"}, DocId{"c"}, 3);
    qrels.add(TopicId{"3"}, DocId{"d"}, 1);
    qrels.add(TopicId{"4"}, DocId{"e"}, 0);  // never scorable

    sigaudit::Run r1{"r1", {}};
    r1.lists[TopicId{"1"}] = RankedList({{DocId{"a"}, 2}, {DocId{"b"}, 1}});
    r1.lists[TopicId{"2"}] = RankedList({{DocId{"c"}, 1}});
    r1.lists[TopicId{"3"}] = RankedList({{DocId{"x"}, 2}, {DocId{"d"}, 1}});
    sigaudit::Run r0{"r0", {}};
    r0.lists[TopicId{"1"}] = RankedList({{DocId{"b"}, 2}, {DocId{"a"}, 1}});
    r0.lists[TopicId{"3"}] = RankedList({{DocId{"d"}, 1}});
    pool = RunPool({r1, r0});
  }

  Qrels qrels;
  RunPool pool;
};

TEST_F(ScoreMatrixTest, ShapeOrderAndMissingTopics) {
  Diagnostics diag;
  MetricSpec spec{MetricKind::NDCG, 1000, 2};
  auto m = build_score_matrix(pool, qrels, spec, std::nullopt, &diag);
  EXPECT_EQ(m.run_tags(), (std::vector<std::string>{"r0", "r1"}));
  ASSERT_EQ(m.topics(), 3u);
  EXPECT_EQ(m.topic_ids()[0].value, "1");
  EXPECT_EQ(m.topic_ids()[2].value, "3");
  EXPECT_EQ(diag.count(), 1u);  // topic 4 excluded
  EXPECT_DOUBLE_EQ(m.at(0, 1), 0.0);  // r0 has nothing for topic 2
  EXPECT_DOUBLE_EQ(m.at(1, 1), 1.0);
  for (double v : m.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(ScoreMatrixTest, ApExcludesTopicsBelowThreshold) {
  Diagnostics diag;
  auto m = build_score_matrix(pool, qrels, MetricSpec{MetricKind::AP, 1000, 2}, std::nullopt, &diag);
  // topic 3 only has grade 1 and topic 4 only grade 0
  ASSERT_EQ(m.topics(), 2u);
  EXPECT_EQ(diag.count(), 2u);
  EXPECT_DOUBLE_EQ(m.at(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(m.at(0, 0), 0.5);
  auto m1 = build_score_matrix(pool, qrels, MetricSpec{MetricKind::AP, 1000, 1});
  EXPECT_EQ(m1.topics(), 3u);
}

TEST_F(ScoreMatrixTest, SubsetEqualsColumnSlice) {
  MetricSpec spec{MetricKind::NDCG, 1000, 1};
  auto full = build_score_matrix(pool, qrels, spec);
  std::vector<TopicId> subset{TopicId{"3"}, TopicId{"1"}};
  auto sub = build_score_matrix(pool, qrels, spec, subset);
  std::vector<TopicId> sorted{TopicId{"1"}, TopicId{"3"}};
  EXPECT_EQ(sub, full.select_topics(sorted));
  EXPECT_THROW(build_score_matrix(pool, qrels, spec, std::vector<TopicId>{TopicId{"99"}}),
               ValidationError);
  EXPECT_THROW(build_score_matrix(pool, qrels, spec, std::vector<TopicId>{TopicId{"4"}}),
               ValidationError);
}

TEST_F(ScoreMatrixTest, ParallelScoringMatchesSerial) {
  MetricSpec spec{MetricKind::AP, 1000, 1};
  WorkerPool workers(4);
  EXPECT_EQ(build_score_matrix(pool, qrels, spec, std::nullopt, nullptr, &workers),
            build_score_matrix(pool, qrels, spec));
}

TEST_F(ScoreMatrixTest, CsvRoundTrip) {
  auto m = build_score_matrix(pool, qrels, MetricSpec{MetricKind::NDCG, 1000, 1});
  std::ostringstream out;
  write_score_matrix(out, m);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "run,1,2,3");
  std::istringstream in(out.str());
  auto back = read_score_matrix(in);
  EXPECT_EQ(back.run_tags(), m.run_tags());
  EXPECT_EQ(back.topic_ids(), m.topic_ids());
  for (std::size_t i = 0; i < m.values().size(); ++i) {
    EXPECT_NEAR(back.values()[i], m.values()[i], 1e-9);
  }
  std::istringstream bad("run,1\nr0,abc\n");
  EXPECT_THROW(read_score_matrix(bad), ParseError);
}

TEST(MetricSpec, Validation) {
  EXPECT_THROW((MetricSpec{MetricKind::AP, 0, 1}.validate()), UsageError);
  EXPECT_THROW((MetricSpec{MetricKind::AP, 10, 0}.validate()), UsageError);
  EXPECT_EQ((MetricSpec{MetricKind::NDCG, 1000, 1}.label()), "ndcg@1000");
  EXPECT_THROW(parse_metric_kind("rr"), UsageError);
}

}  // namespace
}  // namespace sigaudit
