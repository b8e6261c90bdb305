#include "sigaudit/sampling.hpp"

#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "../support/synthetic.hpp"
#include "sigaudit/parallel.hpp"

namespace sigaudit {
namespace {

std::vector<TopicId> topics_of(std::initializer_list<const char*> names) {
  std::vector<TopicId> out;
  for (const char* n : names) out.push_back(TopicId{n});
  return out;
}

TEST(UndersampleTopics, FullSizeReturnsEverything) {
  const auto all = topics_of({"a", "b", "c", "d"});
  EXPECT_EQ(undersample_topics(all, 4, 1, 0), all);
  EXPECT_THROW(undersample_topics(all, 5, 1, 0), ValidationError);
}

TEST(UndersampleTopics, DeterministicSortedAndDistinct) {
  std::vector<TopicId> all;
  for (int i = 0; i < 50; ++i) all.push_back(TopicId{fmt::format("{:03}", i)});
  for (std::uint64_t it = 0; it < 20; ++it) {
    const auto s = undersample_topics(all, 12, 5, it);
    EXPECT_EQ(s, undersample_topics(all, 12, 5, it));
    ASSERT_EQ(s.size(), 12u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
  }
  EXPECT_NE(undersample_topics(all, 12, 5, 0), undersample_topics(all, 12, 5, 1));
  EXPECT_NE(undersample_topics(all, 12, 5, 0), undersample_topics(all, 12, 6, 0));
}

TEST(UndersampleTopics, SingleDrawIsUniform) {
  // 10,000 draws over 3 topics: chi-square with 2 df, 99.9% quantile 13.8.
  const auto all = topics_of({"a", "b", "c"});
  std::map<std::string, int> counts;
  for (std::uint64_t it = 0; it < 10'000; ++it) ++counts[undersample_topics(all, 1, 123, it)[0].value];
  double chi2 = 0.0;
  for (const auto& [name, c] : counts) chi2 += (c - 10'000 / 3.0) * (c - 10'000 / 3.0) / (10'000 / 3.0);
  EXPECT_EQ(counts.size(), 3u);
  EXPECT_LT(chi2, 13.8);
}

TEST(FieldStats, MeanAndSampleStddev) {
  const std::vector<std::optional<double>> v{2.0, std::nullopt, 4.0, 6.0};
  const auto s = field_stats(v);
  EXPECT_DOUBLE_EQ(*s.mean, 4.0);
  EXPECT_DOUBLE_EQ(*s.stddev, 2.0);
  EXPECT_EQ(s.excluded, 1u);

  const std::vector<std::optional<double>> one{3.0};
  EXPECT_DOUBLE_EQ(*field_stats(one).mean, 3.0);
  EXPECT_FALSE(field_stats(one).stddev);
  const std::vector<std::optional<double>> none{std::nullopt};
  EXPECT_FALSE(field_stats(none).mean);
}

class ReplicateTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    synthetic::Spec spec;
    spec.runs = 6;
    spec.gold_topics = 10;
    spec.alt_topics = 24;
    collection_ = new synthetic::Collection(synthetic::make(spec));
    pool_ = new RunPool(collection_->runs);
  }
  static void TearDownTestSuite() {
    delete pool_;
    delete collection_;
  }

  static PipelineParams params() {
    PipelineParams p;
    p.permutations = 2000;
    return p;
  }

  static synthetic::Collection* collection_;
  static RunPool* pool_;
  MetricSpec spec_{};
};

synthetic::Collection* ReplicateTest::collection_ = nullptr;
RunPool* ReplicateTest::pool_ = nullptr;

TEST_F(ReplicateTest, IdentityIsPerfectEveryIteration) {
  ReplicateConfig cfg{5, 11, 0};
  const auto rep = run_replicates(*pool_, collection_->alt, collection_->alt, spec_, cfg, params());
  ASSERT_EQ(rep.per_iteration.size(), 5u);
  for (const auto& it : rep.per_iteration) {
    EXPECT_EQ(it.rates.fn, 0u);
    EXPECT_EQ(it.rates.fp, 0u);
    EXPECT_EQ(it.topics.size(), 24u);
    EXPECT_NEAR(it.correlation.rbo, 1.0, 1e-12);
  }
  EXPECT_EQ(*rep.fn.mean, 0.0);
  EXPECT_EQ(*rep.mean_drop.mean, 0.0);
}

TEST_F(ReplicateTest, SingleIterationEqualsDirectPipeline) {
  ReplicateConfig cfg{1, 3, 0};
  const auto rep = run_replicates(*pool_, collection_->gold, collection_->alt, spec_, cfg, params());
  ASSERT_EQ(rep.per_iteration.size(), 1u);
  const auto& it = rep.per_iteration[0];
  EXPECT_EQ(it.topics.size(), 10u);

  const auto tukey_seed = stage_seed(3, "tukey");
  const auto gold = randomized_tukey_hsd(build_score_matrix(*pool_, collection_->gold, spec_), 2000, tukey_seed);
  const auto alt = randomized_tukey_hsd(
      build_score_matrix(*pool_, collection_->alt, spec_, it.topics), 2000, tukey_seed);
  const auto rates = confusion_rates(classify_pairs(significant_set(gold, 0.05), significant_set(alt, 0.05)));
  EXPECT_EQ(it.rates.tp, rates.tp);
  EXPECT_EQ(it.rates.fn, rates.fn);
  EXPECT_EQ(it.rates.tn, rates.tn);
  EXPECT_EQ(it.rates.fp, rates.fp);
  const auto corr = correlate(gold, alt, 0.07);
  EXPECT_EQ(it.correlation.kendall_tau, corr.kendall_tau);
  EXPECT_EQ(it.correlation.rbo, corr.rbo);
  EXPECT_EQ(*rep.tp.mean, *rates.tp_pct());
}

TEST_F(ReplicateTest, AggregatesAreManualAverages) {
  ReplicateConfig cfg{3, 9, 8};
  const auto rep = run_replicates(*pool_, collection_->gold, collection_->alt, spec_, cfg, params());
  ASSERT_EQ(rep.per_iteration.size(), 3u);
  double tp = 0.0, rbo = 0.0;
  std::vector<double> drop0;
  for (const auto& it : rep.per_iteration) {
    EXPECT_EQ(it.topics.size(), 8u);
    tp += *it.rates.tp_pct();
    rbo += it.correlation.rbo;
    drop0.push_back(it.drops.per_run[0].drop);
  }
  EXPECT_NEAR(*rep.tp.mean, tp / 3.0, 1e-12);
  EXPECT_NEAR(*rep.rbo.mean, rbo / 3.0, 1e-12);
  EXPECT_NEAR(rep.mean_drops.per_run[0].drop, (drop0[0] + drop0[1] + drop0[2]) / 3.0, 1e-12);
  EXPECT_NE(rep.per_iteration[0].topics, rep.per_iteration[1].topics);
}

TEST_F(ReplicateTest, DeterministicAcrossWorkers) {
  ReplicateConfig cfg{3, 21, 0};
  const auto serial = run_replicates(*pool_, collection_->gold, collection_->alt, spec_, cfg, params());
  WorkerPool workers(4);
  const auto par = run_replicates(*pool_, collection_->gold, collection_->alt, spec_, cfg, params(), &workers);
  std::ostringstream a, b;
  write_replicates(a, serial);
  write_replicates(b, par);
  EXPECT_EQ(a.str(), b.str());
}

TEST_F(ReplicateTest, ReportLayout) {
  ReplicateConfig cfg{4, 1, 0};
  const auto rep = run_replicates(*pool_, collection_->gold, collection_->alt, spec_, cfg, params());
  std::ostringstream out;
  write_replicates(out, rep);
  std::istringstream in(out.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 1u + 4u + 2u);
  EXPECT_EQ(lines[0], "iteration,tp,fn,tn,fp,tau,rbo,mean_drop,max_drop");
  EXPECT_TRUE(lines[1].starts_with("0,"));
  EXPECT_TRUE(lines[5].starts_with("mean,"));
  EXPECT_TRUE(lines[6].starts_with("stddev,"));
}

TEST_F(ReplicateTest, Errors) {
  ReplicateConfig too_big{2, 1, 25};
  EXPECT_THROW(run_replicates(*pool_, collection_->gold, collection_->alt, spec_, too_big, params()),
               ValidationError);
  ReplicateConfig zero{0, 1, 0};
  EXPECT_THROW(run_replicates(*pool_, collection_->gold, collection_->alt, spec_, zero, params()), UsageError);
}

}  // namespace
}  // namespace sigaudit
