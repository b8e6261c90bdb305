#include "sigaudit/agreement.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace sigaudit {
namespace {

SignificanceSet set_of(std::size_t m, const std::vector<PairId>& sig) {
  SignificanceSet s;
  for (std::size_t r = 0; r < m; ++r) s.run_tags.push_back("r" + std::to_string(r));
  s.flags.assign(pair_count(m), false);
  for (const auto& p : sig) s.flags[pair_index(p, m)] = true;
  return s;
}

TEST(ClassifyPairs, CaseAnalysis) {
  auto c = classify_pairs(set_of(3, {{0, 1}, {0, 2}}), set_of(3, {{0, 1}}));
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].pair, (PairId{0, 1}));
  EXPECT_EQ(c[0].label, PairLabel::TP);
  EXPECT_EQ(c[1].label, PairLabel::FN);
  EXPECT_EQ(c[2].label, PairLabel::TN);
}

TEST(ClassifyPairs, IdentityAndAllFalsePositive) {
  auto gold = set_of(5, {{0, 1}, {2, 4}, {1, 3}});
  for (const auto& c : classify_pairs(gold, gold)) {
    EXPECT_TRUE(c.label == PairLabel::TP || c.label == PairLabel::TN);
  }
  auto all = set_of(4, all_pairs(4));
  for (const auto& c : classify_pairs(set_of(4, {}), all)) EXPECT_EQ(c.label, PairLabel::FP);
}

TEST(ClassifyPairs, MismatchedPools) {
  auto a = set_of(3, {});
  auto b = set_of(3, {});
  b.run_tags[2] = "other";
  EXPECT_THROW(classify_pairs(a, b), ValidationError);
  EXPECT_THROW(classify_pairs(a, set_of(4, {})), ValidationError);
}

TEST(ClassifyPairs, SwappingGoldAndAltExchangesFnAndFp) {
  std::mt19937 rng(1);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + trial % 9;
    std::vector<PairId> g, a;
    for (const auto& p : all_pairs(m)) {
      if (coin(rng)) g.push_back(p);
      if (coin(rng)) a.push_back(p);
    }
    const auto fwd = classify_pairs(set_of(m, g), set_of(m, a));
    const auto rev = classify_pairs(set_of(m, a), set_of(m, g));
    ASSERT_EQ(fwd.size(), pair_count(m));
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      const auto expected = fwd[i].label == PairLabel::FN   ? PairLabel::FP
                            : fwd[i].label == PairLabel::FP ? PairLabel::FN
                                                            : fwd[i].label;
      EXPECT_EQ(rev[i].label, expected);
    }
    const auto r = confusion_rates(fwd);
    if (r.gold_positive() > 0) {
      EXPECT_EQ(*r.tp_pct() + *r.fn_pct(), 100.0);
    }
    if (r.gold_negative() > 0) {
      EXPECT_EQ(*r.tn_pct() + *r.fp_pct(), 100.0);
    }
  }
}

TEST(ConfusionRates, NineteenOfTwenty) {
  std::vector<PairClassification> c;
  for (int i = 0; i < 19; ++i) c.push_back({{}, true, true, PairLabel::TP});
  c.push_back({{}, true, false, PairLabel::FN});
  const auto r = confusion_rates(c);
  EXPECT_DOUBLE_EQ(*r.tp_pct(), 95.0);
  EXPECT_DOUBLE_EQ(*r.fn_pct(), 5.0);
  EXPECT_FALSE(r.tn_pct().has_value());
  EXPECT_FALSE(r.fp_pct().has_value());
}

TEST(ConfusionRates, IdentityAndEmptyGoldPositives) {
  auto gold = set_of(4, {{0, 1}, {1, 2}});
  const auto r = confusion_rates(classify_pairs(gold, gold));
  EXPECT_EQ(*r.tp_pct(), 100.0);
  EXPECT_EQ(*r.tn_pct(), 100.0);
  EXPECT_EQ(*r.fn_pct(), 0.0);
  EXPECT_EQ(*r.fp_pct(), 0.0);

  const auto none = confusion_rates(classify_pairs(set_of(3, {}), set_of(3, {{0, 2}})));
  EXPECT_FALSE(none.tp_pct());
  EXPECT_FALSE(none.fn_pct());
  EXPECT_NEAR(*none.fp_pct(), 100.0 / 3.0, 1e-12);
}

TEST(ConfusionRates, InvariantToPoolReordering) {
  // Relabelling runs permutes pairs but leaves the four counts unchanged.
  const std::size_t m = 6;
  std::vector<PairId> g{{0, 1}, {0, 5}, {2, 3}, {3, 4}}, a{{0, 1}, {1, 2}, {3, 4}};
  std::vector<std::size_t> perm{5, 3, 0, 1, 4, 2};
  auto relabel = [&](const std::vector<PairId>& v) {
    std::vector<PairId> out;
    for (auto p : v) {
      auto x = perm[p.a], y = perm[p.b];
      out.push_back({std::min(x, y), std::max(x, y)});
    }
    return out;
  };
  const auto r1 = confusion_rates(classify_pairs(set_of(m, g), set_of(m, a)));
  const auto r2 = confusion_rates(classify_pairs(set_of(m, relabel(g)), set_of(m, relabel(a))));
  EXPECT_EQ(r1.tp, r2.tp);
  EXPECT_EQ(r1.fn, r2.fn);
  EXPECT_EQ(r1.tn, r2.tn);
  EXPECT_EQ(r1.fp, r2.fp);
}

TEST(AgreementCsv, Row) {
  ConfusionRates r{19, 1, 0, 0};
  std::ostringstream out;
  write_agreement_header(out);
  write_agreement_row(out, "dl19", "ap@1000", r);
  EXPECT_EQ(out.str(),
            "dataset,metric,tp,fn,tn,fp,gold_pos,gold_neg\n"
            "dl19,ap@1000,95.000000,5.000000,NA,NA,20,0\n");
}

}  // namespace
}  // namespace sigaudit
