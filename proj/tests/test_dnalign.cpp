#include <gtest/gtest.h>

#include <cmath>

#include "deepnote/bm25.hpp"
#include "deepnote/dnalign.hpp"
#include "dnalign_fixture.hpp"

using namespace deepnote;

TEST(DpoLoss, ReferenceValues) {
  // 40-digit reference evaluations
  auto loss = [](double cm, double rm, double beta) { return dpo_loss_term({cm - 1, -1, rm - 1, -1, beta}); };
  EXPECT_NEAR(loss(0, 0, 0.1), 0.6931471805599453, 1e-12);
  EXPECT_NEAR(loss(2, -2, 0.1), 0.5130152523999526, 1e-12);
  EXPECT_NEAR(loss(-2, 2, 0.1), 0.9130152523999526, 1e-12);
  // huge margins stay finite
  EXPECT_NEAR(loss(4000, -4000, 0.5), 0.0, 1e-300);
  EXPECT_NEAR(loss(-4000, 4000, 0.5), 4000.0, 1e-9);
}

TEST(DpoLoss, RejectsBadInputs) {
  EXPECT_THROW(dpo_loss_term({0, 0, 0, 0, 0.0}), ConfigError);
  EXPECT_THROW(dpo_loss_term({NAN, 0, 0, 0, 0.1}), ConfigError);
}

TEST(DpoLoss, DependsOnlyOnMarginDifference) {
  for (double beta : {0.05, 0.1, 0.5}) {
    EXPECT_NEAR(dpo_loss_term({3, 1, 0, 0, beta}), dpo_loss_term({-1, -3, 5, 5, beta}), 1e-15);
  }
}

TEST(SamplingGridTest, NineConfigsAndTopKCycle) {
  SamplingGrid g;
  auto c = g.configs();
  ASSERT_EQ(c.size(), 9u);
  EXPECT_EQ(c[2], (SamplingConfig{0.1, 0.9, 1024}));
  EXPECT_EQ(c[6], (SamplingConfig{0.9, 0.1, 1024}));
  g.top_ks = {};
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(StageNames, RoundTrip) {
  for (auto s : {Stage::Init, Stage::QR, Stage::KA, Stage::Ans}) EXPECT_EQ(parse_stage(to_string(s)), s);
  EXPECT_THROW(parse_stage("rl"), ConfigError);
}

TEST(DnAlign, FixtureCountsAndFilters) {
  auto run = deepnote::testing::run_dnalign_fixture(7);
  EXPECT_EQ(run.counts["init"], 4);
  EXPECT_EQ(run.counts["qr"], 3);
  EXPECT_EQ(run.counts["ka"], 3);
  EXPECT_EQ(run.counts["ans"], 4);
  for (const auto& p : run.pairs) EXPECT_NE(p.chosen, p.rejected);

  auto reason_for = [&](Stage s, const std::string& id) {
    for (const auto& r : run.skipped) {
      if (r.stage == s && r.example_id == id) return r.reason;
    }
    return std::string();
  };
  EXPECT_EQ(reason_for(Stage::Init, "q5"), "judge gave the same id for best and worst");
  EXPECT_EQ(reason_for(Stage::QR, "q4"), "judge gave the same id for best and worst");
  EXPECT_EQ(reason_for(Stage::QR, "q5"), "no chosen initial note");
  EXPECT_EQ(reason_for(Stage::KA, "q4"), "no chosen refined question");
  EXPECT_EQ(reason_for(Stage::Ans, "q5"), "no candidate scores above zero");
}

TEST(DnAlign, ChosenAndRejectedFollowTheJudge) {
  auto run = deepnote::testing::run_dnalign_fixture(7);
  const auto& init = run.pairs.at(0);
  EXPECT_EQ(init.stage, Stage::Init);
  EXPECT_EQ(init.chosen, "Init note 1 draft 1.");
  EXPECT_EQ(init.rejected, "Init note 1 draft 9.");
  EXPECT_EQ(init.meta.at("top_k"), 3);
  EXPECT_EQ(run.pairs.at(1).meta.at("top_k"), 5);
  EXPECT_EQ(run.pairs.at(2).meta.at("top_k"), 7);
  EXPECT_EQ(init.meta.at("rejected").at("sampling").at("temperature"), 0.9);

  const auto& qr = run.pairs.at(4);
  EXPECT_EQ(qr.stage, Stage::QR);
  EXPECT_EQ(qr.chosen, "1. Vistula river towns 1-2\n2. Baltic sea ports 1-2");
  EXPECT_NE(qr.input_x.find("Notes: Init note 1 draft 1."), std::string::npos);

  const auto& ka = run.pairs.at(7);
  EXPECT_EQ(ka.stage, Stage::KA);
  // positives are variants 1, 4, 7; variant 9 is unlabeled
  const int chosen_variant = ka.chosen.back() == '.' ? ka.chosen[ka.chosen.size() - 2] - '0' : 0;
  EXPECT_TRUE(chosen_variant == 1 || chosen_variant == 4 || chosen_variant == 7) << ka.chosen;
  EXPECT_EQ(ka.meta.at("pools").at("unlabeled"), 1);
  EXPECT_EQ(ka.meta.at("pools").at("positive"), 3);

  const auto& ans = run.pairs.at(10);
  EXPECT_EQ(ans.stage, Stage::Ans);
  EXPECT_EQ(ans.chosen, "Oder");
  EXPECT_EQ(ans.rejected, "Unknown place 0");
}

TEST(DnAlign, DeterministicAcrossRunsAndSeedsOnlyMoveKaSampling) {
  auto a = deepnote::testing::run_dnalign_fixture(7);
  auto b = deepnote::testing::run_dnalign_fixture(7);
  EXPECT_EQ(a.jsonl, b.jsonl);
  auto c = deepnote::testing::run_dnalign_fixture(8);
  ASSERT_EQ(a.pairs.size(), c.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    if (a.pairs[i].stage != Stage::KA) {
      EXPECT_EQ(pair_to_json(a.pairs[i]), pair_to_json(c.pairs[i]));
    }
  }
}

TEST(DnAlign, SkipsWhenCandidatesIdentical) {
  auto corpus = std::make_shared<const Corpus>(deepnote::testing::dnalign_corpus());
  Bm25Retriever retriever(corpus, std::make_shared<const Bm25Index>(Bm25Index::build(*corpus)));
  ScriptedBackend backend(std::vector<std::string>(9, "same note"));
  DnAlignBuilder builder(BuilderConfig{}, retriever, backend, backend);
  auto q = deepnote::testing::dnalign_questions();
  q.resize(1);
  EXPECT_TRUE(builder.build_init_pairs(q).empty());
  ASSERT_EQ(builder.skipped().size(), 1u);
  EXPECT_EQ(builder.skipped()[0].reason, "all candidates identical");
}
