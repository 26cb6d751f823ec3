#include "dst/wd_head.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dst/errors.h"
#include "test_util.h"

namespace dst {
namespace {

TEST(WdHeadTest, ForwardMatchesHandComputation) {
  WdParams p = WdParams::Zeros(2, 1);
  p.w_dnn(0, 0) = 1.0;
  p.w_dnn(0, 1) = -1.0;
  p.b_dnn = {0.5};
  p.w_lr[0] = 2.0;
  p.w_lr[1 + 4] = 3.0;  // wide feature 4
  p.b_lr = -0.25;
  Vec cls = {1.0, 0.5};
  WideFeatureVector wide;
  wide.values[4] = 1.0;
  WdForward f = WdForwardPass(cls, wide, p);
  const double h = std::tanh(1.0 - 0.5 + 0.5);
  EXPECT_NEAR(f.hidden[0], h, 1e-15);
  EXPECT_NEAR(f.logit, 2 * h + 3 - 0.25, 1e-15);
  EXPECT_NEAR(f.p, 1 / (1 + std::exp(-f.logit)), 1e-15);
  EXPECT_NEAR(WdLoss(f, 1), -std::log(f.p), 1e-12);
  EXPECT_NEAR(WdLoss(f, 0), -std::log(1 - f.p), 1e-12);
  EXPECT_NEAR(BinaryCrossEntropy(f.p, 0), WdLoss(f, 0), 1e-12);
}

TEST(WdHeadTest, ZeroParamsGiveHalf) {
  Vec cls(6, 0.3);
  WideFeatureVector wide;
  wide.values[0] = 1;
  WdForward f = WdForwardPass(cls, wide, WdParams::Zeros(6, 4));
  EXPECT_EQ(f.p, 0.5);
  EXPECT_NEAR(WdLoss(f, 1), std::log(2.0), 1e-15);
  // Saturated logits still give finite losses.
  f.logit = 800;
  EXPECT_NEAR(WdLoss(f, 1), 0.0, 1e-300);
  EXPECT_NEAR(WdLoss(f, 0), 800.0, 1e-9);
}

TEST(WdHeadTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 8; ++k) {
    const bool use_wide = k % 2 == 0;
    Vec cls(5);
    for (double& x : cls) x = normal(rng);
    WideFeatureVector wide;
    for (double& x : wide.values) x = rng() % 3 == 0 ? 1.0 : 0.0;
    WdParams p = WdParams::Random(5, 3, use_wide, 40 + k, 0.5);
    const int label = k % 3 == 0 ? 0 : 1;
    Vec analytic = WdGradients(WdForwardPass(cls, wide, p), label, cls, wide, p).Flatten();
    Vec theta = p.Flatten();
    for (size_t i = 0; i < theta.size(); ++i) {
      const double h = 1e-5;
      Vec tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      WdParams plus = p, minus = p;
      plus.Unflatten(tp);
      minus.Unflatten(tm);
      const double numeric =
          (WdLoss(WdForwardPass(cls, wide, plus), label) - WdLoss(WdForwardPass(cls, wide, minus), label)) /
          (2 * h);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
      if (!use_wide && i >= 5 * 3 + 3 + 3 && i < 5 * 3 + 3 + 3 + kWideFeatureCount) {
        EXPECT_EQ(analytic[i], 0.0) << "deep-only wide weight " << i;
      } else {
        EXPECT_LT(err, 1e-4) << "param " << i << " case " << k;
      }
    }
  }
}

TEST(WdHeadTest, DeepOnlyIgnoresWideFeatures) {
  WdParams p = WdParams::Random(4, 3, false, 1);
  Vec cls = {0.1, 0.2, 0.3, 0.4};
  WideFeatureVector none, all;
  all.values.fill(1.0);
  EXPECT_EQ(WdForwardPass(cls, none, p).logit, WdForwardPass(cls, all, p).logit);
  EXPECT_THROW(WdForwardPass(Vec(3, 0.0), none, p), CompatibilityError);
  WideFeatureVector old = none;
  old.layout_version = 0;
  EXPECT_THROW(WdForwardPass(cls, old, p), CompatibilityError);
}

TEST(WdHeadTest, SortScoresIsStable) {
  auto sorted = SortScores({{"a", 0.2}, {"b", 0.7}, {"c", 0.2}, {"d", 0.7}});
  std::vector<std::string> order;
  for (const auto& s : sorted) order.push_back(s.candidate);
  EXPECT_EQ(order, (std::vector<std::string>{"b", "d", "a", "c"}));
}

// Groups of four candidates; the positive is marked by wide feature 7 and
// sometimes also by a direction in cls.
std::vector<EncodedWdExample> ToyGroups(std::mt19937_64& rng, size_t groups) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<EncodedWdExample> out;
  for (size_t g = 0; g < groups; ++g) {
    const size_t pos = rng() % 4;
    for (size_t c = 0; c < 4; ++c) {
      EncodedWdExample ex;
      ex.cls.resize(8);
      for (double& x : ex.cls) x = normal(rng);
      ex.wide.values[7] = c == pos ? 1.0 : 0.0;
      ex.label = c == pos ? 1 : 0;
      ex.group = g;
      out.push_back(ex);
    }
  }
  return out;
}

TEST(WdHeadTest, TrainingUsesWideFeaturesAndIsDeterministic) {
  std::mt19937_64 rng(9);
  auto data = ToyGroups(rng, 60);
  WdTrainConfig c;
  c.proj = 4;
  c.epochs = 15;
  c.seed = 2;
  std::vector<double> curve;
  WdParams wide = TrainWd(data, 8, c, nullptr, &curve);
  EXPECT_LT(curve.back(), curve.front());
  EXPECT_EQ(WdCandidateAccuracy(data, wide), 1.0);
  EXPECT_EQ(TrainWd(data, 8, c), wide);

  c.use_wide = false;
  WdParams deep = TrainWd(data, 8, c);
  for (size_t i = 0; i < kWideFeatureCount; ++i) EXPECT_EQ(deep.w_lr[c.proj + i], 0.0);
  EXPECT_LT(WdCandidateAccuracy(data, deep), 0.9);
}

TEST(WdHeadTest, AccuracyTieGoesToFirstMember) {
  WdParams zero = WdParams::Zeros(2, 1);
  std::vector<EncodedWdExample> ex(4);
  for (auto& e : ex) e.cls = {0, 0};
  ex[0].label = 1;
  ex[0].group = ex[1].group = 0;
  ex[2].group = ex[3].group = 1;
  ex[3].label = 1;
  EXPECT_EQ(WdCandidateAccuracy(ex, zero), 0.5);
  EXPECT_EQ(WdBinaryAccuracy(ex, zero), 0.5);  // p = 0.5 counts as positive
  EXPECT_THROW(TrainWd({}, 2, WdTrainConfig{}), UsageError);
}

TEST(WdHeadTest, RankCandidatesScoresEveryCandidate) {
  Schema s = LoadSchema(testing::DataPath("sgd/schema.json"));
  auto dialogues = LoadDialogues(testing::DataPath("sgd/dev_dialogues.json"), s);
  const Dialogue& d = dialogues[0];
  const SlotDef* slot = nullptr;
  const ServiceDef& svc = s.GetService(d.turns[0].frames[0].service);
  for (const auto& sd : svc.slots) {
    if (ClassifySlot(sd) == SlotKind::kText) slot = &sd;
  }
  ASSERT_NE(slot, nullptr);
  EncoderConfig ec;
  ec.dim = 16;
  BaselineEncoder enc(ec);
  WdParams p = WdParams::Random(16, 4, true, 1);
  RankInputs in{&d.turns, 0, 0, svc.name, nullptr};
  SynonymLexicon lex;
  auto scores = RankCandidates(in, *slot, enc, p, lex);
  auto cands = CandidateValues(*slot);
  ASSERT_EQ(scores.size(), cands.size());
  std::set<std::string> seen;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (i > 0) {
      EXPECT_LE(scores[i].probability, scores[i - 1].probability);
    }
    seen.insert(scores[i].candidate);
    EXPECT_GT(scores[i].probability, 0.0);
    EXPECT_LT(scores[i].probability, 1.0);
  }
  EXPECT_EQ(seen, std::set<std::string>(cands.begin(), cands.end()));
  for (const auto& sd : svc.slots) {
    if (ClassifySlot(sd) == SlotKind::kSpan) {
      EXPECT_THROW(RankCandidates(in, sd, enc, p, lex), UsageError);
    }
  }
}

TEST(WdHeadTest, EncodedExamplesCarryWideFeaturesOnlyForWdTask) {
  Schema s = LoadSchema(testing::DataPath("wd_separable/schema.json"));
  auto d = LoadDialogues(testing::DataPath("wd_separable/dialogues.json"), s);
  d.resize(5);
  EncoderConfig ec;
  ec.dim = 8;
  BaselineEncoder enc(ec);
  SynonymLexicon lex;
  auto wd = EncodeWdExamples(MakeTrainingExamples(d, s, Task::kWd).pairs, d, s, enc, &lex);
  double any = 0;
  for (const auto& e : wd) any += e.wide.values[wide::kValueUser];
  EXPECT_GT(any, 0.0);
  auto intent = EncodeWdExamples(MakeTrainingExamples(d, s, Task::kIntent).pairs, d, s, enc, &lex);
  for (const auto& e : intent) EXPECT_EQ(e.wide, WideFeatureVector{});
}

TEST(WdHeadTest, ConfigJsonRoundTrip) {
  WdTrainConfig c;
  c.task = "intent";
  c.negatives = 7;
  c.use_wide = false;
  EXPECT_EQ(WdTrainConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
}

}  // namespace
}  // namespace dst
