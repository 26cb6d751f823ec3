#include "dst/mrc_head.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dst/errors.h"

namespace dst {
namespace {

EncoderOutput RandomReps(std::mt19937_64& rng, size_t n, size_t dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  EncoderOutput r;
  r.dim = dim;
  r.token_reps = Matrix(n, dim);
  for (double& x : r.token_reps.data) x = normal(rng);
  r.cls.resize(dim);
  for (double& x : r.cls) x = normal(rng);
  return r;
}

TEST(MrcHeadTest, ForwardMatchesHandComputation) {
  EncoderOutput reps;
  reps.dim = 2;
  reps.token_reps = Matrix(2, 2);
  reps.token_reps.data = {1, 0, 0, 2};
  reps.cls = {1, 1};
  MrcParams p = MrcParams::Zeros(2, 1);
  p.w_start = {1, 1};
  p.b_start = 0.5;
  p.w_end = {0, 1, 3, 3};
  p.w_g(0, 0) = 1;  // reads r_s[0]
  p.w_ans = {2};
  p.b_ans = -1;
  MrcForward f = MrcForwardPass(reps, p);
  EXPECT_DOUBLE_EQ(f.start_logits[0], 1.5);
  EXPECT_DOUBLE_EQ(f.start_logits[1], 2.5);
  EXPECT_EQ(f.start_pos, 1u);
  // r_s = token 1 = (0, 2): the r_s half adds 6 to both end logits.
  EXPECT_DOUBLE_EQ(f.end_logits[0], 0 + 6);
  EXPECT_DOUBLE_EQ(f.end_logits[1], 2 + 6);
  EXPECT_NEAR(f.v_start[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(f.answer_logit, 2 * std::tanh(0.0) - 1, 1e-15);
  MrcForward forced = MrcForwardPass(reps, p, 0);
  EXPECT_EQ(forced.start_pos, 0u);
  EXPECT_NEAR(forced.answer_logit, 2 * std::tanh(1.0) - 1, 1e-15);
  EXPECT_NEAR(forced.p_has_answer, 1.0 / (1.0 + std::exp(-forced.answer_logit)), 1e-15);
}

TEST(MrcHeadTest, ZeroParamsLossIsClosedForm) {
  std::mt19937_64 rng(1);
  for (size_t n : {1u, 4u, 9u}) {
    EncoderOutput reps = RandomReps(rng, n, 6);
    MrcParams zero = MrcParams::Zeros(6, 3);
    MrcGold gold{true, 0, n - 1};
    // Uniform start/end distributions and p = 1/2.
    EXPECT_NEAR(MrcLoss(MrcForwardPass(reps, zero, 0), gold), std::log(2.0) + 2 * std::log(double(n)),
                1e-12);
    EXPECT_NEAR(MrcLoss(MrcForwardPass(reps, zero), MrcGold{}), std::log(2.0), 1e-12);
  }
}

double RelErr(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

TEST(MrcHeadTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 6; ++k) {
    const size_t n = 3 + k;
    EncoderOutput reps = RandomReps(rng, n, 5);
    MrcParams p = MrcParams::Random(5, 3, 100 + k, 0.5);
    MrcGold gold = k % 3 == 2 ? MrcGold{} : MrcGold{true, k % n, std::min(n - 1, k % n + 1)};
    std::optional<size_t> forced;
    if (gold.has_answer) forced = gold.start;
    MrcParams g = MrcGradients(MrcForwardPass(reps, p, forced), gold, reps, p);
    Vec analytic = g.Flatten();
    Vec theta = p.Flatten();
    ASSERT_EQ(analytic.size(), p.size());
    for (size_t i = 0; i < theta.size(); ++i) {
      const double h = 1e-5;
      MrcParams plus = p, minus = p;
      Vec tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      plus.Unflatten(tp);
      minus.Unflatten(tm);
      const double numeric = (MrcLoss(MrcForwardPass(reps, plus, forced), gold) -
                              MrcLoss(MrcForwardPass(reps, minus, forced), gold)) /
                             (2 * h);
      EXPECT_LT(RelErr(analytic[i], numeric), 1e-4) << "param " << i << " case " << k;
    }
  }
}

TEST(MrcHeadTest, StartHalfOfEndWeightsHasNoGradient) {
  std::mt19937_64 rng(3);
  EncoderOutput reps = RandomReps(rng, 5, 4);
  MrcParams p = MrcParams::Random(4, 2, 9);
  MrcGold gold{true, 1, 3};
  MrcParams g = MrcGradients(MrcForwardPass(reps, p, 1), gold, reps, p);
  for (size_t i = 4; i < 8; ++i) EXPECT_EQ(g.w_end[i], 0.0);
  double any = 0;
  for (size_t i = 0; i < 4; ++i) any += std::abs(g.w_end[i]);
  EXPECT_GT(any, 0.0);
}

// Exhaustive reference: first maximum in (i, j) lexicographic order.
std::optional<DecodedSpan> Brute(const MrcForward& f, size_t max_len, double thr,
                                 const std::vector<int>* seg) {
  if (f.p_has_answer < thr) return std::nullopt;
  std::optional<DecodedSpan> best;
  for (size_t i = 0; i < f.v_start.size(); ++i) {
    for (size_t j = i; j < f.v_end.size() && j - i < max_len; ++j) {
      if (seg) {
        bool same = true;
        for (size_t t = i; t <= j; ++t) same = same && (*seg)[t] >= 0 && (*seg)[t] == (*seg)[i];
        if (!same) continue;
      }
      const double s = std::log(f.v_start[i]) + std::log(f.v_end[j]);
      if (!best || s > best->score) best = DecodedSpan{i, j, s};
    }
  }
  return best;
}

TEST(MrcHeadTest, DecodeMatchesExhaustiveSearch) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 300; ++k) {
    const size_t n = 1 + rng() % 20;
    Vec ls(n), le(n);
    for (size_t i = 0; i < n; ++i) {
      ls[i] = static_cast<double>(rng() % 3);  // small alphabet, many ties
      le[i] = static_cast<double>(rng() % 3);
    }
    MrcForward f;
    f.v_start = Softmax(ls);
    f.v_end = Softmax(le);
    f.p_has_answer = 0.9;
    const size_t max_len = 1 + rng() % n;
    auto want = Brute(f, max_len, 0.5, nullptr);
    auto got = DecodeSpan(f, max_len, 0.5);
    ASSERT_TRUE(want && got);
    EXPECT_EQ(got->start, want->start);
    EXPECT_EQ(got->end, want->end);

    // Segment ids: runs of equal ids with occasional tags (-1) between.
    std::vector<int> seg(n);
    int cur = 0;
    for (size_t i = 0; i < n; ++i) {
      if (rng() % 5 == 0) {
        seg[i] = -1;
        ++cur;
      } else {
        seg[i] = cur;
      }
    }
    auto want_seg = Brute(f, max_len, 0.5, &seg);
    auto got_seg = DecodeSpan(f, seg, max_len, 0.5);
    ASSERT_EQ(want_seg.has_value(), got_seg.has_value());
    if (want_seg) {
      EXPECT_EQ(got_seg->start, want_seg->start);
      EXPECT_EQ(got_seg->end, want_seg->end);
    }
  }
}

TEST(MrcHeadTest, DecodeAbstainsBelowThreshold) {
  MrcForward f;
  f.v_start = {0.5, 0.5};
  f.v_end = {0.5, 0.5};
  f.p_has_answer = 0.49;
  EXPECT_FALSE(DecodeSpan(f));
  f.p_has_answer = 0.5;
  auto s = DecodeSpan(f);
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, (DecodedSpan{0, 0, 2 * std::log(0.5)}));
  std::vector<int> tags = {-1, -1};
  EXPECT_FALSE(DecodeSpan(f, tags));
  std::vector<int> wrong = {0};
  EXPECT_THROW(DecodeSpan(f, wrong), UsageError);
}

TEST(MrcHeadTest, RejectsBadShapes) {
  std::mt19937_64 rng(5);
  EncoderOutput reps = RandomReps(rng, 3, 4);
  EXPECT_THROW(MrcForwardPass(reps, MrcParams::Zeros(4, 2), 3), UsageError);
  EXPECT_THROW(MrcForwardPass(reps, MrcParams::Zeros(5, 2)), Error);
  MrcForward f = MrcForwardPass(reps, MrcParams::Zeros(4, 2));
  EXPECT_THROW(MrcLoss(f, MrcGold{true, 2, 1}), UsageError);
}

std::vector<EncodedMrcExample> ToyTask(std::mt19937_64& rng) {
  // The answer is always the token whose first component is largest.
  std::vector<EncodedMrcExample> out;
  for (int k = 0; k < 40; ++k) {
    EncodedMrcExample ex;
    ex.reps = RandomReps(rng, 6, 8);
    const size_t pos = rng() % 6;
    for (size_t i = 0; i < 6; ++i) ex.reps.token_reps(i, 0) = i == pos ? 4.0 : -1.0;
    ex.gold = MrcGold{true, pos, pos};
    out.push_back(ex);
  }
  return out;
}

TEST(MrcHeadTest, TrainingLearnsAndIsDeterministic) {
  std::mt19937_64 rng(6);
  auto data = ToyTask(rng);
  MrcTrainConfig c;
  c.hidden = 4;
  c.epochs = 30;
  c.seed = 3;
  std::vector<double> curve;
  MrcParams a = TrainMrc(data, 8, c, nullptr, &curve);
  ASSERT_EQ(curve.size(), 30u);
  EXPECT_LT(curve.back(), curve.front() * 0.5);
  EXPECT_GE(MrcExactSpanAccuracy(data, a, c.max_span_len, c.threshold), 0.95);
  EXPECT_EQ(TrainMrc(data, 8, c), a);
  c.seed = 4;
  EXPECT_NE(TrainMrc(data, 8, c), a);
}

TEST(MrcHeadTest, TrainingFailures) {
  MrcTrainConfig c;
  EXPECT_THROW(TrainMrc(std::vector<EncodedMrcExample>{}, 8, c), UsageError);
  std::mt19937_64 rng(7);
  auto data = ToyTask(rng);
  data[3].reps.token_reps(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(TrainMrc(data, 8, c), TrainingError);
}

TEST(MrcHeadTest, ConfigJsonRoundTrip) {
  MrcTrainConfig c;
  c.hidden = 7;
  c.adam.beta2 = 0.95;
  c.threshold = 0.25;
  EXPECT_EQ(MrcTrainConfig::FromJson(c.ToJson()).ToJson(), c.ToJson());
}

}  // namespace
}  // namespace dst
