#include "dst/repl.h"

#include <gtest/gtest.h>

#include <sstream>

#include "dst/errors.h"
#include "dst/text.h"
#include "test_util.h"

namespace dst {
namespace {

// Answers from keywords in the current user utterance.
class KeywordModels : public TrackerModels {
 public:
  std::string name() const override { return "keyword"; }
  std::vector<double> IntentScores(const TurnView& v, const ServiceDef& s) const override {
    std::vector<double> out(s.intents.size(), 0.1);
    out[Has(v, "pay") ? 0 : out.size() - 1] = 0.9;
    return out;
  }
  std::vector<double> RequestedScores(const TurnView&, const ServiceDef& s) const override {
    return std::vector<double>(s.slots.size(), 0.0);
  }
  std::optional<SpanPrediction> ExtractSpan(const TurnView& v, const SlotDef& slot,
                                            size_t) const override {
    if (slot.name != "receiver" || !Has(v, "maria")) return std::nullopt;
    return SpanPrediction{"Maria", v.turn_index, CharSpan{10, 15}, 0.87654};
  }
  std::vector<CandidateScore> RankCandidates(const TurnView&, const SlotDef& slot, size_t,
                                             const std::set<std::string>&) const override {
    std::vector<CandidateScore> out;
    for (const auto& c : CandidateValues(slot)) out.push_back({c, c == kUnknown ? 0.9 : 0.01});
    return SortScores(out);
  }

 private:
  static bool Has(const TurnView& v, const char* word) {
    return ContainsPhrase((*v.turns)[v.turn_index].utterance, word);
  }
};

class ReplTest : public ::testing::Test {
 protected:
  Schema schema_ = LoadSchema(testing::DataPath("sgd/schema.json"));
  Repl::Loader loader_ = [](const std::string& arg) -> std::shared_ptr<const TrackerModels> {
    if (arg == "keyword") return std::make_shared<KeywordModels>();
    throw Error("no models at '" + arg + "'");
  };

  std::string Feed(Repl& repl, const std::vector<std::string>& lines) {
    std::ostringstream out;
    for (const auto& l : lines) repl.HandleLine(l, out);
    return out.str();
  }
};

TEST_F(ReplTest, NeedsModelsBeforeTracking) {
  Repl repl(schema_, "Payment", {}, loader_);
  std::string out = Feed(repl, {"pay Maria"});
  EXPECT_EQ(out, "error: no models loaded; use :load <models-dir|oracle>\n");
  EXPECT_TRUE(repl.dialogue().turns.empty());
  out = Feed(repl, {":load nowhere", ":load keyword"});
  EXPECT_EQ(out, "error: no models at 'nowhere'\nloaded keyword models from keyword\n");
}

TEST_F(ReplTest, TracksAlternatingTurns) {
  Repl repl(schema_, "Payment", {}, loader_);
  repl.SetModels(std::make_shared<KeywordModels>());
  EXPECT_EQ(repl.Prompt(), "user> ");
  std::string out = Feed(repl, {"  pay Maria please ", "How much?"});
  EXPECT_EQ(out,
            "[turn 0] Payment intent=MakePayment\n"
            "  requested: -\n"
            "  receiver = \"Maria\"  (mrc, p=0.877, turn 0, chars 10-15)\n");
  EXPECT_EQ(repl.Prompt(), "user> ");
  ASSERT_EQ(repl.dialogue().turns.size(), 2u);
  EXPECT_EQ(repl.dialogue().turns[0].utterance, "pay Maria please");
  EXPECT_EQ(repl.dialogue().turns[1].speaker, Speaker::kSystem);

  out = Feed(repl, {"ask for money instead", ":state"});
  EXPECT_EQ(out,
            "[turn 2] Payment intent=RequestPayment\n"
            "  requested: -\n"
            "  (no slot values)\n"
            "[turn 2] Payment intent=RequestPayment\n"
            "  requested: -\n"
            "  (no slot values)\n");
}

TEST_F(ReplTest, Commands) {
  Repl repl(schema_, "Payment", {}, loader_);
  repl.SetModels(std::make_shared<KeywordModels>());
  EXPECT_EQ(Feed(repl, {":history"}), "(empty)\n");
  EXPECT_EQ(Feed(repl, {":state"}), "no state yet\n");
  Feed(repl, {"pay Maria", "ok"});
  EXPECT_EQ(Feed(repl, {":history"}), "  0 User: pay Maria\n  1 System: ok\n");
  EXPECT_EQ(Feed(repl, {":service Nowhere"}), "error: unknown service 'Nowhere'\n");
  EXPECT_EQ(repl.dialogue().turns.size(), 2u);
  EXPECT_EQ(Feed(repl, {":reset"}), "dialogue cleared\n");
  EXPECT_TRUE(repl.dialogue().turns.empty());
  EXPECT_EQ(Feed(repl, {":service Hotels"}), "service Hotels; dialogue cleared\n");
  EXPECT_EQ(repl.dialogue().services, (std::vector<std::string>{"Hotels"}));
  EXPECT_EQ(Feed(repl, {":load"}), "error: usage :load <models-dir|oracle>\n");
  std::string out = Feed(repl, {":frobnicate"});
  EXPECT_EQ(out.rfind("error: unknown command ':frobnicate'\ncommands:\n", 0), 0u);
  std::ostringstream sink;
  EXPECT_FALSE(repl.HandleLine(":quit", sink));
  EXPECT_TRUE(repl.HandleLine("   ", sink));
}

TEST_F(ReplTest, RunEchoesPipedInput) {
  Repl repl(schema_, "Payment", {}, loader_);
  repl.SetModels(std::make_shared<KeywordModels>());
  std::istringstream in("pay Maria\n:quit\nnever read\n");
  std::ostringstream out;
  repl.Run(in, out, true);
  EXPECT_EQ(out.str(),
            "user> pay Maria\n"
            "[turn 0] Payment intent=MakePayment\n"
            "  requested: -\n"
            "  receiver = \"Maria\"  (mrc, p=0.877, turn 0, chars 10-15)\n"
            "system> :quit\n");
  std::istringstream eof("");
  std::ostringstream out2;
  repl.Run(eof, out2, false);
  EXPECT_EQ(out2.str(), "system> \n");
}

TEST_F(ReplTest, UnknownServiceIsRejectedUpFront) {
  EXPECT_THROW(Repl(schema_, "Nowhere", {}, loader_), UsageError);
}

}  // namespace
}  // namespace dst
