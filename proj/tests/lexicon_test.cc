#include "dst/lexicon.h"

#include <gtest/gtest.h>

#include <thread>

#include "dst/errors.h"
#include "httplib.h"
#include "json.hpp"
#include "test_util.h"

namespace dst {
namespace {

TEST(LexiconTest, AddIsDirectionalAndNormalized) {
  SynonymLexicon lex;
  lex.Add("Cheap", "  Inexpensive ", "a");
  lex.Add("cheap", "inexpensive", "b", 0.5);
  lex.Add("cheap", "CHEAP", "a");  // self pair
  lex.Add("pricey", "", "schema");
  EXPECT_EQ(lex.Lookup("cheap"), (std::set<std::string>{"inexpensive"}));
  EXPECT_TRUE(lex.Lookup("inexpensive").empty());
  EXPECT_TRUE(lex.Contains("pricey"));
  EXPECT_TRUE(lex.Lookup("pricey").empty());
  EXPECT_FALSE(lex.Contains("moderate"));
  EXPECT_EQ(lex.Sources("cheap", "inexpensive"), (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(lex.term_count(), 2u);
  EXPECT_EQ(lex.pair_count(), 1u);
}

TEST(LexiconTest, TsvRoundTrip) {
  SynonymLexicon lex;
  lex.Add("theater", "stage", "syn", 0.75);
  lex.Add("theater", "drama", "bt", 0.5);
  lex.Add("music", "", "schema");
  SynonymLexicon back = ParseLexicon(lex.ToTsv());
  EXPECT_EQ(back.ToTsv(), lex.ToTsv());
  EXPECT_EQ(back.term_count(), 2u);
  EXPECT_EQ(back.Lookup("theater"), (std::set<std::string>{"drama", "stage"}));
}

TEST(LexiconTest, ParseSkipsCommentsAndReportsBadLines) {
  auto lex = ParseLexicon("# header\n\nfast\tquick\tsyn\t1\n");
  EXPECT_EQ(lex.Lookup("fast"), (std::set<std::string>{"quick"}));
  try {
    ParseLexicon("fast\tquick\tsyn\t1\nbroken line\n", "lex.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.file(), "lex.tsv");
  }
  EXPECT_THROW(ParseLexicon("a\tb\tsrc\tnot-a-number\n"), ParseError);
}

TEST(LexiconTest, CachedProviderTopKAndMisses) {
  CachedProvider p("syn", ProviderKind::kSynonymApi,
                   {{"Theater", {{"drama", 0.5}, {"Stage", 0.9}, {"show", 0.5}}}});
  EXPECT_EQ(p.Expand("theater", 2), (std::vector<std::string>{"stage", "drama"}));
  EXPECT_EQ(p.Expand("theater", 10).size(), 3u);
  try {
    p.Expand("opera", 3);
    FAIL();
  } catch (const CacheMissError& e) {
    EXPECT_EQ(e.provider(), "syn");
    EXPECT_EQ(e.term(), "opera");
  }
}

TEST(LexiconTest, ExpandTermUnionsProviders) {
  CachedProvider a("a", ProviderKind::kSynonymApi, {{"cheap", {{"inexpensive", 1}, {"cheap", 0.9}}}});
  CachedProvider b("b", ProviderKind::kBackTranslation, {{"cheap", {{"low cost", 1}, {"inexpensive", 1}}}});
  EXPECT_EQ(ExpandTerm("Cheap", {&a, &b}, 5), (std::set<std::string>{"inexpensive", "low cost"}));
  EXPECT_EQ(ExpandTerm("cheap", {&a, &b}, 1), (std::set<std::string>{"inexpensive", "low cost"}));
  EXPECT_TRUE(ExpandTerm("cheap", {&a}, 0).empty());
  EXPECT_EQ(ParseProviderKind("back-translation"), ProviderKind::kBackTranslation);
  EXPECT_EQ(ProviderKindName(ProviderKind::kSynonymApi), "synonym-api");
  EXPECT_THROW(ParseProviderKind("thesaurus"), UsageError);
}

const char* kSchema = R"([{
  "service_name": "Shows", "description": "",
  "slots": [
    {"name": "genre", "description": "Genre of the show", "is_categorical": true,
     "possible_values": ["Theater", "Stand Up"]},
    {"name": "seats", "description": "Seats wanted", "is_categorical": true, "possible_values": ["1", "2"]},
    {"name": "outdoor", "description": "Whether it is outdoors", "is_categorical": true,
     "possible_values": ["False", "True"]}
  ],
  "intents": []
}])";

TEST(LexiconTest, TermsAreDescriptionWordsAndTextValues) {
  Schema s = ParseSchema(kSchema);
  EXPECT_EQ(LexiconTerms(s),
            (std::vector<std::string>{"genre", "show", "theater", "stand up", "seats", "wanted", "outdoors"}));
}

TEST(LexiconTest, BuildLexiconRegistersEveryTermAndReportsFailures) {
  Schema s = ParseSchema(kSchema);
  std::map<std::string, std::vector<std::pair<std::string, double>>> cache;
  for (const auto& t : LexiconTerms(s)) cache[t] = {};
  cache["theater"] = {{"drama", 1.0}, {"stage", 0.8}};
  CachedProvider full("full", ProviderKind::kSynonymApi, cache);
  SynonymLexicon lex = BuildLexicon(s, {&full}, 1);
  EXPECT_EQ(lex.term_count(), 7u);
  EXPECT_EQ(lex.Lookup("theater"), (std::set<std::string>{"drama"}));

  cache.erase("genre");
  cache.erase("outdoors");
  CachedProvider holes("holes", ProviderKind::kBackTranslation, cache);
  try {
    BuildLexicon(s, {&holes}, 1);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 lexicon expansion(s) failed"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'genre' via holes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'outdoors' via holes"), std::string::npos) << msg;
  }
}

TEST(LexiconTest, CommittedCachesCoverSchemaTerms) {
  Schema s = LoadSchema(testing::DataPath("sgd/schema.json"));
  CachedProvider syn("synonym_api", ProviderKind::kSynonymApi, testing::DataPath("lexicon/synonym_api.tsv"));
  CachedProvider bt("back_translation", ProviderKind::kBackTranslation,
                    testing::DataPath("lexicon/back_translation.tsv"));
  SynonymLexicon lex = BuildLexicon(s, {&syn, &bt}, 10);
  SynonymLexicon committed = LoadLexicon(testing::DataPath("lexicon/lexicon.tsv"));
  EXPECT_EQ(lex.ToTsv(), committed.ToTsv());
}

// Minimal expansion service on a loopback port.
class ExpansionServer {
 public:
  ExpansionServer() {
    server_.Get("/v1/expand", [](const httplib::Request& req, httplib::Response& res) {
      const std::string term = req.get_param_value("term");
      const size_t k = std::stoul(req.get_param_value("k"));
      if (term == "missing") {
        res.status = 404;
        return;
      }
      if (term == "garbage") {
        res.set_content("not json", "text/plain");
        return;
      }
      nlohmann::json body = {{"term", term}, {"expansions", nlohmann::json::array()}};
      if (term == "cheap") {
        body["expansions"] = {{{"text", "Low Cost"}, {"score", 0.4}},
                              {{"text", "inexpensive"}, {"score", 0.9}},
                              {{"text", "budget"}, {"score", 0.1}}};
      }
      while (body["expansions"].size() > k + 1) body["expansions"].erase(body["expansions"].size() - 1);
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ExpansionServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(LexiconTest, HttpProviderAndPopulateCache) {
  ExpansionServer server;
  HttpProvider http("web", ProviderKind::kSynonymApi, server.url(), 2000);
  auto got = http.ExpandScored("cheap", 2);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].first, "inexpensive");
  EXPECT_EQ(got[1].first, "low cost");
  EXPECT_THROW(http.ExpandScored("missing", 2), CacheMissError);
  EXPECT_THROW(http.ExpandScored("garbage", 2), ProtocolError);

  testing::TempDir dir;
  PopulateCache(http, {"Cheap", "quiet"}, 2, dir.File("web.tsv"));
  CachedProvider cached("web", ProviderKind::kSynonymApi, dir.File("web.tsv"));
  EXPECT_EQ(cached.ExpandScored("cheap", 2), got);
  EXPECT_TRUE(cached.ExpandScored("quiet", 2).empty());  // recorded, so no miss
  EXPECT_THROW(PopulateCache(http, {"missing"}, 2, dir.File("x.tsv")), CacheMissError);

  HttpProvider dead("dead", ProviderKind::kSynonymApi, "http://127.0.0.1:1", 500);
  EXPECT_THROW(dead.ExpandScored("cheap", 2), TransportError);
}

}  // namespace
}  // namespace dst
