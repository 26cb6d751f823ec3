#include "dst/text.h"

#include <gtest/gtest.h>

#include "dst/errors.h"
#include "dst/numerals.h"

namespace dst {
namespace {

TEST(TextTest, Normalize) {
  EXPECT_EQ(NormalizeText("  San   JOSE\t now "), "san jose now");
  EXPECT_EQ(NormalizeText(""), "");
  EXPECT_EQ(Trim("  a b  "), "a b");
}

TEST(TextTest, TokenizeSplitsPunctuationAndKeepsOffsets) {
  auto ctx = TokenizeWithOffsets("User: I'd like 2 seats.");
  std::vector<std::string> want = {"user", ":", "i", "'", "d", "like", "2", "seats", "."};
  EXPECT_EQ(ctx.tokens, want);
  EXPECT_EQ(ctx.offsets[0], (CharSpan{0, 4}));
  EXPECT_EQ(ctx.offsets[1], (CharSpan{4, 5}));
  EXPECT_EQ(ctx.offsets[7], (CharSpan{17, 22}));
  EXPECT_EQ(ctx.Slice(5, 7), "like 2 seats");
  EXPECT_EQ(Tokenize("A-b"), (std::vector<std::string>{"a", "-", "b"}));
}

TEST(TextTest, MasksLongDigitRunsOnly) {
  EXPECT_EQ(MaskPhoneNumbers("call 408-555-0123 now"), "call phone now");
  EXPECT_EQ(MaskPhoneNumbers("(408) 555 0123"), "phone");
  EXPECT_EQ(MaskPhoneNumbers("4085550"), "phone");
  EXPECT_EQ(MaskPhoneNumbers("408555"), "408555");
  EXPECT_EQ(MaskPhoneNumbers("at 7 for 2"), "at 7 for 2");
  EXPECT_EQ(MaskPhoneNumbers(MaskPhoneNumbers("x 1234567 y")), "x phone y");
}

TEST(TextTest, FindPhraseRespectsWordBoundaries) {
  auto hits = FindPhrase("Denver and denverite and DENVER", "denver");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0], (CharSpan{0, 6}));
  EXPECT_EQ(hits[1], (CharSpan{25, 31}));
  EXPECT_TRUE(ContainsPhrase("a live band", "live band"));
  EXPECT_FALSE(ContainsPhrase("alive band", "live band"));
  EXPECT_FALSE(ContainsPhrase("anything", ""));
}

TEST(TextTest, ContentWords) {
  // Generic schema words such as "name" carry no signal and are dropped.
  EXPECT_EQ(ContentWords("The name of the cozy restaurant, the Restaurant!"),
            (std::vector<std::string>{"cozy", "restaurant"}));
  EXPECT_TRUE(IsStopword("the"));
  EXPECT_FALSE(IsStopword("city"));
  EXPECT_EQ(HumanizeName("star_rating"), "star rating");
}

TEST(NumeralsTest, WordsForEveryValue) {
  EXPECT_EQ(NumberToWords(0), "zero");
  EXPECT_EQ(NumberToWords(13), "thirteen");
  EXPECT_EQ(NumberToWords(21), "twenty-one");
  EXPECT_EQ(NumberToWords(40), "forty");
  EXPECT_EQ(NumberToWords(99), "ninety-nine");
  EXPECT_EQ(NumberToWords(100), "one hundred");
  EXPECT_THROW(NumberToWords(101), UnsupportedValueError);
  EXPECT_THROW(NumberToWords(-1), UnsupportedValueError);
}

TEST(NumeralsTest, Parse) {
  EXPECT_EQ(ParseNumeral("twenty one"), 21);
  EXPECT_EQ(ParseNumeral(" Twenty-One "), 21);
  EXPECT_EQ(ParseNumeral("a hundred"), 100);
  EXPECT_EQ(ParseNumeral("007"), 7);
  EXPECT_EQ(ParseNumeral("101"), std::nullopt);
  EXPECT_EQ(ParseNumeral("two people"), std::nullopt);
  EXPECT_EQ(ParseNumeral(""), std::nullopt);
}

TEST(NumeralsTest, FindAndRestore) {
  EXPECT_EQ(FindFirstNumeral("a table for four at 7"), 4);
  EXPECT_EQ(FindFirstNumeral("no numbers here"), std::nullopt);
  // "one" inside "someone" is not a number.
  EXPECT_EQ(FindFirstNumeral("someone wants 3"), 3);

  auto span = RestoreNumericSpan("Book it for two people", "2");
  ASSERT_TRUE(span);
  EXPECT_EQ(*span, (CharSpan{12, 15}));
  span = RestoreNumericSpan("Book it for 2 people", "2");
  ASSERT_TRUE(span);
  EXPECT_EQ(*span, (CharSpan{12, 13}));
  EXPECT_FALSE(RestoreNumericSpan("for 22 people", "2"));
  EXPECT_THROW(RestoreNumericSpan("x", "many"), UnsupportedValueError);
}

}  // namespace
}  // namespace dst
