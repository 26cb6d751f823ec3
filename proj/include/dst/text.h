#ifndef DST_TEXT_H_
#define DST_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dst {

std::string_view Trim(std::string_view s);
std::string ToLower(std::string_view s);

// Lowercase and collapse runs of whitespace to a single space, trimmed.
std::string NormalizeText(std::string_view s);

struct CharSpan {
  size_t start = 0;
  size_t end = 0;  // exclusive
  bool operator==(const CharSpan&) const = default;
};

struct TokenizedContext {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<CharSpan> offsets;
  // Index at which the question/description segment starts. Contexts that
  // hold only dialogue history set this to tokens.size().
  size_t segment_boundary = 0;

  size_t size() const { return tokens.size(); }
  // Original-text slice covering tokens [first, last].
  std::string_view Slice(size_t first, size_t last) const;
};

// Lowercased tokens split on whitespace, with every ASCII punctuation
// character as its own token. Offsets index the original string.
TokenizedContext TokenizeWithOffsets(std::string_view text);
std::vector<std::string> Tokenize(std::string_view text);

// Replaces each maximal run of digits joined by '-', ' ', '(' or ')' that
// contains at least 7 digits with the literal "phone".
std::string MaskPhoneNumbers(std::string_view text);

// Case-insensitive occurrences of `phrase` in `text` whose ends fall on
// word boundaries (neither neighbour is alphanumeric).
std::vector<CharSpan> FindPhrase(std::string_view text, std::string_view phrase);
bool ContainsPhrase(std::string_view text, std::string_view phrase);

bool IsStopword(std::string_view lowercase_word);

// Lowercased non-stopword alphanumeric tokens of length >= 3, in order of
// first appearance, no duplicates.
std::vector<std::string> ContentWords(std::string_view text);

// "star_rating" -> "star rating".
std::string HumanizeName(std::string_view name);

}  // namespace dst

#endif  // DST_TEXT_H_
