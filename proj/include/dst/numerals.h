#ifndef DST_NUMERALS_H_
#define DST_NUMERALS_H_

#include <optional>
#include <string>
#include <string_view>

#include "dst/text.h"

namespace dst {

inline constexpr int kMaxNumeral = 100;

// English cardinal for 0..100: "zero", "seven", "twenty-one",
// "one hundred". Throws UnsupportedValueError outside that range.
std::string NumberToWords(int value);

// Parses an Arabic numeral or an English cardinal (hyphen or space
// compounds, "a hundred"/"one hundred") in 0..100. The whole trimmed
// string must be the number.
std::optional<int> ParseNumeral(std::string_view text);

// First number in 0..100 inside `text`, in either surface form.
std::optional<int> FindFirstNumeral(std::string_view text);

// Char span of the first occurrence of `value` in `utterance`, written as
// digits or as words, on word boundaries. Throws UnsupportedValueError if
// `value` is not an integer in 0..100.
std::optional<CharSpan> RestoreNumericSpan(std::string_view utterance,
                                           std::string_view value);

}  // namespace dst

#endif  // DST_NUMERALS_H_
