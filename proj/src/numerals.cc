#include "dst/numerals.h"

#include <array>
#include <cctype>
#include <charconv>
#include <regex>
#include <unordered_map>
#include <vector>

#include "dst/errors.h"

namespace dst {

namespace {

constexpr std::array<const char*, 20> kUnits = {
    "zero",    "one",     "two",       "three",    "four",
    "five",    "six",     "seven",     "eight",    "nine",
    "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
constexpr std::array<const char*, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

constexpr const char* kUnitAlternation = "one|two|three|four|five|six|seven|eight|nine";

bool IsDigitChar(char c) { return c >= '0' && c <= '9'; }

std::string WordPattern(int v) {
  if (v < 20) return kUnits[v];
  if (v == 100) return "(?:(?:one|a)\\s+)?hundred";
  std::string tens = kTens[v / 10];
  if (v % 10 == 0) return tens;
  return tens + "(?:-|\\s+)" + kUnits[v % 10];
}

std::string LookaheadGuard(int v) {
  if (v >= 20 && v < 100 && v % 10 == 0) {
    return std::string("(?!(?:-|\\s+)(?:") + kUnitAlternation + ")\\b)";
  }
  if (v == 1) return "(?!\\s+hundred\\b)";
  return "";
}

const std::vector<std::regex>& ValuePatterns() {
  static const std::vector<std::regex> patterns = [] {
    std::vector<std::regex> out;
    out.reserve(kMaxNumeral + 1);
    for (int v = 0; v <= kMaxNumeral; ++v) {
      std::string p = "\\b(?:" + std::to_string(v) + "|" + WordPattern(v) + ")\\b" +
                      LookaheadGuard(v);
      out.emplace_back(p, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    }
    return out;
  }();
  return patterns;
}

// "twenty-one" must not yield "one"; "1.5" and "11:30" must not yield
// their digit pieces.
bool AcceptMatch(std::string_view text, size_t start, size_t end) {
  if (start >= 2 && (text[start - 1] == '.' || text[start - 1] == ':' || text[start - 1] == ',') &&
      IsDigitChar(text[start - 2]) && IsDigitChar(text[start])) {
    return false;
  }
  if (end + 1 < text.size() && (text[end] == '.' || text[end] == ':' || text[end] == ',') &&
      IsDigitChar(text[end + 1]) && IsDigitChar(text[end - 1])) {
    return false;
  }
  if (std::isalpha(static_cast<unsigned char>(text[start]))) {
    size_t k = start;
    while (k > 0 && (text[k - 1] == '-' || text[k - 1] == ' ')) --k;
    if (k < start) {
      size_t w = k;
      while (w > 0 && std::isalpha(static_cast<unsigned char>(text[w - 1]))) --w;
      std::string prev = ToLower(text.substr(w, k - w));
      for (int t = 2; t < 10; ++t) {
        if (prev == kTens[t]) return false;
      }
    }
  }
  return true;
}

std::optional<CharSpan> FindValue(std::string_view text, int v) {
  const std::regex& re = ValuePatterns()[v];
  auto begin = text.begin();
  std::match_results<std::string_view::const_iterator> m;
  auto it = begin;
  while (std::regex_search(it, text.end(), m, re,
                           it == begin ? std::regex_constants::match_default
                                       : std::regex_constants::match_prev_avail)) {
    size_t start = static_cast<size_t>(m[0].first - begin);
    size_t end = static_cast<size_t>(m[0].second - begin);
    if (AcceptMatch(text, start, end)) return CharSpan{start, end};
    it = m[0].first + 1;
  }
  return std::nullopt;
}

const std::unordered_map<std::string, int>& WordForms() {
  static const std::unordered_map<std::string, int> forms = [] {
    std::unordered_map<std::string, int> out;
    for (int v = 0; v <= kMaxNumeral; ++v) {
      std::string w = NumberToWords(v);
      out[w] = v;
      std::string spaced = w;
      for (char& c : spaced) {
        if (c == '-') c = ' ';
      }
      out[spaced] = v;
    }
    out["hundred"] = 100;
    out["a hundred"] = 100;
    return out;
  }();
  return forms;
}

}  // namespace

std::string NumberToWords(int value) {
  if (value < 0 || value > kMaxNumeral) {
    throw UnsupportedValueError("numeral out of supported range 0..100: " + std::to_string(value));
  }
  if (value < 20) return kUnits[value];
  if (value == 100) return "one hundred";
  std::string out = kTens[value / 10];
  if (value % 10 != 0) out += std::string("-") + kUnits[value % 10];
  return out;
}

std::optional<int> ParseNumeral(std::string_view text) {
  std::string norm = NormalizeText(text);
  if (norm.empty()) return std::nullopt;
  if (std::all_of(norm.begin(), norm.end(), IsDigitChar)) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(norm.data(), norm.data() + norm.size(), v);
    if (ec != std::errc() || ptr != norm.data() + norm.size()) return std::nullopt;
    if (v > kMaxNumeral) return std::nullopt;
    return v;
  }
  auto it = WordForms().find(norm);
  if (it == WordForms().end()) return std::nullopt;
  return it->second;
}

std::optional<int> FindFirstNumeral(std::string_view text) {
  std::optional<int> best;
  CharSpan best_span;
  for (int v = 0; v <= kMaxNumeral; ++v) {
    auto span = FindValue(text, v);
    if (!span) continue;
    bool better = !best || span->start < best_span.start ||
                  (span->start == best_span.start && span->end > best_span.end);
    if (better) {
      best = v;
      best_span = *span;
    }
  }
  return best;
}

std::optional<CharSpan> RestoreNumericSpan(std::string_view utterance, std::string_view value) {
  std::string_view v = Trim(value);
  int n = -1;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || n < 0 || n > kMaxNumeral) {
    throw UnsupportedValueError("cannot restore numeric span for value '" + std::string(value) +
                                "': expected an integer in 0..100");
  }
  return FindValue(utterance, n);
}

}  // namespace dst
