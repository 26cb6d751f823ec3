#include "dst/text.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace dst {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool IsPunct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsAlnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char Lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool IsPhoneSeparator(char c) { return c == '-' || c == ' ' || c == '(' || c == ')'; }

}  // namespace

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

std::string ToLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = Lower(c);
  return out;
}

std::string NormalizeText(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(Lower(c));
  }
  return out;
}

std::string_view TokenizedContext::Slice(size_t first, size_t last) const {
  const size_t begin = offsets.at(first).start;
  const size_t end = offsets.at(last).end;
  return std::string_view(text).substr(begin, end - begin);
}

TokenizedContext TokenizeWithOffsets(std::string_view text) {
  TokenizedContext out;
  out.text = std::string(text);
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (IsSpace(c)) {
      ++i;
      continue;
    }
    if (IsPunct(c)) {
      out.tokens.emplace_back(1, c);
      out.offsets.push_back({i, i + 1});
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && !IsSpace(text[j]) && !IsPunct(text[j])) ++j;
    out.tokens.push_back(ToLower(text.substr(i, j - i)));
    out.offsets.push_back({i, j});
    i = j;
  }
  out.segment_boundary = out.tokens.size();
  return out;
}

std::vector<std::string> Tokenize(std::string_view text) {
  return TokenizeWithOffsets(text).tokens;
}

std::string MaskPhoneNumbers(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    // A run starts at a digit, or at '(' directly followed by a digit.
    bool starts = IsDigit(text[i]) ||
                  (text[i] == '(' && i + 1 < text.size() && IsDigit(text[i + 1]));
    if (!starts) {
      out.push_back(text[i++]);
      continue;
    }
    size_t j = i;
    size_t last_digit_end = i;
    int digits = 0;
    while (j < text.size() && (IsDigit(text[j]) || IsPhoneSeparator(text[j]))) {
      if (IsDigit(text[j])) {
        ++digits;
        last_digit_end = j + 1;
      }
      ++j;
    }
    if (digits >= 7) {
      out += "phone";
    } else {
      out.append(text.substr(i, last_digit_end - i));
    }
    // Trailing separators are not part of the run.
    i = last_digit_end;
  }
  return out;
}

std::vector<CharSpan> FindPhrase(std::string_view text, std::string_view phrase) {
  std::vector<CharSpan> hits;
  std::string_view p = Trim(phrase);
  if (p.empty() || p.size() > text.size()) return hits;
  const std::string lt = ToLower(text);
  const std::string lp = ToLower(p);
  size_t pos = lt.find(lp);
  while (pos != std::string::npos) {
    size_t end = pos + lp.size();
    bool left_ok = pos == 0 || !IsAlnum(lt[pos - 1]) || !IsAlnum(lp.front());
    bool right_ok = end == lt.size() || !IsAlnum(lt[end]) || !IsAlnum(lp.back());
    if (left_ok && right_ok) hits.push_back({pos, end});
    pos = lt.find(lp, pos + 1);
  }
  return hits;
}

bool ContainsPhrase(std::string_view text, std::string_view phrase) {
  return !FindPhrase(text, phrase).empty();
}

bool IsStopword(std::string_view w) {
  static const std::unordered_set<std::string_view> kStopwords = {
      "a",     "an",    "the",   "of",    "to",    "in",    "on",    "for",
      "and",   "or",    "is",    "are",   "was",   "be",    "by",    "with",
      "at",    "from",  "as",    "it",    "its",   "this",  "that",  "which",
      "who",   "whom",  "whose", "what",  "when",  "where", "how",   "whether",
      "if",    "not",   "no",    "yes",   "do",    "does",  "did",   "has",
      "have",  "had",   "can",   "will",  "would", "should", "there", "their",
      "they",  "them",  "he",    "she",   "his",   "her",   "you",   "your",
      "we",    "our",   "i",     "me",    "my",    "any",   "all",   "some",
      "one",   "per",   "into",  "about", "than",  "then",  "also", "such",
      "user",  "system", "name", "number", "type", "other", "being", "been"};
  return kStopwords.count(w) > 0;
}

std::vector<std::string> ContentWords(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& tok : Tokenize(text)) {
    if (tok.size() < 3 || IsStopword(tok)) continue;
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return IsAlnum(c) || (c & 0x80); })) continue;
    if (std::find(out.begin(), out.end(), tok) == out.end()) out.push_back(tok);
  }
  return out;
}

std::string HumanizeName(std::string_view name) {
  std::string out(name);
  std::replace(out.begin(), out.end(), '_', ' ');
  return NormalizeText(out);
}

}  // namespace dst
