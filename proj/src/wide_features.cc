#include "dst/wide_features.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <regex>

#include "dst/errors.h"
#include "dst/text.h"

namespace dst {

namespace {

constexpr std::array<std::string_view, 4> kActs = {"INFORM", "REQUEST", "OFFER", "CONFIRM"};

constexpr std::array<std::string_view, kWideFeatureCount> kNames = {
    "tone_interrogative",
    "tone_negative",
    "tone_declarative",
    "desc_in_user",
    "desc_syn_in_user",
    "desc_in_last_system",
    "desc_syn_in_last_system",
    "desc_anywhere",
    "desc_syn_anywhere",
    "value_in_user",
    "value_syn_in_user",
    "value_in_last_system",
    "value_syn_in_last_system",
    "value_anywhere",
    "value_syn_anywhere",
    "prev_sys_inform_slot",
    "prev_sys_request_slot",
    "prev_sys_offer_slot",
    "prev_sys_confirm_slot",
    "user_yes",
    "user_no",
    "slot_requested",
    "user_turn_0",
    "user_turn_1",
    "user_turn_2",
    "user_turn_3",
    "user_turn_4",
    "user_turn_5",
    "user_turn_6",
    "user_turn_7",
    "user_turn_8",
    "user_turn_9_plus",
    "slot_name_mentioned",
    "value_mentioned_by_user",
    "cand_dontcare",
    "cand_unknown",
    "cand_true",
    "cand_false",
    "cand_schema_value",
    "cand_offered_by_system",
    "prev_sys_inform_value",
    "prev_sys_confirm_value",
    "earlier_sys_inform_slot",
    "earlier_sys_request_slot",
    "earlier_sys_offer_slot",
    "earlier_sys_confirm_slot",
    "dontcare_cue_user_x_cand_dontcare",
    "dontcare_cue_any_user_x_cand_dontcare",
    "negated_value_mention",
    "value_first_by_user",
    "value_first_by_system",
    "value_latest_candidate",
    "value_overlap_0",
    "value_overlap_lt_half",
    "value_overlap_lt_1",
    "value_overlap_1",
    "desc_overlap_0",
    "desc_overlap_lt_half",
    "desc_overlap_lt_1",
    "desc_overlap_1",
    "history_1_2",
    "history_3_4",
    "history_5_8",
    "history_9_16",
    "history_17_32",
    "history_33_plus",
    "user_len_1_3",
    "user_len_4_7",
    "user_len_8_15",
    "user_len_16_31",
    "user_len_32_plus",
    "slot_boolean",
    "slot_text",
    "prev_sys_question",
    "confirmed_value_yes",
    "confirmed_value_no",
    "offered_value_yes",
    "offered_value_no",
    "confirm_rejected_opposite",
    "requested_and_answered",
    "true_with_desc",
    "false_negated_desc",
    "reserved",
};

const std::regex& QuestionRe() {
  static const std::regex re(
      R"(^\s*(what|which|who|whom|whose|when|where|why|how|is|are|was|were|do|does|did|can|could|will|would|should|shall|may|might|have|has)\b|\?\s*$)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& NegativeRe() {
  static const std::regex re(
      R"(\b(no|not|never|nothing|none|nope|nah)\b|n't\b|\bdon'?t need\b)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& YesRe() {
  static const std::regex re(R"(^\W*(yes|yeah|sure|correct)\b)",
                             std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& NoRe() {
  static const std::regex re(R"(^\W*(no|nope|nah)\b)", std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& DontCareRe() {
  static const std::regex re(
      R"(\b(don'?t care|do not care|doesn'?t matter|does not matter|no preference|anything (is )?(fine|ok|okay|works)|whatever|either (one )?is fine|any (of them|one) (is|will be) fine)\b)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

bool Search(std::string_view s, const std::regex& re) {
  return std::regex_search(s.begin(), s.end(), re);
}

bool IsSentinel(std::string_view candidate) {
  return candidate == kDontCare || candidate == kUnknown;
}

bool ContainsAny(std::string_view text, const std::vector<std::string>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const std::string& p) { return ContainsPhrase(text, p); });
}

// Position of the last occurrence of any phrase, as (turn, char offset).
std::optional<std::pair<size_t, size_t>> LastMention(const std::vector<Turn>& turns, size_t from,
                                                     size_t upto,
                                                     const std::vector<std::string>& phrases) {
  for (size_t t = upto + 1; t-- > from;) {
    std::optional<size_t> best;
    for (const auto& p : phrases) {
      auto hits = FindPhrase(turns[t].utterance, p);
      if (!hits.empty() && (!best || hits.back().start > *best)) best = hits.back().start;
    }
    if (best) return std::make_pair(t, *best);
  }
  return std::nullopt;
}

double Overlap(const std::vector<std::string>& needles, const std::set<std::string>& haystack) {
  if (needles.empty()) return 0.0;
  size_t hit = 0;
  for (const auto& n : needles) hit += haystack.count(n);
  return static_cast<double>(hit) / static_cast<double>(needles.size());
}

size_t OverlapBucket(double r) {
  if (r <= 0.0) return 0;
  if (r < 0.5) return 1;
  if (r < 1.0) return 2;
  return 3;
}

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : Tokenize(text)) {
    if (std::any_of(t.begin(), t.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); })) {
      out.push_back(std::move(t));
    }
  }
  return out;
}

bool IsNegator(const std::string& tok) {
  return tok == "no" || tok == "not" || tok == "never" || tok == "without" || tok == "nor" ||
         tok == "t";  // the tail of "n't"
}

// Some occurrence of `phrase` in `tokens` has a negator among the three
// preceding tokens.
bool NegatedOccurrence(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (!std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<long>(i))) continue;
    for (size_t k = i >= 3 ? i - 3 : 0; k < i; ++k) {
      if (IsNegator(tokens[k])) return true;
    }
  }
  return false;
}

bool SameValue(std::string_view a, std::string_view b) { return NormalizeText(a) == NormalizeText(b); }

struct ActView {
  std::array<bool, 4> slot_in_act{};
  std::vector<std::string> values[4];
};

ActView ActsFor(const Turn& turn, const std::string& service, const std::string& slot) {
  ActView v;
  const Frame* f = turn.FindFrame(service);
  if (f == nullptr) return v;
  for (const auto& a : f->actions) {
    if (a.slot != slot) continue;
    for (size_t k = 0; k < kActs.size(); ++k) {
      if (a.act == kActs[k]) {
        v.slot_in_act[k] = true;
        v.values[k].insert(v.values[k].end(), a.values.begin(), a.values.end());
      }
    }
  }
  return v;
}

bool HasValue(const std::vector<std::string>& values, std::string_view candidate) {
  return std::any_of(values.begin(), values.end(),
                     [&](const std::string& v) { return SameValue(v, candidate); });
}

}  // namespace

std::string_view WideFeatureName(size_t index) {
  if (index >= kNames.size()) throw UsageError("wide feature index out of range");
  return kNames[index];
}

Tone DetectTone(std::string_view utterance) {
  if (Search(utterance, QuestionRe())) return Tone::kInterrogative;
  if (Search(utterance, NegativeRe())) return Tone::kNegative;
  return Tone::kDeclarative;
}

bool IsYesAnswer(std::string_view utterance) { return Search(utterance, YesRe()); }
bool IsNoAnswer(std::string_view utterance) { return Search(utterance, NoRe()); }
bool HasDontCareCue(std::string_view utterance) { return Search(utterance, DontCareRe()); }

void CheckWideLayout(int found) {
  if (found != kWideLayoutVersion) {
    throw CompatibilityError("wide feature layout version " + std::to_string(found) +
                             " does not match this build (" + std::to_string(kWideLayoutVersion) +
                             ")");
  }
}

WideFeatureVector ExtractWideFeatures(const WideInputs& in, const SlotDef& slot,
                                      std::string_view candidate, const SynonymLexicon& lexicon) {
  if (in.turns == nullptr || in.turn_index >= in.turns->size() ||
      (*in.turns)[in.turn_index].speaker != Speaker::kUser || in.from > in.turn_index) {
    throw UsageError("wide features need a USER turn inside the history window");
  }
  const std::vector<Turn>& turns = *in.turns;
  const size_t t = in.turn_index;
  const std::string& user = turns[t].utterance;
  const Turn* prev_sys = (t > in.from && turns[t - 1].speaker == Speaker::kSystem) ? &turns[t - 1] : nullptr;
  const std::string empty;
  const std::string& sys = prev_sys ? prev_sys->utterance : empty;
  const SlotKind kind = ClassifySlot(slot);
  const bool sentinel = IsSentinel(candidate);

  WideFeatureVector fv;
  auto& f = fv.values;
  auto set = [&](size_t i, bool on) { f[i] = on ? 1.0 : 0.0; };

  // Tone of the current user utterance.
  Tone tone = DetectTone(user);
  set(wide::kToneInterrogative, tone == Tone::kInterrogative);
  set(wide::kToneNegative, tone == Tone::kNegative);
  set(wide::kToneDeclarative, tone == Tone::kDeclarative);

  // Description and candidate mentions, literal and via the lexicon.
  std::vector<std::string> desc_terms = ContentWords(slot.description);
  std::vector<std::string> desc_syns;
  for (const auto& term : desc_terms) {
    for (const auto& s : lexicon.Lookup(term)) desc_syns.push_back(s);
  }
  std::vector<std::string> value_terms;
  std::vector<std::string> value_syns;
  if (!sentinel) {
    value_terms.push_back(NormalizeText(candidate));
    for (const auto& s : lexicon.Lookup(candidate)) value_syns.push_back(s);
  }
  auto anywhere = [&](const std::vector<std::string>& phrases) {
    for (size_t i = in.from; i <= t; ++i) {
      if (ContainsAny(turns[i].utterance, phrases)) return true;
    }
    return false;
  };
  const bool desc_user = ContainsAny(user, desc_terms);
  const bool desc_syn_user = ContainsAny(user, desc_syns);
  set(wide::kDescUser + 0, desc_user);
  set(wide::kDescUser + 1, desc_syn_user);
  set(wide::kDescUser + 2, ContainsAny(sys, desc_terms));
  set(wide::kDescUser + 3, ContainsAny(sys, desc_syns));
  set(wide::kDescUser + 4, anywhere(desc_terms));
  set(wide::kDescUser + 5, anywhere(desc_syns));
  const bool value_user = ContainsAny(user, value_terms) || ContainsAny(user, value_syns);
  set(wide::kValueUser + 0, ContainsAny(user, value_terms));
  set(wide::kValueUser + 1, ContainsAny(user, value_syns));
  set(wide::kValueUser + 2, ContainsAny(sys, value_terms));
  set(wide::kValueUser + 3, ContainsAny(sys, value_syns));
  set(wide::kValueUser + 4, anywhere(value_terms));
  set(wide::kValueUser + 5, anywhere(value_syns));

  // Acts of the previous system turn and of earlier system turns.
  ActView prev = prev_sys ? ActsFor(*prev_sys, in.service, slot.name) : ActView{};
  for (size_t k = 0; k < kActs.size(); ++k) set(wide::kPrevSysAct + k, prev.slot_in_act[k]);
  std::array<bool, 4> earlier{};
  bool offered = false;
  for (size_t i = in.from; i < t; ++i) {
    if (turns[i].speaker != Speaker::kSystem) continue;
    ActView v = ActsFor(turns[i], in.service, slot.name);
    offered = offered || HasValue(v.values[2], candidate);
    if (prev_sys == &turns[i]) continue;
    for (size_t k = 0; k < kActs.size(); ++k) earlier[k] = earlier[k] || v.slot_in_act[k];
  }
  for (size_t k = 0; k < kActs.size(); ++k) set(wide::kEarlierSysAct + k, earlier[k]);

  const bool yes = IsYesAnswer(user);
  const bool no = IsNoAnswer(user);
  set(wide::kUserYes, yes);
  set(wide::kUserNo, no);
  set(wide::kRequested, in.requested_slots != nullptr && in.requested_slots->count(slot.name) > 0);
  set(wide::kTurnBucket + std::min<size_t>(t / 2, 9), true);

  set(wide::kSlotNameMentioned, anywhere({HumanizeName(slot.name)}));
  bool by_user = false;
  for (size_t i = in.from; i <= t && !sentinel; ++i) {
    if (turns[i].speaker == Speaker::kUser &&
        (ContainsAny(turns[i].utterance, value_terms) || ContainsAny(turns[i].utterance, value_syns))) {
      by_user = true;
    }
  }
  set(wide::kValueMentionedByUser, by_user);

  // Candidate kind.
  set(wide::kIsDontCare, candidate == kDontCare);
  set(wide::kIsUnknown, candidate == kUnknown);
  set(wide::kIsTrue, candidate == "True");
  set(wide::kIsFalse, candidate == "False");
  set(wide::kIsSchemaValue, std::find(slot.possible_values.begin(), slot.possible_values.end(),
                                      candidate) != slot.possible_values.end());
  set(wide::kOfferedBySystem, offered);
  set(wide::kPrevSysInformValue, HasValue(prev.values[0], candidate));
  set(wide::kPrevSysConfirmValue, HasValue(prev.values[3], candidate));

  // Don't-care cues, crossed with the dontcare candidate: a cue alone is
  // the same for every candidate and would cancel out of the ranking.
  const bool is_dontcare = candidate == kDontCare;
  set(wide::kDontCareCueUser, is_dontcare && HasDontCareCue(user));
  bool cue_any = false;
  for (size_t i = in.from; i <= t; ++i) {
    if (turns[i].speaker == Speaker::kUser && HasDontCareCue(turns[i].utterance)) cue_any = true;
  }
  set(wide::kDontCareCueAnyUser, is_dontcare && cue_any);
  const std::vector<std::string> user_tokens = WordTokens(user);
  bool negated = false;
  if (!sentinel) {
    negated = NegatedOccurrence(user_tokens, WordTokens(candidate));
    for (const auto& s : value_syns) negated = negated || NegatedOccurrence(user_tokens, WordTokens(s));
  }
  set(wide::kNegatedMention, negated);

  // Who mentioned the value first; whether it is the most recent candidate.
  if (!sentinel) {
    std::vector<std::string> all = value_terms;
    all.insert(all.end(), value_syns.begin(), value_syns.end());
    for (size_t i = in.from; i <= t; ++i) {
      if (ContainsAny(turns[i].utterance, all)) {
        set(turns[i].speaker == Speaker::kUser ? wide::kFirstMentionUser : wide::kFirstMentionSystem,
            true);
        break;
      }
    }
    auto mine = LastMention(turns, in.from, t, all);
    if (mine) {
      bool latest = true;
      for (const auto& other : slot.possible_values) {
        if (SameValue(other, candidate)) continue;
        std::vector<std::string> phrases = {NormalizeText(other)};
        for (const auto& s : lexicon.Lookup(other)) phrases.push_back(s);
        auto theirs = LastMention(turns, in.from, t, phrases);
        if (theirs && *theirs > *mine) latest = false;
      }
      set(wide::kLatestCandidate, latest);
    }
  }

  const std::set<std::string> user_set(user_tokens.begin(), user_tokens.end());
  set(wide::kValueOverlap + OverlapBucket(sentinel ? 0.0 : Overlap(WordTokens(candidate), user_set)),
      true);
  set(wide::kDescOverlap + OverlapBucket(Overlap(desc_terms, user_set)), true);

  const size_t window = t - in.from + 1;
  size_t hb = window <= 2 ? 0 : window <= 4 ? 1 : window <= 8 ? 2 : window <= 16 ? 3 : window <= 32 ? 4 : 5;
  set(wide::kHistoryLength + hb, true);
  const size_t ulen = user_tokens.size();
  size_t lb = ulen <= 3 ? 0 : ulen <= 7 ? 1 : ulen <= 15 ? 2 : ulen <= 31 ? 3 : 4;
  set(wide::kUtteranceLength + lb, true);

  set(wide::kSlotBoolean, kind == SlotKind::kBoolean);
  set(wide::kSlotText, kind == SlotKind::kText);
  set(wide::kPrevSysQuestion, prev_sys != nullptr && DetectTone(sys) == Tone::kInterrogative);

  // Crosses between system acts and the user's answer.
  const bool confirmed = HasValue(prev.values[3], candidate);
  const bool offered_now = HasValue(prev.values[2], candidate);
  set(wide::kConfirmedYes, confirmed && yes);
  set(wide::kConfirmedNo, confirmed && no);
  set(wide::kOfferedYes, offered_now && yes);
  set(wide::kOfferedNo, offered_now && no);
  bool flipped = false;
  if (kind == SlotKind::kBoolean && no) {
    if (candidate == "False" && HasValue(prev.values[3], "True")) flipped = true;
    if (candidate == "True" && HasValue(prev.values[3], "False")) flipped = true;
  }
  set(wide::kConfirmFlipped, flipped);
  set(wide::kRequestedAnswered, prev.slot_in_act[1] && value_user);
  const bool desc_here = desc_user || desc_syn_user;
  set(wide::kTrueWithDesc, candidate == "True" && desc_here);
  set(wide::kFalseNegatedDesc, candidate == "False" && tone == Tone::kNegative && desc_here);
  set(wide::kReserved, false);
  return fv;
}

}  // namespace dst
