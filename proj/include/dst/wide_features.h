#ifndef DST_WIDE_FEATURES_H_
#define DST_WIDE_FEATURES_H_

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dst/corpus.h"
#include "dst/lexicon.h"
#include "dst/schema.h"

namespace dst {

inline constexpr size_t kWideFeatureCount = 83;
inline constexpr int kWideLayoutVersion = 1;

// Hand-crafted binary features for one (history, slot, candidate) triple.
// The index layout is listed in docs/FEATURES.md and by WideFeatureName.
struct WideFeatureVector {
  std::array<double, kWideFeatureCount> values{};
  int layout_version = kWideLayoutVersion;

  double operator[](size_t i) const { return values[i]; }
  bool operator==(const WideFeatureVector&) const = default;
};

// Index of the first feature in each group.
namespace wide {
inline constexpr size_t kToneInterrogative = 0;
inline constexpr size_t kToneNegative = 1;
inline constexpr size_t kToneDeclarative = 2;
inline constexpr size_t kDescUser = 3;  // then syn, system, syn, anywhere, syn
inline constexpr size_t kValueUser = 9;  // same six-way split
inline constexpr size_t kPrevSysAct = 15;  // INFORM, REQUEST, OFFER, CONFIRM
inline constexpr size_t kUserYes = 19;
inline constexpr size_t kUserNo = 20;
inline constexpr size_t kRequested = 21;
inline constexpr size_t kTurnBucket = 22;  // 10 buckets
inline constexpr size_t kSlotNameMentioned = 32;
inline constexpr size_t kValueMentionedByUser = 33;
inline constexpr size_t kIsDontCare = 34;
inline constexpr size_t kIsUnknown = 35;
inline constexpr size_t kIsTrue = 36;
inline constexpr size_t kIsFalse = 37;
inline constexpr size_t kIsSchemaValue = 38;
inline constexpr size_t kOfferedBySystem = 39;
inline constexpr size_t kPrevSysInformValue = 40;
inline constexpr size_t kPrevSysConfirmValue = 41;
inline constexpr size_t kEarlierSysAct = 42;  // INFORM, REQUEST, OFFER, CONFIRM
inline constexpr size_t kDontCareCueUser = 46;  // both only for the dontcare candidate
inline constexpr size_t kDontCareCueAnyUser = 47;
inline constexpr size_t kNegatedMention = 48;
inline constexpr size_t kFirstMentionUser = 49;
inline constexpr size_t kFirstMentionSystem = 50;
inline constexpr size_t kLatestCandidate = 51;
inline constexpr size_t kValueOverlap = 52;  // 4 buckets
inline constexpr size_t kDescOverlap = 56;  // 4 buckets
inline constexpr size_t kHistoryLength = 60;  // 6 buckets
inline constexpr size_t kUtteranceLength = 66;  // 5 buckets
inline constexpr size_t kSlotBoolean = 71;
inline constexpr size_t kSlotText = 72;
inline constexpr size_t kPrevSysQuestion = 73;
inline constexpr size_t kConfirmedYes = 74;
inline constexpr size_t kConfirmedNo = 75;
inline constexpr size_t kOfferedYes = 76;
inline constexpr size_t kOfferedNo = 77;
inline constexpr size_t kConfirmFlipped = 78;
inline constexpr size_t kRequestedAnswered = 79;
inline constexpr size_t kTrueWithDesc = 80;
inline constexpr size_t kFalseNegatedDesc = 81;
inline constexpr size_t kReserved = 82;
}  // namespace wide

std::string_view WideFeatureName(size_t index);

enum class Tone { kInterrogative, kNegative, kDeclarative };

// Interrogative: trailing '?' or a leading wh-word/auxiliary. Negative:
// no, not, n't, never, nothing, none, nope, nah or "don't need".
// Interrogative wins when both match.
Tone DetectTone(std::string_view utterance);

// Leading {yes, yeah, sure, correct} / {no, nope, nah}.
bool IsYesAnswer(std::string_view utterance);
bool IsNoAnswer(std::string_view utterance);
bool HasDontCareCue(std::string_view utterance);

struct WideInputs {
  const std::vector<Turn>* turns = nullptr;
  size_t turn_index = 0;  // a USER turn
  size_t from = 0;        // first turn of the visible history window
  std::string service;
  // Requested slots of the current turn (predicted at inference, gold in
  // training). nullptr leaves the feature at zero.
  const std::set<std::string>* requested_slots = nullptr;
};

// Pure. Throws UsageError when turn_index is not a USER turn inside the
// window.
WideFeatureVector ExtractWideFeatures(const WideInputs& in, const SlotDef& slot,
                                      std::string_view candidate, const SynonymLexicon& lexicon);

// Throws CompatibilityError when `found` differs from kWideLayoutVersion.
void CheckWideLayout(int found);

}  // namespace dst

#endif  // DST_WIDE_FEATURES_H_
