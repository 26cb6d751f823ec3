#ifndef DST_CORPUS_H_
#define DST_CORPUS_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dst/schema.h"
#include "dst/text.h"
#include "json.hpp"

namespace dst {

enum class Speaker { kUser, kSystem };

std::string_view SpeakerName(Speaker s);

struct Action {
  std::string act;  // INFORM, REQUEST, OFFER, CONFIRM, ...
  std::string slot;  // empty when the act carries no slot
  std::vector<std::string> values;
};

struct SpanAnnotation {
  std::string slot;
  size_t start = 0;
  size_t end = 0;  // exclusive
};

struct FrameState {
  std::string active_intent = "NONE";
  std::set<std::string> requested_slots;
  // Every slot maps to its accepted surface variants; the first one is
  // the canonical value.
  std::map<std::string, std::vector<std::string>> slot_values;

  bool operator==(const FrameState&) const = default;
};

struct Frame {
  std::string service;
  std::optional<FrameState> state;
  std::vector<Action> actions;
  std::vector<SpanAnnotation> spans;
  nlohmann::json extra = nlohmann::json::object();
};

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string utterance;
  std::vector<Frame> frames;
  nlohmann::json extra = nlohmann::json::object();

  const Frame* FindFrame(std::string_view service) const;
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<std::string> services;
  std::vector<Turn> turns;
  nlohmann::json extra = nlohmann::json::object();
};

// Parses one dialogue file (a JSON array of dialogues). Throws ParseError
// for malformed text and ValidationError naming the dialogue for
// structural problems.
std::vector<Dialogue> ParseDialogues(std::string_view text, const Schema& schema,
                                     const std::string& source_name = "");

// `path` may be a single file or a directory; directories contribute every
// "dialogues_*.json" file (or every *.json other than schema.json when no
// such file exists), in sorted filename order.
std::vector<Dialogue> LoadDialogues(const std::string& path, const Schema& schema);

void ValidateDialogue(const Dialogue& dialogue, const Schema& schema);

nlohmann::json DialogueToJson(const Dialogue& dialogue);
nlohmann::json DialoguesToJson(const std::vector<Dialogue>& dialogues);
void WriteDialogues(const std::vector<Dialogue>& dialogues, const std::string& path);

// ---------------------------------------------------------------------------
// History construction.

enum class HistoryMode { kMrc, kWd, kClassifier };

inline constexpr int kClassifierWindow = 9;

struct HistorySegment {
  size_t turn_index = 0;
  size_t start = 0;      // first char of the utterance text in History::text
  size_t end = 0;        // exclusive
  bool is_copy = false;  // the duplicated final user utterance (MRC mode)
};

struct History {
  std::string text;
  std::vector<HistorySegment> segments;
};

// Tagged, phone-masked history for turns [from, upto]. Throws UsageError
// when `upto` is out of range, is not a USER turn, or `from` > `upto`.
History BuildHistoryText(const std::vector<Turn>& turns, size_t upto, HistoryMode mode,
                         size_t from = 0);
std::string BuildHistory(const std::vector<Turn>& turns, size_t upto, HistoryMode mode,
                         size_t from = 0);

// ---------------------------------------------------------------------------
// Training examples.

enum class Task { kMrc, kWd, kIntent, kReqSlot };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

struct TokenSpan {
  size_t start = 0;
  size_t end = 0;  // inclusive
  bool operator==(const TokenSpan&) const = default;
};

struct ExampleRef {
  std::string dialogue_id;
  size_t dialogue_index = 0;
  size_t turn_index = 0;
  std::string service;
};

struct MrcExample {
  ExampleRef ref;
  std::string slot;
  TokenizedContext context;
  std::string question;  // slot description
  std::optional<TokenSpan> answer;
  bool has_answer = false;
  std::string gold_value;  // empty when unanswerable
};

// One scored pair. For the wd task `candidate` is a candidate value; for
// intent/reqslot tasks `slot` and `candidate` hold the intent or slot name
// and `pair_text` its description.
struct WdExample {
  ExampleRef ref;
  TokenizedContext context;
  std::string pair_text;
  int label = 0;
  std::string slot;
  std::string candidate;
  size_t group = 0;  // examples sharing a (turn, slot) instance share a group id
};

struct ExampleSet {
  std::vector<MrcExample> mrc;
  std::vector<WdExample> pairs;
  size_t skipped = 0;  // gold values that could not be located in the history
};

// Pure function of its inputs. Throws DataError (naming dialogue and turn)
// when a gold span annotation disagrees with the state.
ExampleSet MakeTrainingExamples(const std::vector<Dialogue>& dialogues, const Schema& schema,
                                Task task);

// Gold answer for a span/numerical slot in the given history, choosing
// the last occurrence among the accepted variants. Returns nullopt when
// no variant can be located.
std::optional<CharSpan> LocateGoldValue(const History& history, const std::vector<Turn>& turns,
                                        const std::string& slot, SlotKind kind,
                                        const std::vector<std::string>& variants);

// Token span covering a char span; nullopt if no token overlaps it.
std::optional<TokenSpan> CharToTokenSpan(const TokenizedContext& ctx, CharSpan span);

// JSON-lines dumps, one record per line.
std::string DumpExample(const MrcExample& ex);
std::string DumpExample(const WdExample& ex);

}  // namespace dst

#endif  // DST_CORPUS_H_
