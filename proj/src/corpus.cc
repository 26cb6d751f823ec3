#include "dst/corpus.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dst/errors.h"
#include "dst/numerals.h"

namespace dst {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int LineOfOffset(std::string_view text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

json Extras(const json& obj, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
      extra[it.key()] = it.value();
    }
  }
  return extra;
}

template <typename T>
T Get(const json& obj, const char* key, const std::string& source, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, 0, path + "." + key, "missing required field");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source, 0, path + "." + key, e.what());
  }
}

Frame ParseFrame(const json& jf, const std::string& source, const std::string& path) {
  if (!jf.is_object()) throw ParseError(source, 0, path, "expected a frame object");
  Frame f;
  f.service = Get<std::string>(jf, "service", source, path);
  f.extra = Extras(jf, {"service", "state", "actions", "slots"});
  if (auto it = jf.find("slots"); it != jf.end()) {
    for (size_t k = 0; k < it->size(); ++k) {
      const std::string sp = path + ".slots[" + std::to_string(k) + "]";
      const json& js = (*it)[k];
      SpanAnnotation span;
      span.slot = Get<std::string>(js, "slot", source, sp);
      long long start = Get<long long>(js, "start", source, sp);
      long long end = Get<long long>(js, "exclusive_end", source, sp);
      if (start < 0 || end < 0) throw ParseError(source, 0, sp, "negative span offset");
      span.start = static_cast<size_t>(start);
      span.end = static_cast<size_t>(end);
      f.spans.push_back(std::move(span));
    }
  }
  if (auto it = jf.find("actions"); it != jf.end()) {
    for (size_t k = 0; k < it->size(); ++k) {
      const std::string ap = path + ".actions[" + std::to_string(k) + "]";
      const json& ja = (*it)[k];
      Action a;
      a.act = Get<std::string>(ja, "act", source, ap);
      if (auto s = ja.find("slot"); s != ja.end() && s->is_string()) a.slot = s->get<std::string>();
      if (auto v = ja.find("values"); v != ja.end()) {
        a.values = Get<std::vector<std::string>>(ja, "values", source, ap);
      }
      f.actions.push_back(std::move(a));
    }
  }
  if (auto it = jf.find("state"); it != jf.end() && it->is_object()) {
    const std::string sp = path + ".state";
    FrameState st;
    st.active_intent = it->value("active_intent", std::string("NONE"));
    if (auto r = it->find("requested_slots"); r != it->end()) {
      auto req = Get<std::vector<std::string>>(*it, "requested_slots", source, sp);
      st.requested_slots.insert(req.begin(), req.end());
    }
    if (auto v = it->find("slot_values"); v != it->end()) {
      st.slot_values =
          Get<std::map<std::string, std::vector<std::string>>>(*it, "slot_values", source, sp);
    }
    f.state = std::move(st);
  }
  return f;
}

Dialogue ParseDialogue(const json& jd, const std::string& source, const std::string& path) {
  if (!jd.is_object()) throw ParseError(source, 0, path, "expected a dialogue object");
  Dialogue d;
  d.dialogue_id = Get<std::string>(jd, "dialogue_id", source, path);
  if (jd.contains("services")) d.services = Get<std::vector<std::string>>(jd, "services", source, path);
  d.extra = Extras(jd, {"dialogue_id", "services", "turns"});
  const json& turns = jd.at("turns");
  for (size_t t = 0; t < turns.size(); ++t) {
    const std::string tp = path + ".turns[" + std::to_string(t) + "]";
    const json& jt = turns[t];
    Turn turn;
    std::string speaker = Get<std::string>(jt, "speaker", source, tp);
    if (speaker == "USER") {
      turn.speaker = Speaker::kUser;
    } else if (speaker == "SYSTEM") {
      turn.speaker = Speaker::kSystem;
    } else {
      throw ParseError(source, 0, tp + ".speaker", "expected USER or SYSTEM, got '" + speaker + "'");
    }
    turn.utterance = Get<std::string>(jt, "utterance", source, tp);
    turn.extra = Extras(jt, {"speaker", "utterance", "frames"});
    if (auto fr = jt.find("frames"); fr != jt.end()) {
      for (size_t k = 0; k < fr->size(); ++k) {
        turn.frames.push_back(ParseFrame((*fr)[k], source, tp + ".frames[" + std::to_string(k) + "]"));
      }
    }
    d.turns.push_back(std::move(turn));
  }
  return d;
}

json FrameToJson(const Frame& f) {
  json jf = f.extra;
  jf["service"] = f.service;
  jf["slots"] = json::array();
  for (const auto& s : f.spans) {
    jf["slots"].push_back({{"slot", s.slot}, {"start", s.start}, {"exclusive_end", s.end}});
  }
  jf["actions"] = json::array();
  for (const auto& a : f.actions) {
    jf["actions"].push_back({{"act", a.act}, {"slot", a.slot}, {"values", a.values}});
  }
  if (f.state) {
    json st;
    st["active_intent"] = f.state->active_intent;
    st["requested_slots"] = std::vector<std::string>(f.state->requested_slots.begin(),
                                                     f.state->requested_slots.end());
    st["slot_values"] = json::object();
    for (const auto& [slot, values] : f.state->slot_values) st["slot_values"][slot] = values;
    jf["state"] = std::move(st);
  }
  return jf;
}

void AppendTagged(History& h, const Turn& turn, size_t turn_index, bool is_copy) {
  if (!h.text.empty()) h.text.push_back(' ');
  h.text += turn.speaker == Speaker::kUser ? "User: " : "System: ";
  HistorySegment seg;
  seg.turn_index = turn_index;
  seg.start = h.text.size();
  h.text += MaskPhoneNumbers(turn.utterance);
  seg.end = h.text.size();
  seg.is_copy = is_copy;
  h.segments.push_back(seg);
}

}  // namespace

std::string_view SpeakerName(Speaker s) { return s == Speaker::kUser ? "USER" : "SYSTEM"; }

const Frame* Turn::FindFrame(std::string_view service) const {
  for (const auto& f : frames) {
    if (f.service == service) return &f;
  }
  return nullptr;
}

void ValidateDialogue(const Dialogue& d, const Schema& schema) {
  const std::string where = "dialogue '" + d.dialogue_id + "'";
  for (size_t t = 0; t < d.turns.size(); ++t) {
    const Turn& turn = d.turns[t];
    const std::string tw = where + " turn " + std::to_string(t);
    Speaker expected = t % 2 == 0 ? Speaker::kUser : Speaker::kSystem;
    if (turn.speaker != expected) {
      throw ValidationError(tw + ": speakers must alternate starting with USER");
    }
    for (const auto& f : turn.frames) {
      const ServiceDef* svc = schema.FindService(f.service);
      if (svc == nullptr) {
        throw ValidationError(tw + ": frame references undefined service '" + f.service + "'");
      }
      for (const auto& s : f.spans) {
        if (!(s.start < s.end && s.end <= turn.utterance.size())) {
          throw ValidationError(tw + ": malformed span [" + std::to_string(s.start) + ", " +
                                std::to_string(s.end) + ") for slot '" + s.slot +
                                "' (utterance length " + std::to_string(turn.utterance.size()) + ")");
        }
        if (svc->FindSlot(s.slot) == nullptr) {
          throw ValidationError(tw + ": span for undefined slot '" + s.slot + "'");
        }
      }
      if (f.state) {
        for (const auto& [slot, values] : f.state->slot_values) {
          if (svc->FindSlot(slot) == nullptr) {
            throw ValidationError(tw + ": state assigns undefined slot '" + slot + "' of '" +
                                  f.service + "'");
          }
          if (values.empty()) throw ValidationError(tw + ": slot '" + slot + "' has no values");
        }
        for (const auto& slot : f.state->requested_slots) {
          if (svc->FindSlot(slot) == nullptr) {
            throw ValidationError(tw + ": requested slot '" + slot + "' is undefined");
          }
        }
        const std::string& intent = f.state->active_intent;
        if (intent != "NONE" && svc->FindIntent(intent) == nullptr) {
          throw ValidationError(tw + ": unknown intent '" + intent + "'");
        }
      }
    }
  }
}

std::vector<Dialogue> ParseDialogues(std::string_view text, const Schema& schema,
                                     const std::string& source_name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source_name, LineOfOffset(text, e.byte == 0 ? 0 : e.byte - 1), "", e.what());
  }
  if (root.is_object()) root = json::array({root});
  if (!root.is_array()) throw ParseError(source_name, 0, "$", "expected an array of dialogues");
  std::vector<Dialogue> out;
  out.reserve(root.size());
  for (size_t i = 0; i < root.size(); ++i) {
    Dialogue d = ParseDialogue(root[i], source_name, "[" + std::to_string(i) + "]");
    ValidateDialogue(d, schema);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Dialogue> LoadDialogues(const std::string& path, const Schema& schema) {
  std::vector<std::string> files;
  if (fs::is_directory(path)) {
    std::vector<std::string> named, other;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
      std::string name = entry.path().filename().string();
      if (name.rfind("dialogues_", 0) == 0) {
        named.push_back(entry.path().string());
      } else if (name != "schema.json") {
        other.push_back(entry.path().string());
      }
    }
    files = named.empty() ? other : named;
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Dialogue> all;
  for (const auto& f : files) {
    auto part = ParseDialogues(ReadFile(f), schema, f);
    std::move(part.begin(), part.end(), std::back_inserter(all));
  }
  return all;
}

nlohmann::json DialogueToJson(const Dialogue& d) {
  json jd = d.extra;
  jd["dialogue_id"] = d.dialogue_id;
  jd["services"] = d.services;
  jd["turns"] = json::array();
  for (const auto& t : d.turns) {
    json jt = t.extra;
    jt["speaker"] = SpeakerName(t.speaker);
    jt["utterance"] = t.utterance;
    jt["frames"] = json::array();
    for (const auto& f : t.frames) jt["frames"].push_back(FrameToJson(f));
    jd["turns"].push_back(std::move(jt));
  }
  return jd;
}

nlohmann::json DialoguesToJson(const std::vector<Dialogue>& dialogues) {
  json out = json::array();
  for (const auto& d : dialogues) out.push_back(DialogueToJson(d));
  return out;
}

void WriteDialogues(const std::vector<Dialogue>& dialogues, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << DialoguesToJson(dialogues).dump(2) << "\n";
  if (!out) throw Error("write failed for '" + path + "'");
}

History BuildHistoryText(const std::vector<Turn>& turns, size_t upto, HistoryMode mode,
                         size_t from) {
  if (upto >= turns.size()) {
    throw UsageError("history index " + std::to_string(upto) + " out of range (" +
                     std::to_string(turns.size()) + " turns)");
  }
  if (turns[upto].speaker != Speaker::kUser) {
    throw UsageError("history must end at a USER turn (turn " + std::to_string(upto) + ")");
  }
  if (from > upto) throw UsageError("history start after its end");
  size_t first = from;
  if (mode == HistoryMode::kClassifier && upto + 1 - first > kClassifierWindow) {
    first = upto + 1 - kClassifierWindow;
  }
  History h;
  for (size_t i = first; i <= upto; ++i) AppendTagged(h, turns[i], i, false);
  if (mode == HistoryMode::kMrc) AppendTagged(h, turns[upto], upto, true);
  return h;
}

std::string BuildHistory(const std::vector<Turn>& turns, size_t upto, HistoryMode mode,
                         size_t from) {
  return BuildHistoryText(turns, upto, mode, from).text;
}

std::string_view TaskName(Task task) {
  switch (task) {
    case Task::kMrc: return "mrc";
    case Task::kWd: return "wd";
    case Task::kIntent: return "intent";
    case Task::kReqSlot: return "reqslot";
  }
  return "?";
}

Task ParseTask(std::string_view name) {
  for (Task t : {Task::kMrc, Task::kWd, Task::kIntent, Task::kReqSlot}) {
    if (TaskName(t) == name) return t;
  }
  throw UsageError("unknown task '" + std::string(name) + "' (expected mrc, wd, intent, reqslot)");
}

std::optional<TokenSpan> CharToTokenSpan(const TokenizedContext& ctx, CharSpan span) {
  std::optional<size_t> first, last;
  for (size_t i = 0; i < ctx.offsets.size(); ++i) {
    const CharSpan& o = ctx.offsets[i];
    if (o.end > span.start && o.start < span.end) {
      if (!first) first = i;
      last = i;
    }
  }
  if (!first) return std::nullopt;
  return TokenSpan{*first, *last};
}

std::optional<CharSpan> LocateGoldValue(const History& history, const std::vector<Turn>& turns,
                                        const std::string& slot, SlotKind kind,
                                        const std::vector<std::string>& variants) {
  // Most recent mention wins: walk segments backward, skipping the copy.
  for (auto seg = history.segments.rbegin(); seg != history.segments.rend(); ++seg) {
    if (seg->is_copy) continue;
    std::string_view utt = std::string_view(history.text).substr(seg->start, seg->end - seg->start);
    std::optional<CharSpan> best;
    auto consider = [&](CharSpan s) {
      if (!best || s.start > best->start) best = s;
    };
    for (const auto& v : variants) {
      if (kind == SlotKind::kNumerical) {
        try {
          if (auto s = RestoreNumericSpan(utt, v)) consider(*s);
          continue;
        } catch (const UnsupportedValueError&) {
          // fall through to a literal search
        }
      }
      for (const auto& s : FindPhrase(utt, v)) consider(s);
      // Annotated spans are exact even when the value is not delimited by
      // word boundaries. Masking may shift offsets; only trust them when
      // the utterance was left untouched.
      const Turn& turn = turns[seg->turn_index];
      if (turn.utterance.size() == utt.size() && turn.utterance == utt) {
        for (const auto& f : turn.frames) {
          for (const auto& a : f.spans) {
            if (a.slot == slot && NormalizeText(utt.substr(a.start, a.end - a.start)) == NormalizeText(v)) {
              consider({a.start, a.end});
            }
          }
        }
      }
    }
    if (best) return CharSpan{seg->start + best->start, seg->start + best->end};
  }
  return std::nullopt;
}

ExampleSet MakeTrainingExamples(const std::vector<Dialogue>& dialogues, const Schema& schema,
                                Task task) {
  ExampleSet out;
  size_t group = 0;
  for (size_t di = 0; di < dialogues.size(); ++di) {
    const Dialogue& d = dialogues[di];
    for (size_t t = 0; t < d.turns.size(); ++t) {
      const Turn& turn = d.turns[t];
      if (turn.speaker != Speaker::kUser) continue;
      for (const Frame& frame : turn.frames) {
        const ServiceDef& svc = schema.GetService(frame.service);
        const FrameState empty_state;
        const FrameState& state = frame.state ? *frame.state : empty_state;
        ExampleRef ref{d.dialogue_id, di, t, frame.service};
        const std::string where = "dialogue '" + d.dialogue_id + "' turn " + std::to_string(t);

        if (task == Task::kMrc) {
          // Annotated user spans must agree with the state they feed.
          for (const auto& a : frame.spans) {
            const SlotDef* sd = svc.FindSlot(a.slot);
            auto it = state.slot_values.find(a.slot);
            if (sd == nullptr || sd->is_categorical || it == state.slot_values.end()) continue;
            std::string text = NormalizeText(turn.utterance.substr(a.start, a.end - a.start));
            bool ok = std::any_of(it->second.begin(), it->second.end(),
                                  [&](const std::string& v) { return NormalizeText(v) == text; });
            if (!ok) {
              throw DataError(where + ": span for slot '" + a.slot + "' covers '" + text +
                              "' which is not among its state values");
            }
          }
          History history = BuildHistoryText(d.turns, t, HistoryMode::kMrc);
          TokenizedContext ctx = TokenizeWithOffsets(history.text);
          for (const SlotDef& slot : svc.slots) {
            SlotKind kind = ClassifySlot(slot);
            if (kind != SlotKind::kSpan && kind != SlotKind::kNumerical) continue;
            MrcExample ex;
            ex.ref = ref;
            ex.slot = slot.name;
            ex.context = ctx;
            ex.question = slot.description;
            auto it = state.slot_values.find(slot.name);
            if (it != state.slot_values.end() && it->second.front() != kDontCare) {
              auto span = LocateGoldValue(history, d.turns, slot.name, kind, it->second);
              auto tok = span ? CharToTokenSpan(ctx, *span) : std::nullopt;
              if (!tok) {
                ++out.skipped;
                continue;
              }
              ex.answer = tok;
              ex.has_answer = true;
              ex.gold_value = it->second.front();
            }
            out.mrc.push_back(std::move(ex));
          }
          continue;
        }

        if (task == Task::kWd) {
          TokenizedContext ctx = TokenizeWithOffsets(BuildHistory(d.turns, t, HistoryMode::kWd));
          for (const SlotDef& slot : svc.slots) {
            SlotKind kind = ClassifySlot(slot);
            if (kind != SlotKind::kBoolean && kind != SlotKind::kText) continue;
            std::vector<std::string> candidates = CandidateValues(slot);
            auto it = state.slot_values.find(slot.name);
            std::string gold = it == state.slot_values.end() ? std::string(kUnknown) : it->second.front();
            if (std::find(candidates.begin(), candidates.end(), gold) == candidates.end()) {
              throw DataError(where + ": value '" + gold + "' of slot '" + slot.name +
                              "' is not a candidate");
            }
            for (const auto& c : candidates) {
              WdExample ex;
              ex.ref = ref;
              ex.context = ctx;
              ex.pair_text = slot.description + ": " + c;
              ex.label = c == gold ? 1 : 0;
              ex.slot = slot.name;
              ex.candidate = c;
              ex.group = group;
              out.pairs.push_back(std::move(ex));
            }
            ++group;
          }
          continue;
        }

        TokenizedContext ctx = TokenizeWithOffsets(BuildHistory(d.turns, t, HistoryMode::kClassifier));
        if (task == Task::kIntent) {
          for (const IntentDef& intent : svc.intents) {
            WdExample ex;
            ex.ref = ref;
            ex.context = ctx;
            ex.pair_text = intent.description.empty() ? HumanizeName(intent.name) : intent.description;
            ex.label = state.active_intent == intent.name ? 1 : 0;
            ex.slot = intent.name;
            ex.candidate = intent.name;
            ex.group = group;
            out.pairs.push_back(std::move(ex));
          }
          ++group;
        } else {
          for (const SlotDef& slot : svc.slots) {
            WdExample ex;
            ex.ref = ref;
            ex.context = ctx;
            ex.pair_text = slot.description.empty() ? HumanizeName(slot.name) : slot.description;
            ex.label = state.requested_slots.count(slot.name) ? 1 : 0;
            ex.slot = slot.name;
            ex.candidate = slot.name;
            ex.group = group++;
            out.pairs.push_back(std::move(ex));
          }
        }
      }
    }
  }
  return out;
}

std::string DumpExample(const MrcExample& ex) {
  json j;
  j["task"] = "mrc";
  j["dialogue_id"] = ex.ref.dialogue_id;
  j["turn"] = ex.ref.turn_index;
  j["service"] = ex.ref.service;
  j["slot"] = ex.slot;
  j["question"] = ex.question;
  j["context"] = ex.context.text;
  j["has_answer"] = ex.has_answer;
  if (ex.answer) {
    j["answer_tokens"] = {ex.answer->start, ex.answer->end};
    j["answer_text"] = std::string(ex.context.Slice(ex.answer->start, ex.answer->end));
    j["gold_value"] = ex.gold_value;
  } else {
    j["answer_tokens"] = nullptr;
  }
  return j.dump();
}

std::string DumpExample(const WdExample& ex) {
  json j;
  j["dialogue_id"] = ex.ref.dialogue_id;
  j["turn"] = ex.ref.turn_index;
  j["service"] = ex.ref.service;
  j["slot"] = ex.slot;
  j["candidate"] = ex.candidate;
  j["pair_text"] = ex.pair_text;
  j["label"] = ex.label;
  j["group"] = ex.group;
  j["context"] = ex.context.text;
  return j.dump();
}

}  // namespace dst
