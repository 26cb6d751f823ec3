#include "dst/tracker.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dst/checkpoint.h"
#include "dst/errors.h"
#include "dst/numerals.h"

namespace dst {

namespace {

using nlohmann::json;

std::string PairText(const std::string& description, const std::string& name) {
  return description.empty() ? HumanizeName(name) : description;
}

std::vector<Turn> Prefix(const Dialogue& d, size_t upto) {
  return std::vector<Turn>(d.turns.begin(), d.turns.begin() + static_cast<long>(upto) + 1);
}

const FrameState* GoldState(const TurnView& view) {
  const Frame* f = (*view.turns)[view.turn_index].FindFrame(view.service);
  return f && f->state ? &*f->state : nullptr;
}

// Maps a char span of the MRC history back to the turn it came from.
size_t SegmentTurn(const History& h, size_t pos) {
  for (const auto& seg : h.segments) {
    if (pos < seg.end) return seg.turn_index;
  }
  return h.segments.empty() ? 0 : h.segments.back().turn_index;
}

std::optional<SpanPrediction> MakeSpan(const History& h, CharSpan span, double score) {
  std::string_view raw = std::string_view(h.text).substr(span.start, span.end - span.start);
  std::string_view trimmed = Trim(raw);
  if (trimmed.empty()) return std::nullopt;
  SpanPrediction p;
  p.text = std::string(trimmed);
  p.span = {span.start + static_cast<size_t>(trimmed.data() - raw.data()),
            span.start + static_cast<size_t>(trimmed.data() - raw.data()) + trimmed.size()};
  p.turn = SegmentTurn(h, p.span.start);
  p.score = score;
  return p;
}

// Segment index of every token, -1 for tokens outside the utterances
// (speaker tags).
std::vector<int> TokenSegments(const TokenizedContext& ctx, const History& h) {
  std::vector<int> out(ctx.size(), -1);
  size_t s = 0;
  for (size_t i = 0; i < ctx.size(); ++i) {
    while (s < h.segments.size() && h.segments[s].end <= ctx.offsets[i].start) ++s;
    if (s < h.segments.size() && ctx.offsets[i].start >= h.segments[s].start &&
        ctx.offsets[i].end <= h.segments[s].end) {
      out[i] = static_cast<int>(s);
    }
  }
  return out;
}

// First turn of the window visible to slot extraction, given the
// tracked intents of earlier user turns (oldest first).
size_t ResolveHistoryStart(const std::vector<std::pair<size_t, std::string>>& intents) {
  size_t from = 0;
  std::string last;
  for (const auto& [turn, intent] : intents) {
    if (intent == "NONE") continue;
    if (!last.empty() && intent != last) from = turn;
    last = intent;
  }
  return from;
}

bool HasRule(const std::vector<ResetRule>& rules, const std::string& service) {
  return std::any_of(rules.begin(), rules.end(),
                     [&](const ResetRule& r) { return r.service == service; });
}

std::vector<double> ClassifierScores(const std::vector<Turn>& turns, size_t t,
                                     const std::vector<std::string>& pairs, const Encoder& encoder,
                                     const WdParams& params) {
  const std::vector<std::string> ctx = Tokenize(BuildHistory(turns, t, HistoryMode::kClassifier));
  const WideFeatureVector no_wide;
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(WdForwardPass(encoder.Encode(ctx, Tokenize(p)).cls, no_wide, params).p);
  }
  return out;
}

TurnState TrackFrame(const std::vector<Turn>& turns, size_t t, const ServiceDef& svc,
                     const TrackerModels& models, const std::vector<double>& intent_scores,
                     size_t from) {
  TurnView view{&turns, t, svc.name};
  TurnState st;
  st.service = svc.name;
  st.history_from = from;
  st.active_intent = DecodeIntent(intent_scores, svc);

  std::vector<double> req = models.RequestedScores(view, svc);
  for (size_t i = 0; i < svc.slots.size() && i < req.size(); ++i) {
    if (req[i] >= kRequestedThreshold) st.requested_slots.insert(svc.slots[i].name);
  }

  for (const SlotDef& slot : svc.slots) {
    const SlotKind kind = ClassifySlot(slot);
    if (kind == SlotKind::kSpan || kind == SlotKind::kNumerical) {
      auto span = models.ExtractSpan(view, slot, from);
      if (!span) continue;
      std::string value = span->text;
      if (kind == SlotKind::kNumerical) {
        auto n = FindFirstNumeral(value);
        if (!n) continue;
        value = std::to_string(*n);
      }
      st.slot_values[slot.name] = value;
      st.provenance[slot.name] = {"mrc", models.name(), span->score, span->turn, span->span};
    } else {
      auto ranked = models.RankCandidates(view, slot, from, st.requested_slots);
      if (ranked.empty() || ranked.front().candidate == kUnknown) continue;
      st.slot_values[slot.name] = ranked.front().candidate;
      st.provenance[slot.name] = {"wd", models.name(), ranked.front().probability, std::nullopt,
                                  std::nullopt};
    }
  }
  return st;
}

const Frame& RequireFrame(const Dialogue& d, size_t t, const std::string& service) {
  if (t >= d.turns.size() || d.turns[t].speaker != Speaker::kUser) {
    throw UsageError("dialogue '" + d.dialogue_id + "': turn " + std::to_string(t) +
                     " is not a user turn");
  }
  const Frame* f = d.turns[t].FindFrame(service);
  if (f == nullptr) {
    throw UsageError("dialogue '" + d.dialogue_id + "' turn " + std::to_string(t) +
                     " has no frame for service '" + service + "'");
  }
  return *f;
}

}  // namespace

std::vector<ResetRule> ParseRules(std::string_view text, const Schema& schema,
                                  const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t off = e.byte == 0 ? 0 : std::min<size_t>(e.byte - 1, text.size());
    int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(off), '\n'));
    throw ParseError(source_name, line, "", e.what());
  }
  if (!doc.is_array()) throw ParseError(source_name, 0, "", "expected an array of rules");
  std::vector<ResetRule> rules;
  for (size_t i = 0; i < doc.size(); ++i) {
    const json& r = doc[i];
    const std::string field = "[" + std::to_string(i) + "]";
    if (!r.is_object() || !r.contains("service") || !r["service"].is_string()) {
      throw ParseError(source_name, 0, field + ".service", "missing or not a string");
    }
    ResetRule rule;
    rule.service = r["service"].get<std::string>();
    rule.trigger = r.value("trigger", rule.trigger);
    rule.scope = r.value("scope", rule.scope);
    if (schema.FindService(rule.service) == nullptr) {
      throw ValidationError("rule " + field + ": unknown service '" + rule.service + "'");
    }
    if (rule.trigger != "intent-switch") {
      throw ValidationError("rule " + field + ": unsupported trigger '" + rule.trigger + "'");
    }
    if (rule.scope != "clear-prior-history") {
      throw ValidationError("rule " + field + ": unsupported scope '" + rule.scope + "'");
    }
    rules.push_back(rule);
  }
  return rules;
}

std::vector<ResetRule> LoadRules(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseRules(buf.str(), schema, path);
}

json EncoderConfigToJson(const EncoderConfig& c) {
  return {{"dim", c.dim},
          {"seed", c.seed},
          {"backend", c.backend == EncoderBackend::kBaseline ? "baseline" : "sidecar"}};
}

EncoderConfig EncoderConfigFromJson(const json& j) {
  EncoderConfig c;
  c.dim = j.value("dim", c.dim);
  c.seed = j.value("seed", c.seed);
  std::string backend = j.value("backend", std::string("baseline"));
  if (backend == "sidecar") {
    c.backend = EncoderBackend::kSidecar;
  } else if (backend != "baseline") {
    throw CompatibilityError("unknown encoder backend '" + backend + "'");
  }
  return c;
}

void CheckBundle(const ModelBundle& b) {
  const size_t d = b.encoder.dim;
  auto check = [&](const char* what, size_t got) {
    if (got != d) {
      throw CompatibilityError(std::string(what) + " head expects dim " + std::to_string(got) +
                               " but the encoder produces " + std::to_string(d));
    }
  };
  check("mrc", b.mrc.params.dim);
  check("wd", b.wd.params.dim);
  check("intent", b.intent.params.dim);
  check("reqslot", b.reqslot.params.dim);
}

ModelBundle LoadModelBundle(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::vector<std::string> missing;
  for (const char* f : {"encoder.json", "mrc.json", "wd.json", "intent.json", "reqslot.json"}) {
    if (!fs::exists(root / f)) missing.push_back(f);
  }
  if (!missing.empty()) {
    std::string msg = "model directory '" + dir + "' is missing";
    for (const auto& m : missing) msg += " " + m;
    throw CompatibilityError(msg);
  }
  ModelBundle b;
  b.encoder = EncoderConfigFromJson(ReadJsonFile((root / "encoder.json").string()));
  b.mrc = LoadMrcModel((root / "mrc.json").string());
  b.wd = LoadWdModel((root / "wd.json").string(), "wd");
  b.intent = LoadWdModel((root / "intent.json").string(), "intent");
  b.reqslot = LoadWdModel((root / "reqslot.json").string(), "reqslot");
  if (fs::exists(root / "lexicon.tsv")) b.lexicon = LoadLexicon((root / "lexicon.tsv").string());
  CheckBundle(b);
  return b;
}

LearnedModels::LearnedModels(ModelBundle bundle, const Encoder& encoder)
    : bundle_(std::move(bundle)), encoder_(encoder) {
  CheckBundle(bundle_);
  if (encoder_.dim() != bundle_.encoder.dim) {
    throw CompatibilityError("encoder dim " + std::to_string(encoder_.dim()) +
                             " does not match the model bundle (" +
                             std::to_string(bundle_.encoder.dim) + ")");
  }
}

std::vector<double> LearnedModels::IntentScores(const TurnView& view,
                                                const ServiceDef& service) const {
  std::vector<std::string> pairs;
  for (const auto& i : service.intents) pairs.push_back(PairText(i.description, i.name));
  return ClassifierScores(*view.turns, view.turn_index, pairs, encoder_, bundle_.intent.params);
}

std::vector<double> LearnedModels::RequestedScores(const TurnView& view,
                                                   const ServiceDef& service) const {
  std::vector<std::string> pairs;
  for (const auto& s : service.slots) pairs.push_back(PairText(s.description, s.name));
  return ClassifierScores(*view.turns, view.turn_index, pairs, encoder_, bundle_.reqslot.params);
}

std::optional<SpanPrediction> LearnedModels::ExtractSpan(const TurnView& view, const SlotDef& slot,
                                                         size_t from) const {
  History h = BuildHistoryText(*view.turns, view.turn_index, HistoryMode::kMrc, from);
  TokenizedContext ctx = TokenizeWithOffsets(h.text);
  if (ctx.tokens.empty()) return std::nullopt;
  EncoderOutput reps = encoder_.Encode(ctx.tokens, Tokenize(slot.description));
  MrcForward fwd = MrcForwardPass(reps, bundle_.mrc.params);
  const std::vector<int> segments = TokenSegments(ctx, h);
  auto decoded = DecodeSpan(fwd, segments, bundle_.mrc.config.max_span_len, bundle_.mrc.config.threshold);
  if (!decoded) return std::nullopt;
  CharSpan chars{ctx.offsets[decoded->start].start, ctx.offsets[decoded->end].end};
  return MakeSpan(h, chars, fwd.p_has_answer);
}

std::vector<CandidateScore> LearnedModels::RankCandidates(
    const TurnView& view, const SlotDef& slot, size_t from,
    const std::set<std::string>& requested) const {
  RankInputs in{view.turns, view.turn_index, from, view.service, &requested};
  return dst::RankCandidates(in, slot, encoder_, bundle_.wd.params, bundle_.lexicon);
}

std::vector<double> OracleModels::IntentScores(const TurnView& view,
                                               const ServiceDef& service) const {
  const FrameState* gold = GoldState(view);
  std::vector<double> out;
  for (const auto& i : service.intents) {
    out.push_back(gold && gold->active_intent == i.name ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> OracleModels::RequestedScores(const TurnView& view,
                                                  const ServiceDef& service) const {
  const FrameState* gold = GoldState(view);
  std::vector<double> out;
  for (const auto& s : service.slots) {
    out.push_back(gold && gold->requested_slots.count(s.name) ? 1.0 : 0.0);
  }
  return out;
}

std::optional<SpanPrediction> OracleModels::ExtractSpan(const TurnView& view, const SlotDef& slot,
                                                        size_t from) const {
  const FrameState* gold = GoldState(view);
  if (gold == nullptr) return std::nullopt;
  auto it = gold->slot_values.find(slot.name);
  if (it == gold->slot_values.end() || it->second.empty()) return std::nullopt;
  History h = BuildHistoryText(*view.turns, view.turn_index, HistoryMode::kMrc, from);
  auto span = LocateGoldValue(h, *view.turns, slot.name, ClassifySlot(slot), it->second);
  if (!span) return std::nullopt;
  return MakeSpan(h, *span, 1.0);
}

std::vector<CandidateScore> OracleModels::RankCandidates(const TurnView& view, const SlotDef& slot,
                                                         size_t /*from*/,
                                                         const std::set<std::string>&) const {
  const FrameState* gold = GoldState(view);
  std::string want(kUnknown);
  if (gold != nullptr) {
    auto it = gold->slot_values.find(slot.name);
    if (it != gold->slot_values.end() && !it->second.empty()) want = it->second.front();
  }
  std::vector<CandidateScore> out;
  for (const auto& c : CandidateValues(slot)) out.push_back({c, c == want ? 1.0 : 0.0});
  return SortScores(std::move(out));
}

FrameState TurnState::ToFrameState() const {
  FrameState fs;
  fs.active_intent = active_intent;
  fs.requested_slots = requested_slots;
  for (const auto& [slot, value] : slot_values) fs.slot_values[slot] = {value};
  return fs;
}

std::string DecodeIntent(const std::vector<double>& scores, const ServiceDef& service) {
  size_t best = scores.size();
  for (size_t i = 0; i < scores.size() && i < service.intents.size(); ++i) {
    if (best == scores.size() || scores[i] > scores[best]) best = i;
  }
  if (best == scores.size() || scores[best] < kIntentThreshold) return "NONE";
  return service.intents[best].name;
}

TurnState TrackTurn(const Dialogue& dialogue, size_t turn_index, const std::string& service,
                    const Schema& schema, const TrackerModels& models,
                    const std::vector<ResetRule>& rules) {
  RequireFrame(dialogue, turn_index, service);
  const ServiceDef& svc = schema.GetService(service);
  const std::vector<Turn> turns = Prefix(dialogue, turn_index);
  std::vector<double> scores = models.IntentScores({&turns, turn_index, service}, svc);

  size_t from = 0;
  if (HasRule(rules, service)) {
    // The only thing carried between turns is the tracked intent, and it
    // is recomputed here from the earlier turns.
    std::vector<std::pair<size_t, std::string>> intents;
    for (size_t u = 0; u < turn_index; ++u) {
      const Turn& turn = dialogue.turns[u];
      if (turn.speaker != Speaker::kUser || turn.FindFrame(service) == nullptr) continue;
      const std::vector<Turn> prior = Prefix(dialogue, u);
      intents.emplace_back(u, DecodeIntent(models.IntentScores({&prior, u, service}, svc), svc));
    }
    intents.emplace_back(turn_index, DecodeIntent(scores, svc));
    from = ResolveHistoryStart(intents);
  }
  return TrackFrame(turns, turn_index, svc, models, scores, from);
}

std::vector<std::vector<TurnState>> TrackDialogue(const Dialogue& dialogue, const Schema& schema,
                                                  const TrackerModels& models,
                                                  const std::vector<ResetRule>& rules) {
  std::vector<std::vector<TurnState>> out(dialogue.turns.size());
  std::map<std::string, std::vector<std::pair<size_t, std::string>>> intents;
  for (size_t t = 0; t < dialogue.turns.size(); ++t) {
    const Turn& turn = dialogue.turns[t];
    if (turn.speaker != Speaker::kUser) continue;
    const std::vector<Turn> turns = Prefix(dialogue, t);
    for (const Frame& frame : turn.frames) {
      const ServiceDef& svc = schema.GetService(frame.service);
      std::vector<double> scores = models.IntentScores({&turns, t, frame.service}, svc);
      auto& seen = intents[frame.service];
      seen.emplace_back(t, DecodeIntent(scores, svc));
      const size_t from = HasRule(rules, frame.service) ? ResolveHistoryStart(seen) : 0;
      out[t].push_back(TrackFrame(turns, t, svc, models, scores, from));
    }
  }
  return out;
}

std::vector<Dialogue> PredictCorpus(const std::vector<Dialogue>& dialogues, const Schema& schema,
                                    const TrackerModels& models,
                                    const std::vector<ResetRule>& rules) {
  std::vector<Dialogue> out = dialogues;
  for (Dialogue& d : out) {
    auto states = TrackDialogue(d, schema, models, rules);
    for (size_t t = 0; t < d.turns.size(); ++t) {
      if (d.turns[t].speaker != Speaker::kUser) continue;
      for (size_t f = 0; f < d.turns[t].frames.size(); ++f) {
        d.turns[t].frames[f].state = states[t][f].ToFrameState();
      }
    }
  }
  return out;
}

void PredictCorpusToFile(const std::vector<Dialogue>& dialogues, const Schema& schema,
                         const TrackerModels& models, const std::vector<ResetRule>& rules,
                         const std::string& out_path) {
  std::vector<Dialogue> pred = PredictCorpus(dialogues, schema, models, rules);
  try {
    WriteDialogues(pred, out_path);
  } catch (const Error& e) {
    throw Error("writing predictions to '" + out_path + "': " + e.what());
  }
}

}  // namespace dst
