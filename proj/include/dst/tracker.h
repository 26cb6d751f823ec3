#ifndef DST_TRACKER_H_
#define DST_TRACKER_H_

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dst/corpus.h"
#include "dst/encoder.h"
#include "dst/lexicon.h"
#include "dst/mrc_head.h"
#include "dst/schema.h"
#include "dst/wd_head.h"

namespace dst {

// Clears the history visible to slot extraction when the tracked intent
// of `service` switches.
struct ResetRule {
  std::string service;
  std::string trigger = "intent-switch";
  std::string scope = "clear-prior-history";
};

// JSON array of {"service": ..., "trigger": "intent-switch"}. Throws
// ParseError for malformed files and ValidationError for unknown services
// or triggers.
std::vector<ResetRule> ParseRules(std::string_view text, const Schema& schema,
                                  const std::string& source_name = "");
std::vector<ResetRule> LoadRules(const std::string& path, const Schema& schema);

// What the tracker sees when asking a head about turn `turn_index`:
// only turns 0..turn_index exist, so no head can read the future.
struct TurnView {
  const std::vector<Turn>* turns = nullptr;
  size_t turn_index = 0;
  std::string service;
};

struct SpanPrediction {
  std::string text;   // original-cased history substring, trimmed
  size_t turn = 0;    // turn the span was read from
  CharSpan span;      // offsets in the MRC history text
  double score = 0.0;
};

// The four decisions a tracker needs per turn. Implementations must be
// pure functions of their inputs.
class TrackerModels {
 public:
  virtual ~TrackerModels() = default;
  virtual std::string name() const = 0;
  // Probability per service intent, in schema order.
  virtual std::vector<double> IntentScores(const TurnView& view, const ServiceDef& service) const = 0;
  // Probability per service slot, in schema order.
  virtual std::vector<double> RequestedScores(const TurnView& view,
                                              const ServiceDef& service) const = 0;
  // Span for a Span/Numerical slot from history turns [from, turn_index].
  virtual std::optional<SpanPrediction> ExtractSpan(const TurnView& view, const SlotDef& slot,
                                                    size_t from) const = 0;
  // Scores over CandidateValues(slot), best first.
  virtual std::vector<CandidateScore> RankCandidates(const TurnView& view, const SlotDef& slot,
                                                     size_t from,
                                                     const std::set<std::string>& requested) const = 0;
};

// Trained heads plus what they need at inference.
struct ModelBundle {
  EncoderConfig encoder;
  MrcModel mrc;
  WdModel wd;
  WdModel intent;
  WdModel reqslot;
  SynonymLexicon lexicon;
};

// Directory layout: encoder.json, mrc.json, wd.json, intent.json,
// reqslot.json and an optional lexicon.tsv. Throws CompatibilityError
// when a head is missing or dims disagree.
ModelBundle LoadModelBundle(const std::string& dir);
void CheckBundle(const ModelBundle& bundle);
// Persists dim, seed and backend. The sidecar address is supplied at run
// time (DST_SIDECAR) and is not stored.
nlohmann::json EncoderConfigToJson(const EncoderConfig& config);
EncoderConfig EncoderConfigFromJson(const nlohmann::json& j);

class LearnedModels : public TrackerModels {
 public:
  // `encoder` must outlive this object. Throws CompatibilityError on dim
  // mismatch.
  LearnedModels(ModelBundle bundle, const Encoder& encoder);

  std::string name() const override { return "learned"; }
  std::vector<double> IntentScores(const TurnView& view, const ServiceDef& service) const override;
  std::vector<double> RequestedScores(const TurnView& view, const ServiceDef& service) const override;
  std::optional<SpanPrediction> ExtractSpan(const TurnView& view, const SlotDef& slot,
                                            size_t from) const override;
  std::vector<CandidateScore> RankCandidates(const TurnView& view, const SlotDef& slot, size_t from,
                                             const std::set<std::string>& requested) const override;

  const ModelBundle& bundle() const { return bundle_; }

 private:
  ModelBundle bundle_;
  const Encoder& encoder_;
};

// Answers every question from the gold annotation of the turn being
// tracked, through the same interface the learned heads use. Spans are
// located in the visible history window, so the oracle is subject to the
// same truncation as the learned extractor.
class OracleModels : public TrackerModels {
 public:
  std::string name() const override { return "oracle"; }
  std::vector<double> IntentScores(const TurnView& view, const ServiceDef& service) const override;
  std::vector<double> RequestedScores(const TurnView& view, const ServiceDef& service) const override;
  std::optional<SpanPrediction> ExtractSpan(const TurnView& view, const SlotDef& slot,
                                            size_t from) const override;
  std::vector<CandidateScore> RankCandidates(const TurnView& view, const SlotDef& slot, size_t from,
                                             const std::set<std::string>& requested) const override;
};

struct SlotProvenance {
  std::string head;    // "mrc" or "wd": the route the slot kind takes
  std::string source;  // TrackerModels::name()
  double score = 0.0;
  std::optional<size_t> turn;     // span heads only
  std::optional<CharSpan> span;   // offsets in the MRC history text
};

struct TurnState {
  std::string service;
  std::string active_intent = "NONE";
  std::set<std::string> requested_slots;
  std::map<std::string, std::string> slot_values;
  std::map<std::string, SlotProvenance> provenance;
  size_t history_from = 0;  // first turn visible to slot extraction

  FrameState ToFrameState() const;
};

inline constexpr double kIntentThreshold = 0.5;
inline constexpr double kRequestedThreshold = 0.5;

// Decodes IntentScores: the best intent, or "NONE" below the threshold.
std::string DecodeIntent(const std::vector<double>& scores, const ServiceDef& service);

// Tracks one user turn from the full history. Prior intents, needed by
// reset rules, are recomputed from earlier turns. Throws UsageError if
// `turn_index` is not a USER turn or has no frame for `service`.
TurnState TrackTurn(const Dialogue& dialogue, size_t turn_index, const std::string& service,
                    const Schema& schema, const TrackerModels& models,
                    const std::vector<ResetRule>& rules);

// Tracks every (user turn, frame) of a dialogue. Gives the same states as
// calling TrackTurn per frame, but computes each turn's intent once.
std::vector<std::vector<TurnState>> TrackDialogue(const Dialogue& dialogue, const Schema& schema,
                                                  const TrackerModels& models,
                                                  const std::vector<ResetRule>& rules);

// Copy of `dialogues` whose user frame states are replaced by tracked
// predictions.
std::vector<Dialogue> PredictCorpus(const std::vector<Dialogue>& dialogues, const Schema& schema,
                                    const TrackerModels& models,
                                    const std::vector<ResetRule>& rules);
void PredictCorpusToFile(const std::vector<Dialogue>& dialogues, const Schema& schema,
                         const TrackerModels& models, const std::vector<ResetRule>& rules,
                         const std::string& out_path);

}  // namespace dst

#endif  // DST_TRACKER_H_
