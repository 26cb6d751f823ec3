#ifndef DST_WD_HEAD_H_
#define DST_WD_HEAD_H_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dst/corpus.h"
#include "dst/encoder.h"
#include "dst/lexicon.h"
#include "dst/linalg.h"
#include "dst/mrc_head.h"
#include "dst/optim.h"
#include "dst/wide_features.h"
#include "json.hpp"

namespace dst {

// Wide & deep candidate scorer:
//
//   p = sigmoid(w_lr . (tanh(W_dnn cls + b_dnn) (+) wide) + b_lr)
//
// With use_wide = false the wide half of w_lr is held at zero and the
// model depends on cls alone; the intent and requested-slot classifiers
// are built this way.
struct WdParams {
  size_t dim = 0;
  size_t proj = 0;
  bool use_wide = true;
  Matrix w_dnn;  // proj x dim
  Vec b_dnn;     // proj
  Vec w_lr;      // proj + kWideFeatureCount
  double b_lr = 0.0;

  static WdParams Zeros(size_t dim, size_t proj, bool use_wide = true);
  static WdParams Random(size_t dim, size_t proj, bool use_wide, uint64_t seed,
                         double scale = 0.1);

  size_t size() const;
  Vec Flatten() const;
  void Unflatten(std::span<const double> flat);
  bool AllFinite() const;
  bool operator==(const WdParams&) const = default;
};

struct WdForward {
  Vec hidden;  // tanh activations
  double logit = 0.0;
  double p = 0.5;
};

// Throws CompatibilityError on shape mismatch.
WdForward WdForwardPass(std::span<const double> cls, const WideFeatureVector& wide,
                        const WdParams& params);

// Binary cross-entropy computed from the logit.
double WdLoss(const WdForward& fwd, int label);
// Same loss from a probability; used where only p is known.
double BinaryCrossEntropy(double p, int label);

WdParams WdGradients(const WdForward& fwd, int label, std::span<const double> cls,
                     const WideFeatureVector& wide, const WdParams& params);

struct CandidateScore {
  std::string candidate;
  double probability = 0.0;
};

// Descending probability; ties keep input order.
std::vector<CandidateScore> SortScores(std::vector<CandidateScore> scores);

struct RankInputs {
  const std::vector<Turn>* turns = nullptr;
  size_t turn_index = 0;
  size_t from = 0;
  std::string service;
  const std::set<std::string>* requested_slots = nullptr;
};

// One score per CandidateValues(slot) entry, each pair built as
// "description: candidate", sorted by SortScores. Throws UsageError for
// Span/Numerical slots.
std::vector<CandidateScore> RankCandidates(const RankInputs& in, const SlotDef& slot,
                                           const Encoder& encoder, const WdParams& params,
                                           const SynonymLexicon& lexicon);

struct WdTrainConfig {
  std::string task = "wd";  // names the seed streams
  size_t proj = 64;
  size_t epochs = 20;
  size_t batch_size = 16;
  size_t negatives = 3;  // per positive, resampled every epoch
  bool use_wide = true;
  AdamConfig adam;
  uint64_t seed = 0;
  double init_scale = 0.1;

  nlohmann::json ToJson() const;
  static WdTrainConfig FromJson(const nlohmann::json& j);
};

struct EncodedWdExample {
  Vec cls;
  WideFeatureVector wide;
  int label = 0;
  size_t group = 0;
};

// Encodes every pair. For wd-task examples and a non-null `lexicon`, wide
// features are extracted from the source dialogues, with the gold
// requested slots feeding the requested-slot feature; otherwise the wide
// vector is zero.
std::vector<EncodedWdExample> EncodeWdExamples(const std::vector<WdExample>& examples,
                                               const std::vector<Dialogue>& dialogues,
                                               const Schema& schema, const Encoder& encoder,
                                               const SynonymLexicon* lexicon);

// Each epoch visits, per group, every positive plus up to
// config.negatives sampled negatives. Deterministic given config.seed.
// Throws TrainingError on a non-finite loss, UsageError on empty input.
WdParams TrainWd(const std::vector<EncodedWdExample>& examples, size_t dim,
                 const WdTrainConfig& config, const EpochLogger& log = nullptr,
                 std::vector<double>* loss_curve = nullptr);

// Fraction of groups whose highest-probability member is a positive
// (first member wins ties).
double WdCandidateAccuracy(const std::vector<EncodedWdExample>& examples, const WdParams& params);
// Fraction of individual examples classified correctly at 0.5.
double WdBinaryAccuracy(const std::vector<EncodedWdExample>& examples, const WdParams& params);

struct WdModel {
  WdParams params;
  WdTrainConfig config;
};

// `section` is "wd", "intent" or "reqslot".
void SaveWdModel(const WdModel& model, const std::string& path, const std::string& section);
WdModel LoadWdModel(const std::string& path, const std::string& section);

}  // namespace dst

#endif  // DST_WD_HEAD_H_
