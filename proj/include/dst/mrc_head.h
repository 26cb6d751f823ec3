#ifndef DST_MRC_HEAD_H_
#define DST_MRC_HEAD_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dst/corpus.h"
#include "dst/encoder.h"
#include "dst/linalg.h"
#include "dst/optim.h"
#include "json.hpp"

namespace dst {

// Span-extraction head over frozen token representations.
//
//   start logit_i  = w_start . r_i + b_start
//   end logit_i    = w_end . (r_i (+) r_s) + b_end
//   has-answer     = sigmoid(w_ans . tanh(W_g (r_s (+) r_cls) + b_g) + b_ans)
//
// where r_s is the representation at the start position: the gold start
// while training, argmax of the start distribution otherwise. The r_s half
// of w_end adds the same amount to every end logit, so softmax cancels it
// and its gradient is identically zero; it is kept so the parameter
// layout matches the concatenated input.
struct MrcParams {
  size_t dim = 0;
  size_t hidden = 0;
  Vec w_start;
  double b_start = 0.0;
  Vec w_end;  // 2 * dim
  double b_end = 0.0;
  Matrix w_g;  // hidden x 2*dim
  Vec b_g;     // hidden
  Vec w_ans;   // hidden
  double b_ans = 0.0;

  static MrcParams Zeros(size_t dim, size_t hidden);
  static MrcParams Random(size_t dim, size_t hidden, uint64_t seed, double scale = 0.1);

  size_t size() const;
  Vec Flatten() const;
  void Unflatten(std::span<const double> flat);
  bool AllFinite() const;
  bool operator==(const MrcParams&) const = default;
};

struct MrcForward {
  Vec start_logits;
  Vec end_logits;
  Vec v_start;
  Vec v_end;
  double answer_logit = 0.0;
  double p_has_answer = 0.5;
  size_t start_pos = 0;
  // Cached for backprop.
  Vec gate_input;  // r_s (+) r_cls
  Vec hidden;      // tanh activations
};

struct MrcGold {
  bool has_answer = false;
  size_t start = 0;
  size_t end = 0;
};

// `forced_start` selects r_s (teacher forcing). Without it r_s is taken at
// argmax v_start, smallest index on ties. Throws UsageError if
// `forced_start` is out of range or the shapes disagree.
MrcForward MrcForwardPass(const EncoderOutput& reps, const MrcParams& params,
                          std::optional<size_t> forced_start = std::nullopt);

double MrcLoss(const MrcForward& fwd, const MrcGold& gold);

// dL/dtheta, same layout as MrcParams. For answerable examples `fwd` must
// have been produced with forced_start = gold.start.
MrcParams MrcGradients(const MrcForward& fwd, const MrcGold& gold, const EncoderOutput& reps,
                       const MrcParams& params);

struct DecodedSpan {
  size_t start = 0;
  size_t end = 0;
  double score = 0.0;  // log v_start[start] + log v_end[end]
  bool operator==(const DecodedSpan&) const = default;
};

// Best (i <= j, j - i < max_span_len) by log v_start[i] + log v_end[j];
// ties go to the smaller i, then the smaller j. nullopt when
// p_has_answer < threshold.
std::optional<DecodedSpan> DecodeSpan(const MrcForward& fwd, size_t max_span_len = 16,
                                      double threshold = 0.5);

// Same, restricted to spans whose tokens all carry one segment id (one per
// token); tokens with a negative id, such as speaker tags, are excluded.
// nullopt also when no token is eligible.
std::optional<DecodedSpan> DecodeSpan(const MrcForward& fwd, std::span<const int> segment,
                                      size_t max_span_len = 16, double threshold = 0.5);

struct MrcTrainConfig {
  size_t hidden = 32;
  size_t epochs = 20;
  size_t batch_size = 16;
  AdamConfig adam;
  uint64_t seed = 0;
  double init_scale = 0.1;
  size_t max_span_len = 16;
  double threshold = 0.5;

  nlohmann::json ToJson() const;
  static MrcTrainConfig FromJson(const nlohmann::json& j);
};

using EpochLogger = std::function<void(size_t epoch, double mean_loss)>;

struct EncodedMrcExample {
  EncoderOutput reps;
  MrcGold gold;
};

std::vector<EncodedMrcExample> EncodeMrcExamples(const std::vector<MrcExample>& examples,
                                                 const Encoder& encoder);

// Mini-batch Adam over frozen encodings. Deterministic given config.seed.
// Throws TrainingError on a non-finite loss, UsageError on empty input.
MrcParams TrainMrc(const std::vector<EncodedMrcExample>& examples, size_t dim,
                   const MrcTrainConfig& config, const EpochLogger& log = nullptr,
                   std::vector<double>* loss_curve = nullptr);
MrcParams TrainMrc(const std::vector<MrcExample>& examples, const Encoder& encoder,
                   const MrcTrainConfig& config, const EpochLogger& log = nullptr,
                   std::vector<double>* loss_curve = nullptr);

// Fraction of examples whose decoded answer (or abstention) matches gold.
double MrcExactSpanAccuracy(const std::vector<EncodedMrcExample>& examples,
                            const MrcParams& params, size_t max_span_len, double threshold);

struct MrcModel {
  MrcParams params;
  MrcTrainConfig config;
};

void SaveMrcModel(const MrcModel& model, const std::string& path);
MrcModel LoadMrcModel(const std::string& path);

}  // namespace dst

#endif  // DST_MRC_HEAD_H_
