#ifndef DST_METRICS_H_
#define DST_METRICS_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dst/corpus.h"
#include "dst/schema.h"
#include "json.hpp"

namespace dst {

size_t Levenshtein(std::string_view a, std::string_view b);

// 1 - lev(norm a, norm b) / max(|norm a|, |norm b|), norm = lowercase and
// collapsed whitespace; 1.0 when both normalize to empty.
double FuzzyScore(std::string_view a, std::string_view b);

inline constexpr double kFuzzyMatchThreshold = 0.9;

// Both absent -> 1, one absent -> 0. Otherwise categorical slots score
// exact agreement with any gold variant and non-categorical slots the
// best fuzzy score over the variants.
double SlotAssignmentScore(const SlotDef& slot, const std::optional<std::string>& predicted,
                           const std::vector<std::string>& gold_variants);
double SlotAssignmentScore(const SlotDef& slot, const std::optional<std::string>& predicted,
                           const std::optional<std::string>& gold);

struct EvalOptions {
  // Frame joint score is all-or-nothing instead of the minimum slot score.
  bool strict_binary = false;
  // Services found here count as seen; without it every service is seen.
  const Schema* train_schema = nullptr;
};

// Sums from which every metric is a ratio; adding two buckets gives the
// bucket of their union, so breakdowns aggregate exactly.
struct MetricCounts {
  size_t frames = 0;
  double joint_sum = 0.0;
  double average_sum = 0.0;   // per-frame mean over gold-assigned slots
  size_t average_frames = 0;  // frames with at least one gold slot
  double tagging_sum = 0.0;
  size_t tagging_frames = 0;  // frames with non-categorical activity
  double requested_sum = 0.0;
  size_t intent_correct = 0;

  void Add(const MetricCounts& other);
  double joint_goal_accuracy() const;
  double average_goal_accuracy() const;
  double slot_tagging_f1() const;
  double requested_slots_f1() const;
  double active_intent_accuracy() const;
};

struct MetricsReport {
  MetricCounts overall;
  std::map<std::string, MetricCounts> per_service;
  MetricCounts seen;
  MetricCounts unseen;
  bool strict_binary = false;

  nlohmann::json ToJson() const;
  // "key=value" lines, overall metrics first.
  std::string ToKeyValue() const;
};

// Scores one frame into `counts`. Exposed for tests.
void ScoreFrame(const ServiceDef& service, const FrameState& predicted, const FrameState& gold,
                bool strict_binary, MetricCounts& counts);

// Aligns by dialogue_id, turn index, speaker and frame service. Throws
// AlignmentError naming the first mismatch.
MetricsReport Evaluate(const std::vector<Dialogue>& predictions, const std::vector<Dialogue>& golds,
                       const Schema& schema, const EvalOptions& options = {});

}  // namespace dst

#endif  // DST_METRICS_H_
