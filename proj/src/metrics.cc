#include "dst/metrics.h"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "dst/errors.h"
#include "dst/text.h"

namespace dst {

namespace {

double Ratio(double num, size_t den) { return den == 0 ? 0.0 : num / static_cast<double>(den); }

double F1(size_t tp, size_t n_pred, size_t n_gold) {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(n_pred);
  const double r = static_cast<double>(tp) / static_cast<double>(n_gold);
  return 2.0 * p * r / (p + r);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

nlohmann::json CountsToJson(const MetricCounts& c) {
  return {{"joint_goal_accuracy", c.joint_goal_accuracy()},
          {"average_goal_accuracy", c.average_goal_accuracy()},
          {"slot_tagging_f1", c.slot_tagging_f1()},
          {"requested_slots_f1", c.requested_slots_f1()},
          {"active_intent_accuracy", c.active_intent_accuracy()},
          {"frames", c.frames},
          {"frames_with_gold_slots", c.average_frames},
          {"frames_with_noncategorical", c.tagging_frames}};
}

void AppendKeyValues(std::string& out, const std::string& prefix, const MetricCounts& c) {
  out += prefix + "joint_goal_accuracy=" + FormatDouble(c.joint_goal_accuracy()) + "\n";
  out += prefix + "average_goal_accuracy=" + FormatDouble(c.average_goal_accuracy()) + "\n";
  out += prefix + "slot_tagging_f1=" + FormatDouble(c.slot_tagging_f1()) + "\n";
  out += prefix + "requested_slots_f1=" + FormatDouble(c.requested_slots_f1()) + "\n";
  out += prefix + "active_intent_accuracy=" + FormatDouble(c.active_intent_accuracy()) + "\n";
  out += prefix + "frames=" + std::to_string(c.frames) + "\n";
}

}  // namespace

size_t Levenshtein(std::string_view a, std::string_view b) {
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double FuzzyScore(std::string_view a, std::string_view b) {
  const std::string na = NormalizeText(a);
  const std::string nb = NormalizeText(b);
  const size_t longest = std::max(na.size(), nb.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(Levenshtein(na, nb)) / static_cast<double>(longest);
}

double SlotAssignmentScore(const SlotDef& slot, const std::optional<std::string>& predicted,
                           const std::vector<std::string>& gold_variants) {
  const bool has_gold = !gold_variants.empty();
  if (!predicted && !has_gold) return 1.0;
  if (!predicted || !has_gold) return 0.0;
  double best = 0.0;
  for (const auto& g : gold_variants) {
    const double s = slot.is_categorical ? (*predicted == g ? 1.0 : 0.0) : FuzzyScore(*predicted, g);
    best = std::max(best, s);
  }
  return best;
}

double SlotAssignmentScore(const SlotDef& slot, const std::optional<std::string>& predicted,
                           const std::optional<std::string>& gold) {
  std::vector<std::string> variants;
  if (gold) variants.push_back(*gold);
  return SlotAssignmentScore(slot, predicted, variants);
}

void MetricCounts::Add(const MetricCounts& o) {
  frames += o.frames;
  joint_sum += o.joint_sum;
  average_sum += o.average_sum;
  average_frames += o.average_frames;
  tagging_sum += o.tagging_sum;
  tagging_frames += o.tagging_frames;
  requested_sum += o.requested_sum;
  intent_correct += o.intent_correct;
}

double MetricCounts::joint_goal_accuracy() const { return Ratio(joint_sum, frames); }
double MetricCounts::average_goal_accuracy() const { return Ratio(average_sum, average_frames); }
double MetricCounts::slot_tagging_f1() const { return Ratio(tagging_sum, tagging_frames); }
double MetricCounts::requested_slots_f1() const { return Ratio(requested_sum, frames); }
double MetricCounts::active_intent_accuracy() const {
  return Ratio(static_cast<double>(intent_correct), frames);
}

void ScoreFrame(const ServiceDef& service, const FrameState& predicted, const FrameState& gold,
                bool strict_binary, MetricCounts& c) {
  ++c.frames;
  std::set<std::string> slots;
  for (const auto& [s, v] : predicted.slot_values) slots.insert(s);
  for (const auto& [s, v] : gold.slot_values) slots.insert(s);

  double joint = 1.0;
  bool all_exact = true;
  double gold_sum = 0.0;
  size_t gold_count = 0;
  size_t tp = 0, n_pred = 0, n_gold = 0;
  for (const auto& name : slots) {
    const SlotDef* def = service.FindSlot(name);
    SlotDef cat_def;  // slots missing from the schema compare exactly
    if (def == nullptr) {
      cat_def.is_categorical = true;
      def = &cat_def;
    }
    std::optional<std::string> pred;
    auto pit = predicted.slot_values.find(name);
    if (pit != predicted.slot_values.end() && !pit->second.empty()) pred = pit->second.front();
    std::vector<std::string> variants;
    auto git = gold.slot_values.find(name);
    if (git != gold.slot_values.end()) variants = git->second;

    const double score = SlotAssignmentScore(*def, pred, variants);
    joint = std::min(joint, score);
    all_exact = all_exact && score == 1.0;
    if (!variants.empty()) {
      gold_sum += score;
      ++gold_count;
    }
    if (!def->is_categorical) {
      n_pred += pred ? 1 : 0;
      n_gold += variants.empty() ? 0 : 1;
      if (pred && !variants.empty() && score >= kFuzzyMatchThreshold) ++tp;
    }
  }
  c.joint_sum += strict_binary ? (all_exact ? 1.0 : 0.0) : joint;
  if (gold_count > 0) {
    c.average_sum += gold_sum / static_cast<double>(gold_count);
    ++c.average_frames;
  }
  if (n_pred + n_gold > 0) {
    c.tagging_sum += F1(tp, n_pred, n_gold);
    ++c.tagging_frames;
  }

  const auto& rp = predicted.requested_slots;
  const auto& rg = gold.requested_slots;
  if (rp.empty() && rg.empty()) {
    c.requested_sum += 1.0;
  } else {
    size_t hit = 0;
    for (const auto& s : rp) hit += rg.count(s);
    c.requested_sum += F1(hit, rp.size(), rg.size());
  }
  c.intent_correct += predicted.active_intent == gold.active_intent ? 1 : 0;
}

MetricsReport Evaluate(const std::vector<Dialogue>& predictions, const std::vector<Dialogue>& golds,
                       const Schema& schema, const EvalOptions& options) {
  std::unordered_map<std::string, const Dialogue*> pred_by_id;
  for (const auto& d : predictions) {
    if (!pred_by_id.emplace(d.dialogue_id, &d).second) {
      throw AlignmentError("duplicate predicted dialogue '" + d.dialogue_id + "'");
    }
  }
  std::set<std::string> gold_ids;
  for (const auto& d : golds) gold_ids.insert(d.dialogue_id);
  for (const auto& d : predictions) {
    if (!gold_ids.count(d.dialogue_id)) {
      throw AlignmentError("predicted dialogue '" + d.dialogue_id + "' has no gold counterpart");
    }
  }

  MetricsReport report;
  report.strict_binary = options.strict_binary;
  const FrameState empty;
  for (const Dialogue& gold : golds) {
    auto it = pred_by_id.find(gold.dialogue_id);
    if (it == pred_by_id.end()) {
      throw AlignmentError("gold dialogue '" + gold.dialogue_id + "' has no prediction");
    }
    const Dialogue& pred = *it->second;
    if (pred.turns.size() != gold.turns.size()) {
      throw AlignmentError("dialogue '" + gold.dialogue_id + "': " +
                           std::to_string(pred.turns.size()) + " predicted turns vs " +
                           std::to_string(gold.turns.size()) + " gold turns");
    }
    for (size_t t = 0; t < gold.turns.size(); ++t) {
      const Turn& gt = gold.turns[t];
      const Turn& pt = pred.turns[t];
      const std::string where = "dialogue '" + gold.dialogue_id + "' turn " + std::to_string(t);
      if (gt.speaker != pt.speaker) throw AlignmentError(where + ": speaker differs");
      if (gt.speaker != Speaker::kUser) continue;
      for (const Frame& gf : gt.frames) {
        if (!gf.state) continue;
        const Frame* pf = pt.FindFrame(gf.service);
        if (pf == nullptr) {
          throw AlignmentError(where + ": no predicted frame for service '" + gf.service + "'");
        }
        const ServiceDef& svc = schema.GetService(gf.service);
        MetricCounts c;
        ScoreFrame(svc, pf->state ? *pf->state : empty, *gf.state, options.strict_binary, c);
        report.overall.Add(c);
        report.per_service[gf.service].Add(c);
        const bool seen = options.train_schema == nullptr ||
                          options.train_schema->FindService(gf.service) != nullptr;
        (seen ? report.seen : report.unseen).Add(c);
      }
    }
  }
  return report;
}

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json j = CountsToJson(overall);
  j["joint_mode"] = strict_binary ? "strict-binary" : "min";
  j["per_service"] = nlohmann::json::object();
  for (const auto& [svc, c] : per_service) j["per_service"][svc] = CountsToJson(c);
  j["seen"] = CountsToJson(seen);
  j["unseen"] = CountsToJson(unseen);
  return j;
}

std::string MetricsReport::ToKeyValue() const {
  std::string out;
  AppendKeyValues(out, "", overall);
  AppendKeyValues(out, "seen.", seen);
  AppendKeyValues(out, "unseen.", unseen);
  for (const auto& [svc, c] : per_service) AppendKeyValues(out, "service." + svc + ".", c);
  return out;
}

}  // namespace dst
