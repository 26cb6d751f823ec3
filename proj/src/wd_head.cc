#include "dst/wd_head.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dst/checkpoint.h"
#include "dst/errors.h"
#include "dst/rng.h"

namespace dst {

namespace {

void CheckShapes(std::span<const double> cls, const WdParams& p) {
  if (cls.size() != p.dim || p.w_dnn.rows != p.proj || p.w_dnn.cols != p.dim ||
      p.b_dnn.size() != p.proj || p.w_lr.size() != p.proj + kWideFeatureCount) {
    throw CompatibilityError("wd head shapes do not match the encoding (dim " +
                             std::to_string(cls.size()) + " vs " + std::to_string(p.dim) + ")");
  }
}

void MaskWide(Vec& flat_or_w_lr, size_t offset, size_t proj) {
  std::fill(flat_or_w_lr.begin() + static_cast<long>(offset + proj),
            flat_or_w_lr.begin() + static_cast<long>(offset + proj + kWideFeatureCount), 0.0);
}

}  // namespace

WdParams WdParams::Zeros(size_t dim, size_t proj, bool use_wide) {
  WdParams p;
  p.dim = dim;
  p.proj = proj;
  p.use_wide = use_wide;
  p.w_dnn = Matrix(proj, dim);
  p.b_dnn.assign(proj, 0.0);
  p.w_lr.assign(proj + kWideFeatureCount, 0.0);
  return p;
}

WdParams WdParams::Random(size_t dim, size_t proj, bool use_wide, uint64_t seed, double scale) {
  WdParams p = Zeros(dim, proj, use_wide);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vec flat = p.Flatten();
  for (double& x : flat) x = normal(rng);
  p.Unflatten(flat);
  if (!use_wide) MaskWide(p.w_lr, 0, proj);
  return p;
}

size_t WdParams::size() const { return w_dnn.data.size() + b_dnn.size() + w_lr.size() + 1; }

Vec WdParams::Flatten() const {
  Vec flat;
  flat.reserve(size());
  flat.insert(flat.end(), w_dnn.data.begin(), w_dnn.data.end());
  flat.insert(flat.end(), b_dnn.begin(), b_dnn.end());
  flat.insert(flat.end(), w_lr.begin(), w_lr.end());
  flat.push_back(b_lr);
  return flat;
}

void WdParams::Unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw UsageError("wd parameter vector has the wrong length");
  auto it = flat.begin();
  std::copy(it, it + static_cast<long>(w_dnn.data.size()), w_dnn.data.begin());
  it += static_cast<long>(w_dnn.data.size());
  std::copy(it, it + static_cast<long>(b_dnn.size()), b_dnn.begin());
  it += static_cast<long>(b_dnn.size());
  std::copy(it, it + static_cast<long>(w_lr.size()), w_lr.begin());
  it += static_cast<long>(w_lr.size());
  b_lr = *it;
}

bool WdParams::AllFinite() const { return dst::AllFinite(Flatten()); }

WdForward WdForwardPass(std::span<const double> cls, const WideFeatureVector& wide,
                        const WdParams& params) {
  CheckShapes(cls, params);
  CheckWideLayout(wide.layout_version);
  WdForward f;
  f.hidden.resize(params.proj);
  double z = params.b_lr;
  for (size_t h = 0; h < params.proj; ++h) {
    f.hidden[h] = std::tanh(Dot(params.w_dnn.row(h), cls) + params.b_dnn[h]);
    z += params.w_lr[h] * f.hidden[h];
  }
  if (params.use_wide) {
    for (size_t k = 0; k < kWideFeatureCount; ++k) z += params.w_lr[params.proj + k] * wide[k];
  }
  f.logit = z;
  f.p = Sigmoid(z);
  return f;
}

double WdLoss(const WdForward& fwd, int label) {
  return label == 1 ? -LogSigmoid(fwd.logit) : -LogSigmoid(-fwd.logit);
}

double BinaryCrossEntropy(double p, int label) {
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

WdParams WdGradients(const WdForward& fwd, int label, std::span<const double> cls,
                     const WideFeatureVector& wide, const WdParams& params) {
  WdParams g = WdParams::Zeros(params.dim, params.proj, params.use_wide);
  const double dz = fwd.p - static_cast<double>(label);
  g.b_lr = dz;
  for (size_t h = 0; h < params.proj; ++h) {
    g.w_lr[h] = dz * fwd.hidden[h];
    const double da = dz * params.w_lr[h] * (1.0 - fwd.hidden[h] * fwd.hidden[h]);
    g.b_dnn[h] = da;
    auto row = g.w_dnn.row(h);
    for (size_t k = 0; k < params.dim; ++k) row[k] = da * cls[k];
  }
  if (params.use_wide) {
    for (size_t k = 0; k < kWideFeatureCount; ++k) g.w_lr[params.proj + k] = dz * wide[k];
  }
  return g;
}

std::vector<CandidateScore> SortScores(std::vector<CandidateScore> scores) {
  std::stable_sort(scores.begin(), scores.end(), [](const CandidateScore& a, const CandidateScore& b) {
    return a.probability > b.probability;
  });
  return scores;
}

std::vector<CandidateScore> RankCandidates(const RankInputs& in, const SlotDef& slot,
                                           const Encoder& encoder, const WdParams& params,
                                           const SynonymLexicon& lexicon) {
  std::vector<std::string> candidates = CandidateValues(slot);
  if (in.turns == nullptr) throw UsageError("rank candidates: no dialogue turns");
  const std::vector<std::string> context =
      Tokenize(BuildHistory(*in.turns, in.turn_index, HistoryMode::kWd, in.from));
  WideInputs wi{in.turns, in.turn_index, in.from, in.service, in.requested_slots};
  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    EncoderOutput enc = encoder.Encode(context, Tokenize(slot.description + ": " + c));
    WideFeatureVector wide = ExtractWideFeatures(wi, slot, c, lexicon);
    scores.push_back({c, WdForwardPass(enc.cls, wide, params).p});
  }
  return SortScores(std::move(scores));
}

nlohmann::json WdTrainConfig::ToJson() const {
  return {{"task", task},
          {"proj", proj},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"negatives", negatives},
          {"use_wide", use_wide},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"weight_decay", adam.weight_decay},
          {"seed", seed},
          {"init_scale", init_scale}};
}

WdTrainConfig WdTrainConfig::FromJson(const nlohmann::json& j) {
  WdTrainConfig c;
  c.task = j.value("task", c.task);
  c.proj = j.value("proj", c.proj);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.negatives = j.value("negatives", c.negatives);
  c.use_wide = j.value("use_wide", c.use_wide);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.init_scale = j.value("init_scale", c.init_scale);
  return c;
}

std::vector<EncodedWdExample> EncodeWdExamples(const std::vector<WdExample>& examples,
                                               const std::vector<Dialogue>& dialogues,
                                               const Schema& schema, const Encoder& encoder,
                                               const SynonymLexicon* lexicon) {
  std::vector<EncodedWdExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.context.tokens.empty()) continue;
    EncodedWdExample e;
    e.cls = encoder.Encode(ex.context.tokens, Tokenize(ex.pair_text)).cls;
    e.label = ex.label;
    e.group = ex.group;
    const ServiceDef* svc = schema.FindService(ex.ref.service);
    const SlotDef* slot = svc ? svc->FindSlot(ex.slot) : nullptr;
    if (lexicon != nullptr && slot != nullptr && ex.ref.dialogue_index < dialogues.size()) {
      const Dialogue& d = dialogues[ex.ref.dialogue_index];
      const Frame* frame = d.turns.at(ex.ref.turn_index).FindFrame(ex.ref.service);
      const std::set<std::string>* requested =
          frame && frame->state ? &frame->state->requested_slots : nullptr;
      WideInputs wi{&d.turns, ex.ref.turn_index, 0, ex.ref.service, requested};
      e.wide = ExtractWideFeatures(wi, *slot, ex.candidate, *lexicon);
    }
    out.push_back(std::move(e));
  }
  return out;
}

WdParams TrainWd(const std::vector<EncodedWdExample>& examples, size_t dim,
                 const WdTrainConfig& config, const EpochLogger& log,
                 std::vector<double>* loss_curve) {
  if (examples.empty()) throw UsageError("wd training needs at least one example");
  WdParams params = WdParams::Random(dim, config.proj, config.use_wide,
                                     DeriveSeed(config.seed, "init/" + config.task),
                                     config.init_scale);
  Vec flat = params.Flatten();
  Adam adam(flat.size(), config.adam);
  auto shuffle_rng = MakeEngine(config.seed, "shuffle/" + config.task);
  auto negative_rng = MakeEngine(config.seed, "negatives/" + config.task);
  const size_t wide_offset = params.w_dnn.data.size() + params.b_dnn.size();

  // Groups in first-appearance order so sampling does not depend on
  // hash iteration.
  std::vector<std::vector<size_t>> positives, negatives;
  std::map<size_t, size_t> group_index;
  for (size_t i = 0; i < examples.size(); ++i) {
    auto [it, fresh] = group_index.emplace(examples[i].group, positives.size());
    if (fresh) {
      positives.emplace_back();
      negatives.emplace_back();
    }
    (examples[i].label == 1 ? positives : negatives)[it->second].push_back(i);
  }
  const size_t batch = std::max<size_t>(1, config.batch_size);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<size_t> order;
    for (size_t g = 0; g < positives.size(); ++g) {
      order.insert(order.end(), positives[g].begin(), positives[g].end());
      std::vector<size_t> neg = negatives[g];
      std::shuffle(neg.begin(), neg.end(), negative_rng);
      const size_t want = std::max<size_t>(1, positives[g].size()) * config.negatives;
      if (neg.size() > want) neg.resize(want);
      order.insert(order.end(), neg.begin(), neg.end());
    }
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t b = 0; b < order.size(); b += batch) {
      const size_t e = std::min(order.size(), b + batch);
      Vec grad(flat.size(), 0.0);
      for (size_t k = b; k < e; ++k) {
        const EncodedWdExample& ex = examples[order[k]];
        WdForward f = WdForwardPass(ex.cls, ex.wide, params);
        const double loss = WdLoss(f, ex.label);
        if (!std::isfinite(loss)) {
          throw TrainingError(config.task + " loss became non-finite at epoch " +
                              std::to_string(epoch) + ", example " + std::to_string(order[k]) +
                              " (logit " + std::to_string(f.logit) + ")");
        }
        epoch_loss += loss;
        Vec g = WdGradients(f, ex.label, ex.cls, ex.wide, params).Flatten();
        for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      }
      const double scale = 1.0 / static_cast<double>(e - b);
      for (double& x : grad) x *= scale;
      adam.Step(flat, grad);
      if (!config.use_wide) MaskWide(flat, wide_offset, params.proj);
      params.Unflatten(flat);
    }
    if (!params.AllFinite()) {
      throw TrainingError(config.task + " parameters diverged at epoch " + std::to_string(epoch));
    }
    const double mean = order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size());
    if (loss_curve) loss_curve->push_back(mean);
    if (log) log(epoch, mean);
  }
  return params;
}

double WdCandidateAccuracy(const std::vector<EncodedWdExample>& examples, const WdParams& params) {
  std::map<size_t, std::pair<double, int>> best;  // group -> (p, label)
  std::vector<size_t> groups;
  for (const auto& ex : examples) {
    const double p = WdForwardPass(ex.cls, ex.wide, params).p;
    auto it = best.find(ex.group);
    if (it == best.end()) {
      best.emplace(ex.group, std::make_pair(p, ex.label));
      groups.push_back(ex.group);
    } else if (p > it->second.first) {
      it->second = {p, ex.label};
    }
  }
  if (groups.empty()) return 0.0;
  size_t correct = 0;
  for (size_t g : groups) correct += best[g].second == 1 ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(groups.size());
}

double WdBinaryAccuracy(const std::vector<EncodedWdExample>& examples, const WdParams& params) {
  if (examples.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& ex : examples) {
    const double p = WdForwardPass(ex.cls, ex.wide, params).p;
    correct += (p >= 0.5) == (ex.label == 1) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

void SaveWdModel(const WdModel& model, const std::string& path, const std::string& section) {
  const WdParams& p = model.params;
  nlohmann::json body;
  body["dim"] = p.dim;
  body["proj"] = p.proj;
  body["use_wide"] = p.use_wide;
  body["layout_version"] = kWideLayoutVersion;
  body["wide_features"] = kWideFeatureCount;
  body["seed"] = model.config.seed;
  body["train_config"] = model.config.ToJson();
  body["params"] = {{"w_dnn", p.w_dnn.data}, {"b_dnn", p.b_dnn}, {"w_lr", p.w_lr}, {"b_lr", p.b_lr}};
  WriteCheckpoint(path, body, section);
}

WdModel LoadWdModel(const std::string& path, const std::string& section) {
  nlohmann::json doc = ReadCheckpoint(path, section);
  try {
    CheckWideLayout(doc.at("layout_version").get<int>());
    WdModel m;
    m.config = WdTrainConfig::FromJson(doc.at("train_config"));
    m.params = WdParams::Zeros(doc.at("dim").get<size_t>(), doc.at("proj").get<size_t>(),
                               doc.at("use_wide").get<bool>());
    const auto& jp = doc.at("params");
    auto load = [&](const char* key, Vec& dst) {
      Vec v = jp.at(key).get<Vec>();
      if (v.size() != dst.size()) {
        throw CompatibilityError(path + ": '" + key + "' has the wrong size");
      }
      dst = std::move(v);
    };
    load("w_dnn", m.params.w_dnn.data);
    load("b_dnn", m.params.b_dnn);
    load("w_lr", m.params.w_lr);
    m.params.b_lr = jp.at("b_lr").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CompatibilityError(path + ": " + e.what());
  }
}

}  // namespace dst
