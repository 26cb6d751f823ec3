#include "dst/mrc_head.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>

#include "dst/checkpoint.h"
#include "dst/errors.h"
#include "dst/rng.h"

namespace dst {

namespace {

size_t ArgmaxFirst(const Vec& v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void CheckShapes(const EncoderOutput& reps, const MrcParams& p) {
  const size_t d = p.dim;
  if (reps.token_reps.cols != d || reps.cls.size() != d || p.w_start.size() != d ||
      p.w_end.size() != 2 * d || p.w_g.rows != p.hidden || p.w_g.cols != 2 * d ||
      p.b_g.size() != p.hidden || p.w_ans.size() != p.hidden) {
    throw CompatibilityError("mrc head shapes do not match encoder output (dim " +
                             std::to_string(reps.token_reps.cols) + " vs " + std::to_string(d) + ")");
  }
}

void AppendVec(Vec& flat, const Vec& v) { flat.insert(flat.end(), v.begin(), v.end()); }

void TakeVec(std::span<const double>& flat, Vec& v) {
  std::copy(flat.begin(), flat.begin() + static_cast<long>(v.size()), v.begin());
  flat = flat.subspan(v.size());
}

double TakeScalar(std::span<const double>& flat) {
  double x = flat.front();
  flat = flat.subspan(1);
  return x;
}

}  // namespace

MrcParams MrcParams::Zeros(size_t dim, size_t hidden) {
  MrcParams p;
  p.dim = dim;
  p.hidden = hidden;
  p.w_start.assign(dim, 0.0);
  p.w_end.assign(2 * dim, 0.0);
  p.w_g = Matrix(hidden, 2 * dim);
  p.b_g.assign(hidden, 0.0);
  p.w_ans.assign(hidden, 0.0);
  return p;
}

MrcParams MrcParams::Random(size_t dim, size_t hidden, uint64_t seed, double scale) {
  MrcParams p = Zeros(dim, hidden);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vec flat = p.Flatten();
  for (double& x : flat) x = normal(rng);
  p.Unflatten(flat);
  return p;
}

size_t MrcParams::size() const {
  return w_start.size() + 1 + w_end.size() + 1 + w_g.data.size() + b_g.size() + w_ans.size() + 1;
}

Vec MrcParams::Flatten() const {
  Vec flat;
  flat.reserve(size());
  AppendVec(flat, w_start);
  flat.push_back(b_start);
  AppendVec(flat, w_end);
  flat.push_back(b_end);
  AppendVec(flat, w_g.data);
  AppendVec(flat, b_g);
  AppendVec(flat, w_ans);
  flat.push_back(b_ans);
  return flat;
}

void MrcParams::Unflatten(std::span<const double> flat) {
  if (flat.size() != size()) throw UsageError("mrc parameter vector has the wrong length");
  TakeVec(flat, w_start);
  b_start = TakeScalar(flat);
  TakeVec(flat, w_end);
  b_end = TakeScalar(flat);
  TakeVec(flat, w_g.data);
  TakeVec(flat, b_g);
  TakeVec(flat, w_ans);
  b_ans = TakeScalar(flat);
}

bool MrcParams::AllFinite() const { return dst::AllFinite(Flatten()); }

MrcForward MrcForwardPass(const EncoderOutput& reps, const MrcParams& params,
                          std::optional<size_t> forced_start) {
  CheckShapes(reps, params);
  const size_t n = reps.token_reps.rows;
  const size_t d = params.dim;
  if (n == 0) throw UsageError("mrc forward: empty context");
  if (forced_start && *forced_start >= n) {
    throw UsageError("mrc forward: start " + std::to_string(*forced_start) + " out of range (n=" +
                     std::to_string(n) + ")");
  }
  MrcForward f;
  f.start_logits.resize(n);
  for (size_t i = 0; i < n; ++i) {
    f.start_logits[i] = Dot(params.w_start, reps.token_reps.row(i)) + params.b_start;
  }
  f.v_start = Softmax(f.start_logits);
  f.start_pos = forced_start ? *forced_start : ArgmaxFirst(f.start_logits);

  auto r_s = reps.token_reps.row(f.start_pos);
  std::span<const double> w_end_tok(params.w_end.data(), d);
  std::span<const double> w_end_start(params.w_end.data() + d, d);
  const double start_term = Dot(w_end_start, r_s);
  f.end_logits.resize(n);
  for (size_t i = 0; i < n; ++i) {
    f.end_logits[i] = Dot(w_end_tok, reps.token_reps.row(i)) + start_term + params.b_end;
  }
  f.v_end = Softmax(f.end_logits);

  f.gate_input.assign(r_s.begin(), r_s.end());
  f.gate_input.insert(f.gate_input.end(), reps.cls.begin(), reps.cls.end());
  f.hidden.resize(params.hidden);
  for (size_t h = 0; h < params.hidden; ++h) {
    f.hidden[h] = std::tanh(Dot(params.w_g.row(h), f.gate_input) + params.b_g[h]);
  }
  f.answer_logit = Dot(params.w_ans, f.hidden) + params.b_ans;
  f.p_has_answer = Sigmoid(f.answer_logit);
  return f;
}

double MrcLoss(const MrcForward& fwd, const MrcGold& gold) {
  const double y = gold.has_answer ? 1.0 : 0.0;
  double loss = -(y * LogSigmoid(fwd.answer_logit) + (1.0 - y) * LogSigmoid(-fwd.answer_logit));
  if (gold.has_answer) {
    if (!(gold.start <= gold.end && gold.end < fwd.start_logits.size())) {
      throw UsageError("mrc loss: gold span out of range");
    }
    loss -= LogSoftmax(fwd.start_logits)[gold.start];
    loss -= LogSoftmax(fwd.end_logits)[gold.end];
  }
  return loss;
}

MrcParams MrcGradients(const MrcForward& fwd, const MrcGold& gold, const EncoderOutput& reps,
                       const MrcParams& params) {
  const size_t n = fwd.start_logits.size();
  const size_t d = params.dim;
  if (gold.has_answer && fwd.start_pos != gold.start) {
    throw UsageError("mrc gradients need a forward pass teacher-forced at the gold start");
  }
  MrcParams g = MrcParams::Zeros(d, params.hidden);

  // Answerability gate.
  const double da = fwd.p_has_answer - (gold.has_answer ? 1.0 : 0.0);
  g.b_ans = da;
  for (size_t h = 0; h < params.hidden; ++h) {
    g.w_ans[h] = da * fwd.hidden[h];
    const double dz = da * params.w_ans[h] * (1.0 - fwd.hidden[h] * fwd.hidden[h]);
    g.b_g[h] = dz;
    auto row = g.w_g.row(h);
    for (size_t k = 0; k < 2 * d; ++k) row[k] = dz * fwd.gate_input[k];
  }
  if (!gold.has_answer) return g;

  // Span terms: d(-log softmax_y)/dlogit = softmax - onehot(y). The r_s
  // half of w_end would collect r_s * sum(de), and sum(de) = 0; it is left
  // at exactly zero rather than accumulating rounding noise.
  for (size_t i = 0; i < n; ++i) {
    const double ds = fwd.v_start[i] - (i == gold.start ? 1.0 : 0.0);
    const double de = fwd.v_end[i] - (i == gold.end ? 1.0 : 0.0);
    auto r = reps.token_reps.row(i);
    for (size_t k = 0; k < d; ++k) {
      g.w_start[k] += ds * r[k];
      g.w_end[k] += de * r[k];
    }
    g.b_start += ds;
    g.b_end += de;
  }
  return g;
}

namespace {

// `segment` may be empty (no constraint). Otherwise both ends of a span
// must share a segment id and ids below zero are never part of a span.
std::optional<DecodedSpan> Decode(const MrcForward& fwd, size_t max_span_len, double threshold,
                                  std::span<const int> segment) {
  if (fwd.p_has_answer < threshold || max_span_len == 0) return std::nullopt;
  const size_t n = fwd.v_start.size();
  if (n == 0) return std::nullopt;
  if (!segment.empty() && segment.size() != n) {
    throw UsageError("segment ids cover " + std::to_string(segment.size()) + " tokens, not " +
                     std::to_string(n));
  }
  Vec ls(n), le(n);
  for (size_t i = 0; i < n; ++i) {
    ls[i] = std::log(fwd.v_start[i]);
    le[i] = std::log(fwd.v_end[i]);
  }
  // Sliding-window maximum of ls over [j - L + 1, j]; the front holds the
  // smallest index among the maxima.
  std::deque<size_t> window;
  std::optional<DecodedSpan> best;
  for (size_t j = 0; j < n; ++j) {
    if (!segment.empty()) {
      if (segment[j] < 0) {
        window.clear();
        continue;
      }
      if (!window.empty() && segment[window.back()] != segment[j]) window.clear();
    }
    while (!window.empty() && ls[window.back()] < ls[j]) window.pop_back();
    window.push_back(j);
    while (window.front() + max_span_len <= j) window.pop_front();
    const size_t i = window.front();
    const double score = ls[i] + le[j];
    if (!best || score > best->score || (score == best->score && i < best->start)) {
      best = DecodedSpan{i, j, score};
    }
  }
  return best;
}

}  // namespace

std::optional<DecodedSpan> DecodeSpan(const MrcForward& fwd, size_t max_span_len,
                                      double threshold) {
  return Decode(fwd, max_span_len, threshold, {});
}

std::optional<DecodedSpan> DecodeSpan(const MrcForward& fwd, std::span<const int> segment,
                                      size_t max_span_len, double threshold) {
  return Decode(fwd, max_span_len, threshold, segment);
}

nlohmann::json MrcTrainConfig::ToJson() const {
  return {{"hidden", hidden},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", adam.learning_rate},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon},
          {"weight_decay", adam.weight_decay},
          {"seed", seed},
          {"init_scale", init_scale},
          {"max_span_len", max_span_len},
          {"threshold", threshold}};
}

MrcTrainConfig MrcTrainConfig::FromJson(const nlohmann::json& j) {
  MrcTrainConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
  c.adam.weight_decay = j.value("weight_decay", c.adam.weight_decay);
  c.seed = j.value("seed", c.seed);
  c.init_scale = j.value("init_scale", c.init_scale);
  c.max_span_len = j.value("max_span_len", c.max_span_len);
  c.threshold = j.value("threshold", c.threshold);
  return c;
}

std::vector<EncodedMrcExample> EncodeMrcExamples(const std::vector<MrcExample>& examples,
                                                 const Encoder& encoder) {
  std::vector<EncodedMrcExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.context.tokens.empty()) continue;
    EncodedMrcExample e;
    e.reps = encoder.Encode(ex.context.tokens, Tokenize(ex.question));
    e.gold.has_answer = ex.has_answer;
    if (ex.answer) {
      e.gold.start = ex.answer->start;
      e.gold.end = ex.answer->end;
    }
    out.push_back(std::move(e));
  }
  return out;
}

MrcParams TrainMrc(const std::vector<EncodedMrcExample>& examples, size_t dim,
                   const MrcTrainConfig& config, const EpochLogger& log,
                   std::vector<double>* loss_curve) {
  if (examples.empty()) throw UsageError("mrc training needs at least one example");
  MrcParams params = MrcParams::Random(dim, config.hidden, DeriveSeed(config.seed, "init/mrc"),
                                       config.init_scale);
  Vec flat = params.Flatten();
  Adam adam(flat.size(), config.adam);
  auto shuffle_rng = MakeEngine(config.seed, "shuffle/mrc");
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t batch = std::max<size_t>(1, config.batch_size);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (size_t b = 0; b < order.size(); b += batch) {
      const size_t e = std::min(order.size(), b + batch);
      Vec grad(flat.size(), 0.0);
      for (size_t k = b; k < e; ++k) {
        const EncodedMrcExample& ex = examples[order[k]];
        std::optional<size_t> forced;
        if (ex.gold.has_answer) forced = ex.gold.start;
        MrcForward f = MrcForwardPass(ex.reps, params, forced);
        double loss = MrcLoss(f, ex.gold);
        if (!std::isfinite(loss)) {
          throw TrainingError("mrc loss became non-finite at epoch " + std::to_string(epoch) +
                              ", example " + std::to_string(order[k]) + " (answer logit " +
                              std::to_string(f.answer_logit) + ")");
        }
        epoch_loss += loss;
        Vec g = MrcGradients(f, ex.gold, ex.reps, params).Flatten();
        for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      }
      const double scale = 1.0 / static_cast<double>(e - b);
      for (double& x : grad) x *= scale;
      adam.Step(flat, grad);
      params.Unflatten(flat);
    }
    if (!params.AllFinite()) {
      throw TrainingError("mrc parameters diverged at epoch " + std::to_string(epoch));
    }
    const double mean = epoch_loss / static_cast<double>(examples.size());
    if (loss_curve) loss_curve->push_back(mean);
    if (log) log(epoch, mean);
  }
  return params;
}

MrcParams TrainMrc(const std::vector<MrcExample>& examples, const Encoder& encoder,
                   const MrcTrainConfig& config, const EpochLogger& log,
                   std::vector<double>* loss_curve) {
  return TrainMrc(EncodeMrcExamples(examples, encoder), encoder.dim(), config, log, loss_curve);
}

double MrcExactSpanAccuracy(const std::vector<EncodedMrcExample>& examples,
                            const MrcParams& params, size_t max_span_len, double threshold) {
  if (examples.empty()) return 0.0;
  size_t correct = 0;
  for (const auto& ex : examples) {
    auto span = DecodeSpan(MrcForwardPass(ex.reps, params), max_span_len, threshold);
    bool ok = ex.gold.has_answer ? (span && span->start == ex.gold.start && span->end == ex.gold.end)
                                 : !span.has_value();
    correct += ok ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

void SaveMrcModel(const MrcModel& model, const std::string& path) {
  const MrcParams& p = model.params;
  nlohmann::json body;
  body["dim"] = p.dim;
  body["hidden"] = p.hidden;
  body["seed"] = model.config.seed;
  body["train_config"] = model.config.ToJson();
  body["params"] = {{"w_start", p.w_start}, {"b_start", p.b_start}, {"w_end", p.w_end},
                    {"b_end", p.b_end},     {"w_g", p.w_g.data},    {"b_g", p.b_g},
                    {"w_ans", p.w_ans},     {"b_ans", p.b_ans}};
  WriteCheckpoint(path, body, "mrc");
}

MrcModel LoadMrcModel(const std::string& path) {
  nlohmann::json doc = ReadCheckpoint(path, "mrc");
  try {
    MrcModel m;
    m.config = MrcTrainConfig::FromJson(doc.at("train_config"));
    const size_t dim = doc.at("dim").get<size_t>();
    const size_t hidden = doc.at("hidden").get<size_t>();
    m.params = MrcParams::Zeros(dim, hidden);
    const auto& jp = doc.at("params");
    auto load = [&](const char* key, Vec& dst) {
      Vec v = jp.at(key).get<Vec>();
      if (v.size() != dst.size()) throw CompatibilityError(path + ": '" + key + "' has the wrong size");
      dst = std::move(v);
    };
    load("w_start", m.params.w_start);
    load("w_end", m.params.w_end);
    load("w_g", m.params.w_g.data);
    load("b_g", m.params.b_g);
    load("w_ans", m.params.w_ans);
    m.params.b_start = jp.at("b_start").get<double>();
    m.params.b_end = jp.at("b_end").get<double>();
    m.params.b_ans = jp.at("b_ans").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CompatibilityError(path + ": " + e.what());
  }
}

}  // namespace dst
