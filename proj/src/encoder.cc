#include "dst/encoder.h"

#include <cmath>

#include "dst/errors.h"
#include "dst/rng.h"
#include "dst/sidecar.h"
#include "dst/text.h"

namespace dst {

namespace {

void ScaleToNorm(Vec& v, double norm) {
  double s = 0.0;
  for (double x : v) s += x * x;
  if (s == 0.0) return;
  double f = norm / std::sqrt(s);
  for (double& x : v) x *= f;
}

Vec SegmentVector(int segment, const EncoderConfig& config) {
  SplitMix64Stream rng(SplitMix64(config.seed ^ (BaselineEncoder::kSegmentSalt + segment)));
  Vec v(config.dim);
  for (double& x : v) x = rng.NextSigned();
  ScaleToNorm(v, BaselineEncoder::kSegmentNorm);
  return v;
}

Vec Combine(const std::string& token, size_t position, const Vec& segment,
            const EncoderConfig& config) {
  Vec v = HashEmbedding(token, config.dim, config.seed);
  Vec p = SinusoidalPosition(position, config.dim);
  for (size_t i = 0; i < v.size(); ++i) v[i] += p[i] + segment[i];
  ScaleToNorm(v, 1.0);
  return v;
}

}  // namespace

void ValidateEncoderConfig(const EncoderConfig& config) {
  if (config.dim < 8) {
    throw UsageError("encoder dim must be at least 8, got " + std::to_string(config.dim));
  }
}

Vec HashEmbedding(const std::string& token, size_t dim, uint64_t seed) {
  SplitMix64Stream rng(SplitMix64(Fnv1a64(ToLower(token)) ^ SplitMix64(seed)));
  Vec v(dim);
  for (double& x : v) x = rng.NextSigned();
  ScaleToNorm(v, 1.0);
  return v;
}

Vec SinusoidalPosition(size_t position, size_t dim) {
  Vec v(dim);
  for (size_t i = 0; i < dim; ++i) {
    double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(dim);
    double angle = static_cast<double>(position) / std::pow(10000.0, exponent);
    v[i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
  }
  ScaleToNorm(v, BaselineEncoder::kPositionNorm);
  return v;
}

Vec BaselineTokenVector(const std::string& token, size_t position, int segment,
                        const EncoderConfig& config) {
  return Combine(token, position, SegmentVector(segment, config), config);
}

BaselineEncoder::BaselineEncoder(EncoderConfig config) : config_(std::move(config)) {
  ValidateEncoderConfig(config_);
  segment_[0] = SegmentVector(0, config_);
  segment_[1] = SegmentVector(1, config_);
}

EncoderOutput BaselineEncoder::Encode(std::span<const std::string> context_tokens,
                                      std::span<const std::string> pair_tokens) const {
  if (context_tokens.empty()) throw UsageError("encode: empty context");
  const size_t n = context_tokens.size();
  const size_t d = config_.dim;
  EncoderOutput out;
  out.dim = d;
  out.token_reps = Matrix(n, d);
  out.cls.assign(d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    Vec v = Combine(context_tokens[i], i, segment_[0], config_);
    auto row = out.token_reps.row(i);
    for (size_t k = 0; k < d; ++k) {
      row[k] = v[k];
      out.cls[k] += v[k];
    }
  }
  for (size_t j = 0; j < pair_tokens.size(); ++j) {
    Vec v = Combine(pair_tokens[j], n + j, segment_[1], config_);
    for (size_t k = 0; k < d; ++k) out.cls[k] += v[k];
  }
  const double count = static_cast<double>(n + pair_tokens.size());
  for (double& x : out.cls) x /= count;
  return out;
}

std::unique_ptr<Encoder> MakeEncoder(const EncoderConfig& config) {
  ValidateEncoderConfig(config);
  if (config.backend == EncoderBackend::kSidecar) {
    return std::make_unique<SidecarEncoder>(config);
  }
  return std::make_unique<BaselineEncoder>(config);
}

}  // namespace dst
