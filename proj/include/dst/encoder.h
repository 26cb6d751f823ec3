#ifndef DST_ENCODER_H_
#define DST_ENCODER_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dst/linalg.h"

namespace dst {

struct EncoderOutput {
  Vec cls;
  Matrix token_reps;  // one row per context token
  size_t dim = 0;
};

enum class EncoderBackend { kBaseline, kSidecar };

struct EncoderConfig {
  size_t dim = 64;
  uint64_t seed = 0;
  EncoderBackend backend = EncoderBackend::kBaseline;
  std::string sidecar_address;  // "tcp://host:port" or "exec:<command>"
  int sidecar_timeout_ms = 30000;
  size_t sidecar_pool_size = 2;
};

// Throws UsageError if dim < 8.
void ValidateEncoderConfig(const EncoderConfig& config);

// Maps a packed (context, pair) input to representations. The context and
// pair play the roles of the dialogue history and the slot description
// (or "description: candidate") of a [CLS] S [SEP] D [SEP] input.
class Encoder {
 public:
  virtual ~Encoder() = default;

  // `context_tokens` must be non-empty. Only context tokens get rows in
  // `token_reps`; pair tokens still influence both `cls` and the rows for
  // backends that are contextual.
  virtual EncoderOutput Encode(std::span<const std::string> context_tokens,
                               std::span<const std::string> pair_tokens) const = 0;
  virtual size_t dim() const = 0;
  virtual std::string name() const = 0;
};

// Parameter-free stand-in for a pretrained encoder. Each token maps to
//   normalize(hash_embedding(token) + position(pos) + segment(seg))
// and cls is the mean of all context and pair token vectors. Context
// tokens take positions 0..n-1 and segment 0; pair tokens take positions
// n..n+m-1 and segment 1.
//
// hash_embedding: state = SplitMix64(Fnv1a64(lowercase(token)) ^
// SplitMix64(seed)); d successive SplitMix64Stream(state).NextSigned()
// draws, scaled to unit length.
// position: the usual sinusoid (sin at even, cos at odd components,
// frequency 10000^(-2i/d)) scaled to norm kPositionNorm.
// segment: d draws from SplitMix64Stream(SplitMix64(seed ^ (kSegmentSalt +
// seg))) scaled to norm kSegmentNorm.
class BaselineEncoder : public Encoder {
 public:
  static constexpr double kPositionNorm = 0.3;
  static constexpr double kSegmentNorm = 0.3;
  static constexpr uint64_t kSegmentSalt = 0x5345474d454e5400ULL;

  explicit BaselineEncoder(EncoderConfig config);

  EncoderOutput Encode(std::span<const std::string> context_tokens,
                       std::span<const std::string> pair_tokens) const override;
  size_t dim() const override { return config_.dim; }
  std::string name() const override { return "baseline-hash"; }

  const EncoderConfig& config() const { return config_; }

 private:
  EncoderConfig config_;
  Vec segment_[2];
};

Vec HashEmbedding(const std::string& token, size_t dim, uint64_t seed);
Vec SinusoidalPosition(size_t position, size_t dim);
Vec BaselineTokenVector(const std::string& token, size_t position, int segment,
                        const EncoderConfig& config);

// Builds the backend named by config.backend.
std::unique_ptr<Encoder> MakeEncoder(const EncoderConfig& config);

}  // namespace dst

#endif  // DST_ENCODER_H_
