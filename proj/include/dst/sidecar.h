#ifndef DST_SIDECAR_H_
#define DST_SIDECAR_H_

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dst/encoder.h"
#include "json.hpp"

namespace dst {

// A bidirectional newline-delimited message stream.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  // Both throw TransportError on failure, timeout or end of stream.
  virtual void WriteLine(const std::string& line) = 0;
  virtual std::string ReadLine(int timeout_ms) = 0;
};

// "tcp://host:port" connects a socket; "exec:<command>" spawns
// `/bin/sh -c <command>` and talks over its standard streams.
std::unique_ptr<LineChannel> OpenChannel(const std::string& address, int timeout_ms);

// Client for an external encoder process.
//
//   hello    {"op":"hello"} -> {"dim": d, "name": "..."}
//   request  {"id": u64, "op": "encode", "ctx": [...], "pair": [...]}
//   response {"id": u64, "dim": d, "cls": [d], "ctx_reps": [[d] x n]}
//   error    {"id": u64, "error": "..."}
//
// One request is in flight per connection; a small pool of connections
// serves concurrent callers. "encode_train" is reserved for a future
// gradient-carrying extension and is never sent.
class SidecarEncoder : public Encoder {
 public:
  // Connects and performs the handshake. Throws TransportError when the
  // sidecar is unreachable and ProtocolError when its dim differs from
  // config.dim.
  explicit SidecarEncoder(EncoderConfig config);
  ~SidecarEncoder() override;

  EncoderOutput Encode(std::span<const std::string> context_tokens,
                       std::span<const std::string> pair_tokens) const override;
  size_t dim() const override { return config_.dim; }
  std::string name() const override { return remote_name_; }

 private:
  std::unique_ptr<LineChannel> Connect(std::string* name = nullptr) const;
  std::unique_ptr<LineChannel> Acquire() const;
  void Release(std::unique_ptr<LineChannel> channel) const;

  EncoderConfig config_;
  std::string remote_name_;
  mutable std::mutex mu_;
  mutable std::vector<std::unique_ptr<LineChannel>> idle_;
  mutable size_t open_ = 0;
  mutable std::atomic<uint64_t> next_id_{1};
};

// Decodes one encode response, checking id, shapes and finiteness.
// Throws ProtocolError.
EncoderOutput ParseEncodeResponse(const nlohmann::json& msg, uint64_t expected_id,
                                  size_t expected_dim, size_t context_size);

}  // namespace dst

#endif  // DST_SIDECAR_H_
