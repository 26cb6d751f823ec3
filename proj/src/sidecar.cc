#include "dst/sidecar.h"

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include "dst/errors.h"

namespace dst {

namespace {

using nlohmann::json;

std::string ErrnoText(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

// Buffered line reader over a readable fd, with a per-call deadline.
class FdLineReader {
 public:
  std::string ReadLine(int fd, int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
      size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                      deadline - std::chrono::steady_clock::now())
                      .count();
      if (left <= 0) throw TransportError("sidecar read timed out");
      pollfd p{fd, POLLIN, 0};
      int r = ::poll(&p, 1, static_cast<int>(left));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw TransportError(ErrnoText("poll"));
      }
      if (r == 0) throw TransportError("sidecar read timed out");
      char chunk[65536];
      ssize_t n = ::read(fd, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError(ErrnoText("read"));
      }
      if (n == 0) throw TransportError("sidecar closed the stream");
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  std::string buffer_;
};

void WriteAll(int fd, const std::string& data, bool is_socket) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = is_socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                          : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(ErrnoText("write to sidecar"));
    }
    off += static_cast<size_t>(n);
  }
}

class ProcessChannel : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw TransportError(ErrnoText("pipe"));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw TransportError(ErrnoText("pipe"));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw TransportError(ErrnoText("fork"));
    if (pid_ == 0) {
      // Own process group, so the destructor can take down anything the
      // command spawned.
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      const std::string line = "exec " + command;
      ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid_, pid_);
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~ProcessChannel() override {
    ::close(write_fd_);
    ::close(read_fd_);
    // Give the child a moment to exit on EOF, then make sure it is gone.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  void WriteLine(const std::string& line) override { WriteAll(write_fd_, line + "\n", false); }
  std::string ReadLine(int timeout_ms) override { return reader_.ReadLine(read_fd_, timeout_ms); }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  FdLineReader reader_;
};

class TcpChannel : public LineChannel {
 public:
  TcpChannel(const std::string& host, const std::string& port, int timeout_ms) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw TransportError("cannot resolve " + host + ":" + port + ": " + gai_strerror(rc));
    std::string last_error = "no address";
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
      int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      int flags = ::fcntl(fd, F_GETFL, 0);
      ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
      int c = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
      if (c != 0 && errno == EINPROGRESS) {
        pollfd p{fd, POLLOUT, 0};
        if (::poll(&p, 1, timeout_ms) == 1) {
          int err = 0;
          socklen_t len = sizeof(err);
          ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
          c = err == 0 ? 0 : -1;
          errno = err;
        } else {
          errno = ETIMEDOUT;
          c = -1;
        }
      }
      if (c == 0) {
        ::fcntl(fd, F_SETFL, flags);
        fd_ = fd;
        break;
      }
      last_error = std::strerror(errno);
      ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw TransportError("cannot connect to " + host + ":" + port + ": " + last_error);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void WriteLine(const std::string& line) override { WriteAll(fd_, line + "\n", true); }
  std::string ReadLine(int timeout_ms) override { return reader_.ReadLine(fd_, timeout_ms); }

 private:
  int fd_ = -1;
  FdLineReader reader_;
};

json ParseMessage(const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed sidecar message: ") + e.what());
  }
}

}  // namespace

std::unique_ptr<LineChannel> OpenChannel(const std::string& address, int timeout_ms) {
  const std::string tcp = "tcp://";
  const std::string exec = "exec:";
  if (address.rfind(tcp, 0) == 0) {
    std::string rest = address.substr(tcp.size());
    size_t colon = rest.rfind(':');
    if (colon == std::string::npos) throw UsageError("sidecar address needs a port: " + address);
    return std::make_unique<TcpChannel>(rest.substr(0, colon), rest.substr(colon + 1), timeout_ms);
  }
  if (address.rfind(exec, 0) == 0) {
    return std::make_unique<ProcessChannel>(address.substr(exec.size()));
  }
  throw UsageError("unrecognized sidecar address '" + address +
                   "' (expected tcp://host:port or exec:<command>)");
}

EncoderOutput ParseEncodeResponse(const json& msg, uint64_t expected_id, size_t expected_dim,
                                  size_t context_size) {
  if (!msg.is_object()) throw ProtocolError("sidecar response is not an object");
  auto id = msg.find("id");
  const bool id_ok = id != msg.end() && id->is_number_integer() &&
                     (id->is_number_unsigned() || id->get<int64_t>() >= 0) &&
                     id->get<uint64_t>() == expected_id;
  if (!id_ok) {
    throw ProtocolError("sidecar response id does not match request " + std::to_string(expected_id));
  }
  if (auto err = msg.find("error"); err != msg.end()) {
    throw ProtocolError("sidecar reported: " + (err->is_string() ? err->get<std::string>() : err->dump()));
  }
  try {
    size_t dim = msg.at("dim").get<size_t>();
    if (dim != expected_dim) {
      throw ProtocolError("sidecar dim " + std::to_string(dim) + " != expected " +
                          std::to_string(expected_dim));
    }
    EncoderOutput out;
    out.dim = dim;
    out.cls = msg.at("cls").get<Vec>();
    if (out.cls.size() != dim) throw ProtocolError("cls has wrong length");
    const json& reps = msg.at("ctx_reps");
    if (!reps.is_array() || reps.size() != context_size) {
      throw ProtocolError("ctx_reps has " + std::to_string(reps.is_array() ? reps.size() : 0) +
                          " rows, expected " + std::to_string(context_size));
    }
    out.token_reps = Matrix(context_size, dim);
    for (size_t i = 0; i < context_size; ++i) {
      Vec row = reps[i].get<Vec>();
      if (row.size() != dim) throw ProtocolError("ctx_reps row " + std::to_string(i) + " has wrong length");
      std::copy(row.begin(), row.end(), out.token_reps.row(i).begin());
    }
    if (!AllFinite(out.cls) || !AllFinite(out.token_reps.data)) {
      throw ProtocolError("sidecar returned non-finite values");
    }
    return out;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad sidecar response: ") + e.what());
  }
}

SidecarEncoder::SidecarEncoder(EncoderConfig config) : config_(std::move(config)) {
  ValidateEncoderConfig(config_);
  if (config_.sidecar_pool_size == 0) config_.sidecar_pool_size = 1;
  Release(Connect(&remote_name_));
  open_ = 1;
}

SidecarEncoder::~SidecarEncoder() = default;

std::unique_ptr<LineChannel> SidecarEncoder::Connect(std::string* name) const {
  auto channel = OpenChannel(config_.sidecar_address, config_.sidecar_timeout_ms);
  channel->WriteLine(json{{"op", "hello"}}.dump());
  json hello = ParseMessage(channel->ReadLine(config_.sidecar_timeout_ms));
  if (!hello.is_object() || !hello.contains("dim")) {
    throw ProtocolError("sidecar handshake missing dim");
  }
  size_t dim = hello["dim"].get<size_t>();
  if (dim != config_.dim) {
    throw ProtocolError("sidecar dim " + std::to_string(dim) + " does not match configured dim " +
                        std::to_string(config_.dim));
  }
  if (name != nullptr) *name = hello.value("name", std::string("sidecar"));
  return channel;
}

std::unique_ptr<LineChannel> SidecarEncoder::Acquire() const {
  // Reuse an idle connection, open a new one while under the pool limit,
  // otherwise wait for one to come back.
  while (true) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!idle_.empty()) {
        auto c = std::move(idle_.back());
        idle_.pop_back();
        return c;
      }
      if (open_ < config_.sidecar_pool_size) {
        ++open_;
        break;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  try {
    return Connect();
  } catch (...) {
    std::lock_guard<std::mutex> lock(mu_);
    --open_;
    throw;
  }
}

void SidecarEncoder::Release(std::unique_ptr<LineChannel> channel) const {
  std::lock_guard<std::mutex> lock(mu_);
  idle_.push_back(std::move(channel));
}

EncoderOutput SidecarEncoder::Encode(std::span<const std::string> context_tokens,
                                     std::span<const std::string> pair_tokens) const {
  if (context_tokens.empty()) throw UsageError("encode: empty context");
  const uint64_t id = next_id_.fetch_add(1);
  json req;
  req["id"] = id;
  req["op"] = "encode";
  req["ctx"] = std::vector<std::string>(context_tokens.begin(), context_tokens.end());
  req["pair"] = std::vector<std::string>(pair_tokens.begin(), pair_tokens.end());

  auto channel = Acquire();
  try {
    channel->WriteLine(req.dump());
    json msg = ParseMessage(channel->ReadLine(config_.sidecar_timeout_ms));
    EncoderOutput out = ParseEncodeResponse(msg, id, config_.dim, context_tokens.size());
    Release(std::move(channel));
    return out;
  } catch (const ProtocolError&) {
    // The stream is still in sync after an in-band error; keep it.
    Release(std::move(channel));
    throw;
  } catch (...) {
    std::lock_guard<std::mutex> lock(mu_);
    --open_;
    throw;
  }
}

}  // namespace dst
