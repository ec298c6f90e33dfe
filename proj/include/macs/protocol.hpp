#pragma once

// Newline-delimited JSON protocol for external editor and evaluator workers.
//
// Transport is any byte stream: a child process's standard streams or a TCP
// connection. One request is in flight per connection and request ids
// increase strictly. Messages:
//
//   -> {"type":"hello","protocol":1,"roles":[...],"attr_ids":[...]}
//   <- {"type":"hello","protocol":1,...}
//   -> {"id":n,"type":"edit","episode_id":..,"context":..,"anchor":{seq,attrs}?,
//       "current":{seq,attrs},"target":[{attr_id,start,end}],"n_candidates":k,"seed":s}
//   <- {"id":n,"candidates":[...]}
//   -> {"id":n,"type":"eval","attr_id":..,"sequences":[...]}
//   <- {"id":n,"values":[...]}
//   -> {"type":"shutdown"}
//
// Any malformed reply, id mismatch or count mismatch abandons the connection.

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "macs/editors.hpp"
#include "macs/errors.hpp"
#include "macs/evaluators.hpp"
#include "macs/jsonl.hpp"
#include "macs/log.hpp"

extern char** environ;

namespace macs {

inline constexpr int kProtocolVersion = 1;

using Millis = std::chrono::milliseconds;

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // Next line without its terminator; nullopt at end of stream. Throws
  // BridgeError when nothing arrives within `timeout`.
  virtual std::optional<std::string> read_line(Millis timeout) = 0;
};

// Line framing over a pair of file descriptors (may be the same socket).
class FdChannel : public LineChannel {
 public:
  static constexpr std::size_t kMaxLine = std::size_t{64} << 20;

  FdChannel(int read_fd, int write_fd, bool is_socket = false)
      : rfd_(read_fd), wfd_(write_fd), socket_(is_socket) {}

  ~FdChannel() override { close_fds(); }

  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(const std::string& line) override {
    if (line.find('\n') != std::string::npos) throw ContractError("protocol line contains a newline");
    std::string data = line + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = socket_ ? ::send(wfd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                : ::write(wfd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("worker write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line(Millis timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) {
        if (buf_.empty()) return std::nullopt;
        std::string line = std::move(buf_);
        buf_.clear();
        return line;
      }
      if (buf_.size() > kMaxLine) throw ProtocolError("worker line exceeds the size limit");
      const auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw BridgeError("worker timed out");
      pollfd p{rfd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) throw BridgeError("worker timed out");
      char chunk[65536];
      const ssize_t n = ::read(rfd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw BridgeError(std::string("worker read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        eof_ = true;
      } else {
        buf_.append(chunk, static_cast<std::size_t>(n));
      }
    }
  }

  // Signals end of input to the peer.
  void close_write() {
    if (wfd_ < 0) return;
    if (socket_) {
      ::shutdown(wfd_, SHUT_WR);
    } else {
      ::close(wfd_);
      wfd_ = -1;
    }
  }

 private:
  void close_fds() {
    if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
    if (rfd_ >= 0) ::close(rfd_);
    rfd_ = wfd_ = -1;
  }

  int rfd_, wfd_;
  bool socket_;
  std::string buf_;
  bool eof_ = false;
};

// A worker launched as a child process speaking over its stdin/stdout. The
// child's stderr is inherited, its environment is ours plus `env`.
// Destruction closes the child's stdin, waits briefly and then kills it.
class ChildProcess : public LineChannel {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv, const std::map<std::string, std::string>& env = {},
                        Millis reap_timeout = Millis(2000))
      : reap_timeout_(reap_timeout) {
    if (argv.empty()) throw ConfigError("worker command is empty");
    // A dead worker must surface as a write error, not kill the engine.
    struct sigaction old {};
    sigaction(SIGPIPE, nullptr, &old);
    if (old.sa_handler == SIG_DFL) ::signal(SIGPIPE, SIG_IGN);

    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw BridgeError("pipe failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BridgeError("pipe failed");
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, to_child[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&fa, from_child[1], STDOUT_FILENO);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    std::vector<std::string> env_strings;
    for (char** e = environ; e && *e; ++e) {
      const std::string_view kv(*e);
      if (!env.count(std::string(kv.substr(0, kv.find('='))))) env_strings.emplace_back(kv);
    }
    for (const auto& [k, v] : env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& e : env_strings) envp.push_back(e.data());
    envp.push_back(nullptr);
    const int rc = ::posix_spawnp(&pid_, args[0], &fa, nullptr, args.data(), envp.data());
    posix_spawn_file_actions_destroy(&fa);
    ::close(to_child[0]);
    ::close(from_child[1]);
    if (rc != 0) {
      ::close(to_child[1]);
      ::close(from_child[0]);
      throw BridgeError("cannot launch worker '" + argv[0] + "': " + std::strerror(rc));
    }
    chan_ = std::make_unique<FdChannel>(from_child[0], to_child[1]);
  }

  ~ChildProcess() override {
    chan_->close_write();
    const auto deadline = std::chrono::steady_clock::now() + reap_timeout_;
    while (std::chrono::steady_clock::now() < deadline) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(Millis(5));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  pid_t pid() const noexcept { return pid_; }
  void write_line(const std::string& line) override { chan_->write_line(line); }
  std::optional<std::string> read_line(Millis timeout) override { return chan_->read_line(timeout); }

 private:
  pid_t pid_ = -1;
  Millis reap_timeout_;
  std::unique_ptr<FdChannel> chan_;
};

// Connects to host:port.
inline std::unique_ptr<FdChannel> connect_tcp(const std::string& host, const std::string& port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw BridgeError("cannot resolve " + host + ":" + port + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw BridgeError("cannot connect to " + host + ":" + port);
  return std::make_unique<FdChannel>(fd, fd, true);
}

// "host:port" -> channel.
inline std::unique_ptr<FdChannel> connect_tcp(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ConfigError("worker address must look like host:port");
  }
  return connect_tcp(address.substr(0, colon), address.substr(colon + 1));
}

// ---------------------------------------------------------------------------
// Client

inline json request_to_json(const EditRequest& r, const AttributeSpace& space) {
  json j = json::object();
  j["type"] = "edit";
  j["episode_id"] = r.episode_id;
  j["context"] = r.context;
  if (r.anchor) j["anchor"] = scored_to_json(*r.anchor, space);
  j["current"] = scored_to_json(r.current, space);
  j["target"] = constraint_to_json(r.target);
  j["n_candidates"] = r.n_candidates;
  j["seed"] = r.seed;
  return j;
}

class WorkerClient {
 public:
  WorkerClient(std::unique_ptr<LineChannel> channel, Millis timeout)
      : chan_(std::move(channel)), timeout_(timeout) {
    if (!chan_) throw ContractError("worker client needs a channel");
  }

  ~WorkerClient() {
    try {
      if (!broken_ && greeted_) shutdown();
    } catch (const Error&) {
    }
  }

  WorkerClient(const WorkerClient&) = delete;
  WorkerClient& operator=(const WorkerClient&) = delete;

  // Sends the hello line and checks the worker's reply. Returns the reply.
  json handshake(const std::vector<std::string>& roles, const std::vector<std::string>& attr_ids) {
    std::lock_guard lock(mu_);
    check_usable();
    send({{"type", "hello"}, {"protocol", kProtocolVersion}, {"roles", roles}, {"attr_ids", attr_ids}});
    const json reply = receive();
    if (reply.value("type", "") != "hello") fail("worker did not answer the handshake with hello");
    const auto it = reply.find("protocol");
    if (it == reply.end() || !it->is_number_integer() || it->get<long long>() != kProtocolVersion) {
      fail("worker speaks an unsupported protocol version");
    }
    greeted_ = true;
    return reply;
  }

  std::vector<std::string> edit(const EditRequest& r, const AttributeSpace& space) {
    validate(r);
    std::lock_guard lock(mu_);
    check_ready();
    json msg = request_to_json(r, space);
    const auto id = next_id();
    msg["id"] = id;
    send(msg);
    const json reply = receive_for(id);
    const auto it = reply.find("candidates");
    if (it == reply.end() || !it->is_array()) fail("edit reply lacks a candidates array");
    if (it->size() != r.n_candidates) {
      fail("edit reply has " + std::to_string(it->size()) + " candidates, expected " +
           std::to_string(r.n_candidates));
    }
    std::vector<std::string> out;
    for (const auto& c : *it) {
      if (!c.is_string()) fail("edit reply candidate is not a string");
      out.push_back(c.get<std::string>());
    }
    return out;
  }

  std::vector<double> eval(const std::string& attr_id, std::span<const std::string> seqs) {
    if (seqs.empty()) return {};
    std::lock_guard lock(mu_);
    check_ready();
    const auto id = next_id();
    send({{"id", id}, {"type", "eval"}, {"attr_id", attr_id}, {"sequences", std::vector<std::string>(seqs.begin(), seqs.end())}});
    const json reply = receive_for(id);
    const auto it = reply.find("values");
    if (it == reply.end() || !it->is_array()) fail("eval reply lacks a values array");
    if (it->size() != seqs.size()) {
      fail("eval reply has " + std::to_string(it->size()) + " values, expected " + std::to_string(seqs.size()));
    }
    std::vector<double> out;
    for (const auto& v : *it) {
      if (!v.is_number()) fail("eval reply value is not a number");
      out.push_back(v.get<double>());
    }
    return out;
  }

  void shutdown() {
    std::lock_guard lock(mu_);
    if (broken_) return;
    send({{"type", "shutdown"}});
    broken_ = true;  // nothing may follow a shutdown
  }

  bool usable() const noexcept { return !broken_; }
  std::uint64_t last_id() const noexcept { return id_; }

 private:
  [[noreturn]] void fail(const std::string& what) {
    broken_ = true;
    throw ProtocolError(what);
  }

  void check_usable() const {
    if (broken_) throw ProtocolError("worker connection was abandoned");
  }

  void check_ready() const {
    check_usable();
    if (!greeted_) throw ProtocolError("worker request before handshake");
  }

  std::uint64_t next_id() { return ++id_; }

  void send(const json& msg) {
    std::string line;
    try {
      line = msg.dump();
    } catch (const json::type_error& e) {
      throw InputError(std::string("cannot encode worker message: ") + e.what());
    }
    try {
      chan_->write_line(line);
    } catch (const BridgeError&) {
      broken_ = true;
      throw;
    }
  }

  json receive() {
    std::optional<std::string> line;
    try {
      line = chan_->read_line(timeout_);
    } catch (const ProtocolError&) {
      broken_ = true;
      throw;
    }
    if (!line) {
      broken_ = true;
      throw BridgeError("worker closed the connection");
    }
    json j;
    try {
      j = json::parse(*line);
    } catch (const json::parse_error&) {
      fail("malformed worker line: " + line->substr(0, 200));
    }
    if (!j.is_object()) fail("worker message is not a JSON object");
    return j;
  }

  json receive_for(std::uint64_t id) {
    json j = receive();
    if (j.contains("error")) {
      fail("worker reported an error: " + (j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump()));
    }
    const auto it = j.find("id");
    if (it == j.end() || !it->is_number_unsigned() || it->get<std::uint64_t>() != id) {
      fail("worker reply id does not match request " + std::to_string(id));
    }
    return j;
  }

  std::unique_ptr<LineChannel> chan_;
  Millis timeout_;
  std::mutex mu_;
  std::uint64_t id_ = 0;
  bool greeted_ = false;
  bool broken_ = false;
};

// ---------------------------------------------------------------------------
// Adapters

class ExternalEditor final : public Editor {
 public:
  ExternalEditor(std::shared_ptr<WorkerClient> client, AttributeSpace space)
      : client_(std::move(client)), space_(std::move(space)) {}

  std::vector<std::string> propose(const EditRequest& r) override { return client_->edit(r, space_); }

 private:
  std::shared_ptr<WorkerClient> client_;
  AttributeSpace space_;
};

class ExternalEvaluator final : public Evaluator {
 public:
  ExternalEvaluator(std::string id, AttributeSpec spec, std::shared_ptr<WorkerClient> client,
                    bool deterministic = false)
      : Evaluator(EvaluatorSpec{std::move(id), EvaluatorKind::unary, std::move(spec), deterministic}),
        client_(std::move(client)) {}

  std::vector<double> evaluate_raw(std::span<const std::string> seqs) const override {
    for (const auto& s : seqs) {
      if (s.empty()) throw InputError(id() + ": empty sequence");
    }
    return client_->eval(spec().spec.id, seqs);
  }

 private:
  std::shared_ptr<WorkerClient> client_;
};

}  // namespace macs
