#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <list>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adas/monitor.hpp"

namespace adas {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;

  /// "host:port" or ":port" / "port".
  static Endpoint parse(const std::string& text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Move-only owner of a socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { reset(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset();

 private:
  int fd_ = -1;
};

enum class DeliveryError {
  kNone,
  kConnect,       // could not establish the stream
  kTimeout,       // no ack within the send timeout
  kAckMismatch,   // server answered something other than OK
  kDisconnected,  // stream closed before the ack arrived
};

std::string_view to_string(DeliveryError e);

struct DeliveryResult {
  bool delivered = false;
  DeliveryError error = DeliveryError::kNone;
  int attempts = 0;
  std::string detail;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{1000};  // per connect and per ack wait
};

/// Line-oriented sender holding one connection, reopened after any failure.
class WarningClient {
 public:
  WarningClient(Endpoint endpoint, RetryPolicy policy = {});

  /// Sends one line and waits for "OK". Retries with exponential backoff;
  /// never throws for network failures.
  DeliveryResult send(const WarningMessage& msg);
  DeliveryResult send_line(const std::string& line);

  const Endpoint& endpoint() const { return endpoint_; }

 private:
  DeliveryResult attempt(const std::string& line);

  Endpoint endpoint_;
  RetryPolicy policy_;
  Socket socket_;
  std::string pending_;  // bytes received past the last ack
};

DeliveryResult send_warning(const WarningMessage& msg, const Endpoint& endpoint,
                            const RetryPolicy& policy = {});

/// Delivers warnings from a background thread so the frame loop never waits
/// on the network. One send in flight at a time; when the queue is full the
/// oldest queued warning is dropped and counted.
class AsyncWarningSender {
 public:
  using ResultCallback = std::function<void(const WarningMessage&, const DeliveryResult&)>;

  AsyncWarningSender(Endpoint endpoint, RetryPolicy policy = {},
                     std::size_t capacity = 64, ResultCallback on_result = {});
  ~AsyncWarningSender();
  AsyncWarningSender(const AsyncWarningSender&) = delete;
  AsyncWarningSender& operator=(const AsyncWarningSender&) = delete;

  void submit(WarningMessage msg);
  /// Blocks until everything submitted so far has been attempted.
  void flush();

  std::size_t delivered() const { return delivered_; }
  std::size_t failed() const { return failed_; }
  std::size_t dropped() const { return dropped_; }

 private:
  void run();

  WarningClient client_;
  std::size_t capacity_;
  ResultCallback on_result_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WarningMessage> queue_;
  bool in_flight_ = false;
  bool stopping_ = false;
  std::atomic<std::size_t> delivered_{0};
  std::atomic<std::size_t> failed_{0};
  std::atomic<std::size_t> dropped_{0};
  std::thread worker_;
};

struct CloudServerOptions {
  std::string bind_address = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::filesystem::path log_path;  // empty: keep records in memory only
  int drop_first_connections = 0;  // fault injection: close these on accept
};

/// Mock cloud endpoint. Each valid warning line is appended to the log and
/// answered "OK"; anything else gets "ERR" and the connection stays open.
class CloudServer {
 public:
  /// Binds immediately; throws IoError when the port is unavailable.
  explicit CloudServer(CloudServerOptions options);
  ~CloudServer();
  CloudServer(const CloudServer&) = delete;
  CloudServer& operator=(const CloudServer&) = delete;

  int port() const { return port_; }
  void start();
  void stop();

  std::vector<std::string> records() const;
  std::size_t record_count() const;
  std::size_t connections_accepted() const { return accepted_; }

 private:
  void accept_loop();
  void serve(int fd);

  CloudServerOptions options_;
  Socket listener_;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> accepted_{0};
  std::thread acceptor_;

  mutable std::mutex mu_;
  std::vector<std::string> records_;
  std::list<std::thread> handlers_;
  std::vector<int> client_fds_;
};

}  // namespace adas
