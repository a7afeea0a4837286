#include "adas/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <spdlog/spdlog.h>

#include "adas/errors.hpp"

namespace adas {

namespace {

constexpr std::size_t kMaxLine = 64 * 1024;

std::string errno_text() { return std::strerror(errno); }

int remaining_ms(std::chrono::steady_clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
      deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::max<long long>(0, left.count()));
}

bool send_all(int fd, const std::string& data, std::chrono::steady_clock::time_point deadline,
              bool& timed_out) {
  std::size_t off = 0;
  timed_out = false;
  while (off < data.size()) {
    pollfd p{fd, POLLOUT, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r == 0) {
      timed_out = true;
      return false;
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint e;
  std::string port_part = text;
  if (const auto colon = text.rfind(':'); colon != std::string::npos) {
    if (colon > 0) e.host = text.substr(0, colon);
    port_part = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    e.port = std::stoi(port_part, &used);
    if (used != port_part.size()) throw std::invalid_argument(port_part);
  } catch (const std::exception&) {
    throw ConfigError("endpoint \"" + text + "\" is not host:port");
  }
  if (e.port <= 0 || e.port > 65535) throw ConfigError("endpoint port out of range: " + text);
  return e;
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    reset();
    fd_ = o.release();
  }
  return *this;
}

void Socket::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

std::string_view to_string(DeliveryError e) {
  switch (e) {
    case DeliveryError::kNone: return "none";
    case DeliveryError::kConnect: return "connect";
    case DeliveryError::kTimeout: return "timeout";
    case DeliveryError::kAckMismatch: return "ack-mismatch";
    case DeliveryError::kDisconnected: return "disconnected";
  }
  return "unknown";
}

WarningClient::WarningClient(Endpoint endpoint, RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(policy) {
  if (policy_.max_retries < 0) throw ConfigError("retry budget must be >= 0");
}

DeliveryResult WarningClient::attempt(const std::string& line) {
  using Clock = std::chrono::steady_clock;
  DeliveryResult res;
  auto fail = [&](DeliveryError e, std::string detail) {
    socket_.reset();
    pending_.clear();
    res.error = e;
    res.detail = std::move(detail);
    return res;
  };

  if (!socket_.valid()) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string port = std::to_string(endpoint_.port);
    if (const int rc = ::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &found);
        rc != 0) {
      return fail(DeliveryError::kConnect, std::string("resolve: ") + ::gai_strerror(rc));
    }
    std::string last_error = "no addresses";
    const auto deadline = Clock::now() + policy_.timeout;
    for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
      Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (!s.valid()) continue;
      ::fcntl(s.fd(), F_SETFL, ::fcntl(s.fd(), F_GETFL) | O_NONBLOCK);
      int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
      if (rc < 0 && errno == EINPROGRESS) {
        pollfd p{s.fd(), POLLOUT, 0};
        rc = ::poll(&p, 1, remaining_ms(deadline));
        if (rc == 0) {
          last_error = "connect timed out";
          continue;
        }
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      }
      if (rc == 0) {
        int one = 1;
        ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        socket_ = std::move(s);
        break;
      }
      last_error = errno_text();
    }
    ::freeaddrinfo(found);
    if (!socket_.valid()) return fail(DeliveryError::kConnect, last_error);
  }

  const auto deadline = Clock::now() + policy_.timeout;
  bool timed_out = false;
  if (!send_all(socket_.fd(), line + "\n", deadline, timed_out)) {
    return timed_out ? fail(DeliveryError::kTimeout, "send timed out")
                     : fail(DeliveryError::kDisconnected, "send: " + errno_text());
  }

  // read one reply line
  std::string buf = std::move(pending_);
  pending_.clear();
  for (;;) {
    if (const auto nl = buf.find('\n'); nl != std::string::npos) {
      std::string reply = buf.substr(0, nl);
      pending_ = buf.substr(nl + 1);
      if (!reply.empty() && reply.back() == '\r') reply.pop_back();
      if (reply == "OK") {
        res.delivered = true;
        return res;
      }
      return fail(DeliveryError::kAckMismatch, "server replied \"" + reply + "\"");
    }
    if (buf.size() > kMaxLine) return fail(DeliveryError::kAckMismatch, "oversized reply");
    pollfd p{socket_.fd(), POLLIN, 0};
    const int r = ::poll(&p, 1, remaining_ms(deadline));
    if (r == 0) return fail(DeliveryError::kTimeout, "no ack within timeout");
    if (r < 0) {
      if (errno == EINTR) continue;
      return fail(DeliveryError::kDisconnected, "poll: " + errno_text());
    }
    char chunk[512];
    const ssize_t n = ::recv(socket_.fd(), chunk, sizeof chunk, 0);
    if (n == 0) return fail(DeliveryError::kDisconnected, "connection closed before ack");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return fail(DeliveryError::kDisconnected, "recv: " + errno_text());
    }
    buf.append(chunk, static_cast<std::size_t>(n));
  }
}

DeliveryResult WarningClient::send_line(const std::string& line) {
  auto backoff = policy_.initial_backoff;
  DeliveryResult res;
  for (int attempt_no = 0; attempt_no <= policy_.max_retries; ++attempt_no) {
    if (attempt_no > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(backoff.count() * policy_.backoff_multiplier));
    }
    res = attempt(line);
    res.attempts = attempt_no + 1;
    if (res.delivered) return res;
    spdlog::debug("warning delivery to {} failed (attempt {}): {} ({})", endpoint_.str(),
                  res.attempts, to_string(res.error), res.detail);
  }
  return res;
}

DeliveryResult WarningClient::send(const WarningMessage& msg) {
  return send_line(serialize_warning(msg));
}

DeliveryResult send_warning(const WarningMessage& msg, const Endpoint& endpoint,
                            const RetryPolicy& policy) {
  WarningClient client(endpoint, policy);
  return client.send(msg);
}

AsyncWarningSender::AsyncWarningSender(Endpoint endpoint, RetryPolicy policy,
                                       std::size_t capacity, ResultCallback on_result)
    : client_(std::move(endpoint), policy),
      capacity_(std::max<std::size_t>(1, capacity)),
      on_result_(std::move(on_result)),
      worker_([this] { run(); }) {}

AsyncWarningSender::~AsyncWarningSender() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void AsyncWarningSender::submit(WarningMessage msg) {
  {
    std::lock_guard lk(mu_);
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
      spdlog::warn("warning queue full; dropped oldest warning ({} dropped so far)",
                   dropped_.load());
    }
    queue_.push_back(std::move(msg));
  }
  cv_.notify_all();
}

void AsyncWarningSender::flush() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [this] { return queue_.empty() && !in_flight_; });
}

void AsyncWarningSender::run() {
  std::unique_lock lk(mu_);
  for (;;) {
    cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) return;  // stopping with nothing left
    WarningMessage msg = std::move(queue_.front());
    queue_.pop_front();
    in_flight_ = true;
    lk.unlock();

    const DeliveryResult res = client_.send(msg);
    if (res.delivered) {
      ++delivered_;
    } else {
      ++failed_;
      spdlog::warn("warning for frame {} not delivered after {} attempt(s): {} ({})",
                   msg.frame_index, res.attempts, to_string(res.error), res.detail);
    }
    if (on_result_) on_result_(msg, res);

    lk.lock();
    in_flight_ = false;
    cv_.notify_all();
  }
}

CloudServer::CloudServer(CloudServerOptions options) : options_(std::move(options)) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(options_.port);
  const char* host = options_.bind_address.empty() ? nullptr : options_.bind_address.c_str();
  if (const int rc = ::getaddrinfo(host, port.c_str(), &hints, &found); rc != 0) {
    throw IoError("cloud server: cannot resolve bind address: " +
                  std::string(::gai_strerror(rc)));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr && !listener_.valid(); ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(s.fd(), 64) == 0) {
      listener_ = std::move(s);
    } else {
      last_error = errno_text();
    }
  }
  ::freeaddrinfo(found);
  if (!listener_.valid()) {
    throw IoError("cloud server: cannot bind " + options_.bind_address + ":" + port + ": " +
                  last_error);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.ss_family == AF_INET6
                    ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                    : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

CloudServer::~CloudServer() { stop(); }

void CloudServer::start() {
  if (acceptor_.joinable()) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void CloudServer::stop() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> handlers;
  {
    std::lock_guard lk(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    handlers.swap(handlers_);
  }
  for (std::thread& t : handlers) t.join();
}

void CloudServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listener_.fd(), POLLIN, 0};
    const int r = ::poll(&p, 1, 50);
    if (r <= 0) continue;
    const int fd = ::accept(listener_.fd(), nullptr, nullptr);
    if (fd < 0) continue;
    const std::size_t n = ++accepted_;
    if (static_cast<int>(n) <= options_.drop_first_connections) {
      spdlog::info("cloud server: dropping connection {} (fault injection)", n);
      ::close(fd);
      continue;
    }
    std::lock_guard lk(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    handlers_.emplace_back([this, fd] { serve(fd); });
  }
}

void CloudServer::serve(int fd) {
  Socket sock(fd);
  std::string buf;
  char chunk[1024];
  auto reply = [&sock](const char* text) {
    bool timed_out = false;
    return send_all(sock.fd(), text,
                    std::chrono::steady_clock::now() + std::chrono::seconds(5), timed_out);
  };
  bool open = true;
  while (open && !stopping_) {
    const ssize_t n = ::recv(sock.fd(), chunk, sizeof chunk, 0);
    if (n == 0) break;
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    buf.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buf.find('\n')) != std::string::npos) {
      std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (auto msg = parse_warning(line)) {
        const std::string record = serialize_warning(*msg);
        {
          std::lock_guard lk(mu_);
          if (!options_.log_path.empty()) {
            std::ofstream log(options_.log_path, std::ios::app);
            log << record << "\n";
            log.flush();
            if (!log) spdlog::error("cloud server: failed appending to {}", options_.log_path.string());
          }
          records_.push_back(record);
        }
        spdlog::info("cloud server: warning from {} frame {}: {} -> {}", msg->device_id,
                     msg->frame_index, to_string(msg->previous_condition),
                     to_string(msg->new_condition));
        open = reply("OK\n");
      } else {
        spdlog::warn("cloud server: malformed line ({} bytes)", line.size());
        open = reply("ERR\n");
      }
      if (!open) break;
    }
    if (buf.size() > kMaxLine) {
      buf.clear();
      open = reply("ERR\n");
    }
  }
  std::lock_guard lk(mu_);
  client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
}

std::vector<std::string> CloudServer::records() const {
  std::lock_guard lk(mu_);
  return records_;
}

std::size_t CloudServer::record_count() const {
  std::lock_guard lk(mu_);
  return records_.size();
}

}  // namespace adas
