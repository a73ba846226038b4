#include <arpa/inet.h>
#include <csignal>
#include <cstring>
#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "h2v/embed.hpp"
#include "h2v/error.hpp"
#include "h2v/util.hpp"

namespace h2v {

namespace {

// Transport-level failure: worth a reconnect and retry.
struct ConnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string frame_header(uint32_t len) {
  char b[4] = {static_cast<char>(len), static_cast<char>(len >> 8),
               static_cast<char>(len >> 16), static_cast<char>(len >> 24)};
  return std::string(b, 4);
}

uint32_t parse_frame_header(const unsigned char* b) {
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void ignore_sigpipe_once() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

struct ExternalEncoder::Conn {
  virtual ~Conn() = default;
  virtual void send_all(const char* data, size_t n) = 0;
  virtual void recv_all(char* data, size_t n) = 0;

  void send_frame(const std::string& payload) {
    if (payload.size() > (1u << 30)) throw ConnError("frame too large");
    std::string header = frame_header(static_cast<uint32_t>(payload.size()));
    send_all(header.data(), header.size());
    send_all(payload.data(), payload.size());
  }

  std::string recv_frame() {
    unsigned char header[4];
    recv_all(reinterpret_cast<char*>(header), 4);
    uint32_t len = parse_frame_header(header);
    if (len > (1u << 30)) throw ConnError("frame too large");
    std::string payload(len, '\0');
    recv_all(payload.data(), len);
    return payload;
  }
};

namespace {

struct TcpConn final : ExternalEncoder::Conn {
  int fd = -1;

  TcpConn(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    int rc = getaddrinfo(host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) throw ConnError("resolve " + host + ": " + gai_strerror(rc));
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      close(fd);
      fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) throw ConnError("connect " + host + ":" + port + " failed");
  }

  ~TcpConn() override {
    if (fd >= 0) close(fd);
  }

  void send_all(const char* data, size_t n) override {
    size_t sent = 0;
    while (sent < n) {
      ssize_t k = send(fd, data + sent, n - sent, MSG_NOSIGNAL);
      if (k <= 0) throw ConnError("socket send failed");
      sent += static_cast<size_t>(k);
    }
  }

  void recv_all(char* data, size_t n) override {
    size_t got = 0;
    while (got < n) {
      ssize_t k = recv(fd, data + got, n - got, 0);
      if (k <= 0) throw ConnError("socket closed mid-frame");
      got += static_cast<size_t>(k);
    }
  }
};

struct CmdConn final : ExternalEncoder::Conn {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;

  explicit CmdConn(const std::string& command_line) {
    ignore_sigpipe_once();
    std::vector<std::string> args;
    for (auto& a : split(command_line, ' '))
      if (!a.empty()) args.push_back(a);
    if (args.empty()) throw ConnError("empty encoder command");

    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
      throw ConnError("pipe() failed");
    pid = fork();
    if (pid < 0) throw ConnError("fork() failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child = in_pipe[1];
    from_child = out_pipe[0];
  }

  ~CmdConn() override {
    if (to_child >= 0) close(to_child);
    if (from_child >= 0) close(from_child);
    if (pid > 0) {
      int status = 0;
      waitpid(pid, &status, 0);
    }
  }

  void send_all(const char* data, size_t n) override {
    size_t sent = 0;
    while (sent < n) {
      ssize_t k = write(to_child, data + sent, n - sent);
      if (k <= 0) throw ConnError("encoder process stdin closed");
      sent += static_cast<size_t>(k);
    }
  }

  void recv_all(char* data, size_t n) override {
    size_t got = 0;
    while (got < n) {
      ssize_t k = read(from_child, data + got, n - got);
      if (k <= 0) throw ConnError("encoder process stdout closed");
      got += static_cast<size_t>(k);
    }
  }
};

std::unique_ptr<ExternalEncoder::Conn> open_conn(const std::string& endpoint) {
  if (starts_with(endpoint, "tcp:")) {
    std::string rest = endpoint.substr(4);
    size_t colon = rest.rfind(':');
    if (colon == std::string::npos)
      raise(ErrorKind::Validation, "endpoint must be tcp:HOST:PORT: " + endpoint);
    return std::make_unique<TcpConn>(rest.substr(0, colon),
                                     rest.substr(colon + 1));
  }
  if (starts_with(endpoint, "cmd:")) {
    return std::make_unique<CmdConn>(endpoint.substr(4));
  }
  raise(ErrorKind::Validation,
        "endpoint must start with tcp: or cmd:, got " + endpoint);
}

}  // namespace

ExternalEncoder::ExternalEncoder(std::string endpoint, Options options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (options_.batch_size == 0)
    raise(ErrorKind::Validation, "encoder batch size must be positive");
}

ExternalEncoder::~ExternalEncoder() = default;

std::vector<std::vector<float>> ExternalEncoder::roundtrip(
    const std::vector<std::string>& batch) {
  nlohmann::json request;
  request["texts"] = batch;
  const std::string payload = request.dump();

  int attempts_left = options_.max_retries + 1;
  while (true) {
    try {
      if (!conn_) conn_ = open_conn(endpoint_);
      conn_->send_frame(payload);
      std::string reply = conn_->recv_frame();

      nlohmann::json response = nlohmann::json::parse(reply, nullptr, false);
      if (response.is_discarded() || !response.contains("vectors") ||
          !response["vectors"].is_array()) {
        raise(ErrorKind::Backend,
              identifier() + ": malformed response frame");
      }
      auto vectors =
          response["vectors"].get<std::vector<std::vector<float>>>();
      if (vectors.size() != batch.size()) {
        raise(ErrorKind::Backend,
              identifier() + ": response count " +
                  std::to_string(vectors.size()) + " for " +
                  std::to_string(batch.size()) + " texts");
      }
      for (const auto& v : vectors) {
        if (v.size() != kTextDim) {
          raise(ErrorKind::Layout,
                identifier() + ": returned dimension " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(kTextDim));
        }
      }
      return vectors;
    } catch (const ConnError& e) {
      conn_.reset();
      if (--attempts_left <= 0) {
        raise(ErrorKind::Backend,
              identifier() + ": retries exhausted: " + e.what());
      }
      ++retries_used_;
    }
  }
}

std::vector<std::vector<float>> ExternalEncoder::encode(
    const std::vector<std::string>& texts) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (size_t start = 0; start < texts.size(); start += options_.batch_size) {
    size_t end = std::min(texts.size(), start + options_.batch_size);
    std::vector<std::string> batch(texts.begin() + start, texts.begin() + end);
    auto vectors = roundtrip(batch);
    for (auto& v : vectors) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace h2v
