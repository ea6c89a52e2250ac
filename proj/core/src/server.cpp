#include "rtsearch/server.hpp"
#include "rtsearch/error.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace rts::protocol {

namespace {

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) {
      continue;
    }
    if (n <= 0) {
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

// Buffered reader over a socket.
class Reader {
public:
  explicit Reader(int fd) : fd_(fd) {}

  bool fill() {
    char chunk[4096];
    for (;;) {
      ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) {
        continue;
      }
      if (n <= 0) {
        return false;
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
      return true;
    }
  }

  std::optional<std::string> line() {
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string out = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!out.empty() && out.back() == '\r') {
          out.pop_back();
        }
        return out;
      }
      if (!fill()) {
        return std::nullopt;
      }
    }
  }

  std::optional<std::string> bytes(std::size_t n) {
    while (buffer_.size() < n) {
      if (!fill()) {
        return std::nullopt;
      }
    }
    std::string out = buffer_.substr(0, n);
    buffer_.erase(0, n);
    return out;
  }

  // Peeks the first bytes without consuming them.
  std::optional<std::string_view> peek(std::size_t n) {
    while (buffer_.size() < n) {
      if (!fill()) {
        return std::nullopt;
      }
    }
    return std::string_view(buffer_).substr(0, n);
  }

private:
  int fd_;
  std::string buffer_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct HttpRequest {
  std::string method;
  std::string target;
  std::vector<std::pair<std::string, std::string>> headers;

  std::string header(std::string_view name) const {
    for (const auto& [k, v] : headers) {
      if (k == name) {
        return v;
      }
    }
    return {};
  }
};

std::optional<HttpRequest> read_http_request(Reader& reader) {
  auto first = reader.line();
  if (!first) {
    return std::nullopt;
  }
  HttpRequest req;
  std::istringstream status(*first);
  status >> req.method >> req.target;
  for (;;) {
    auto line = reader.line();
    if (!line) {
      return std::nullopt;
    }
    if (line->empty()) {
      return req;
    }
    auto colon = line->find(':');
    if (colon == std::string::npos) {
      continue;
    }
    std::string value = line->substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    req.headers.emplace_back(lower(line->substr(0, colon)), value);
  }
}

std::string ws_frame(std::uint8_t opcode, std::string_view payload) {
  std::string out;
  out += static_cast<char>(0x80 | opcode);
  if (payload.size() < 126) {
    out += static_cast<char>(payload.size());
  } else if (payload.size() <= 0xffff) {
    out += static_cast<char>(126);
    out += static_cast<char>((payload.size() >> 8) & 0xff);
    out += static_cast<char>(payload.size() & 0xff);
  } else {
    out += static_cast<char>(127);
    for (int shift = 56; shift >= 0; shift -= 8) {
      out += static_cast<char>((static_cast<std::uint64_t>(payload.size()) >> shift) & 0xff);
    }
  }
  out.append(payload);
  return out;
}

struct WsFrame {
  bool fin = true;
  std::uint8_t opcode = 0;
  std::string payload;
};

std::optional<WsFrame> read_ws_frame(Reader& reader) {
  auto head = reader.bytes(2);
  if (!head) {
    return std::nullopt;
  }
  WsFrame f;
  auto b0 = static_cast<std::uint8_t>((*head)[0]);
  auto b1 = static_cast<std::uint8_t>((*head)[1]);
  f.fin = (b0 & 0x80) != 0;
  f.opcode = b0 & 0x0f;
  bool masked = (b1 & 0x80) != 0;
  std::uint64_t len = b1 & 0x7f;
  if (len == 126 || len == 127) {
    auto ext = reader.bytes(len == 126 ? 2 : 8);
    if (!ext) {
      return std::nullopt;
    }
    len = 0;
    for (char c : *ext) {
      len = (len << 8) | static_cast<std::uint8_t>(c);
    }
  }
  if (len > (1u << 24)) {
    return std::nullopt;
  }
  std::string mask;
  if (masked) {
    auto m = reader.bytes(4);
    if (!m) {
      return std::nullopt;
    }
    mask = *m;
  }
  auto payload = reader.bytes(static_cast<std::size_t>(len));
  if (!payload) {
    return std::nullopt;
  }
  f.payload = std::move(*payload);
  if (masked) {
    for (std::size_t i = 0; i < f.payload.size(); ++i) {
      f.payload[i] = static_cast<char>(f.payload[i] ^ mask[i % 4]);
    }
  }
  return f;
}

std::string content_type(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  return "application/octet-stream";
}

void serve_static(int fd, const HttpRequest& req, const std::optional<std::filesystem::path>& root) {
  std::string target = req.target.substr(0, req.target.find('?'));
  if (target == "/") {
    target = "/index.html";
  }
  std::string body;
  std::string status = "404 Not Found";
  std::string type = "text/plain";
  if (root && target.find("..") == std::string::npos) {
    auto path = *root / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (in) {
      std::ostringstream s;
      s << in.rdbuf();
      body = s.str();
      status = "200 OK";
      type = content_type(path);
    }
  }
  if (status != "200 OK") {
    body = "not found\n";
  }
  std::ostringstream out;
  out << "HTTP/1.1 " << status << "\r\nContent-Type: " << type
      << "\r\nContent-Length: " << body.size() << "\r\nConnection: close\r\n\r\n"
      << body;
  write_all(fd, out.str());
}

} // namespace

std::string websocket_accept_key(std::string_view client_key) {
  std::string input(client_key);
  input += "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest);
  unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

Server::Server(ProgramFactory factory, ServerOptions options)
    : factory_(std::move(factory)), options_(std::move(options)) {}

Server::~Server() {
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
  }
}

std::uint16_t Server::listen() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) {
    throw Error(Errc::io_error, std::string("socket: ") + std::strerror(errno));
  }
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options_.port);
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::io_error, "bad host address " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 8) != 0) {
    throw Error(Errc::io_error, "cannot listen on port " + std::to_string(options_.port) + ": " +
                                    std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

void Server::stop() { stopping_ = true; }

int Server::accept_client() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 100);
    if (ready <= 0) {
      continue;
    }
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd >= 0) {
      return fd;
    }
  }
  return -1;
}

void Server::reject_extra_clients(std::atomic<bool>& active) {
  const std::string refusal =
      serialize(error_response(std::nullopt, "", "bad_state", "another client is connected")) + "\n";
  while (active && !stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) {
      continue;
    }
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd >= 0) {
      write_all(fd, refusal);
      ::shutdown(fd, SHUT_RDWR);
      ::close(fd);
    }
  }
}

void Server::serve() {
  if (listen_fd_ < 0) {
    listen();
  }
  for (;;) {
    int fd = accept_client();
    if (fd < 0) {
      return;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    Reader reader(fd);
    bool websocket = false;

    auto start = reader.peek(4);
    if (!start) {
      ::close(fd);
      continue;
    }
    if (*start == "GET ") {
      auto req = read_http_request(reader);
      if (!req) {
        ::close(fd);
        continue;
      }
      if (lower(req->header("upgrade")) != "websocket") {
        serve_static(fd, *req, options_.static_dir);
        ::close(fd);
        continue;
      }
      std::string key = req->header("sec-websocket-key");
      std::string handshake = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                              "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                              websocket_accept_key(key) + "\r\n\r\n";
      if (!write_all(fd, handshake)) {
        ::close(fd);
        continue;
      }
      websocket = true;
    }

    std::atomic<bool> active{true};
    std::thread rejector([this, &active] { reject_extra_clients(active); });
    {
      std::mutex write_mutex;
      Endpoint endpoint(
          factory_(),
          [fd, websocket, &write_mutex](const std::string& line) {
            std::lock_guard lock(write_mutex);
            write_all(fd, websocket ? ws_frame(0x1, line) : line + "\n");
          },
          options_.vm);

      if (websocket) {
        std::string pending;
        while (auto frame = read_ws_frame(reader)) {
          if (frame->opcode == 0x8) {
            std::lock_guard lock(write_mutex);
            write_all(fd, ws_frame(0x8, {}));
            break;
          }
          if (frame->opcode == 0x9) {
            std::lock_guard lock(write_mutex);
            write_all(fd, ws_frame(0xA, frame->payload));
            continue;
          }
          if (frame->opcode == 0x1 || frame->opcode == 0x0) {
            pending += frame->payload;
            if (frame->fin) {
              endpoint.receive(pending);
              pending.clear();
            }
          }
        }
      } else {
        while (auto line = reader.line()) {
          if (!line->empty()) {
            endpoint.receive(*line);
          }
        }
      }
      endpoint.close();
    }
    active = false;
    rejector.join();
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    return;
  }
}

} // namespace rts::protocol
