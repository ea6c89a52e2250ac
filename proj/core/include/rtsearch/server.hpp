#pragma once

#include "rtsearch/protocol.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace rts::protocol {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 4711; // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
  VmOptions vm;
};

// Newline-delimited JSON over TCP, or the same messages as WebSocket text
// frames when the client opens with an HTTP upgrade. One client at a time;
// extra connections get a bad_state error and are closed.
class Server {
public:
  using ProgramFactory = std::function<ProgramBundle()>;

  Server(ProgramFactory factory, ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and listens; returns the bound port. Throws Errc::io_error.
  std::uint16_t listen();

  // Serves the first debug client until it disconnects. Plain HTTP GETs
  // before that are answered from static_dir and do not count as clients.
  void serve();

  // Makes a blocked serve() return.
  void stop();

private:
  int accept_client();
  void reject_extra_clients(std::atomic<bool>& active);

  ProgramFactory factory_;
  ServerOptions options_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
};

// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(std::string_view client_key);

} // namespace rts::protocol
