#pragma once

#include "rtsearch/controller.hpp"
#include "rtsearch/session.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace rts::protocol {

enum class Direction { request, response, event };

// One newline-delimited JSON object. Requests carry `id`, `command`, `body`;
// responses echo `id` and `command` and carry `ok` plus `body` or
// `error`/`message`; events carry `event` and `body` and no id.
struct Message {
  Direction direction = Direction::request;
  std::optional<std::int64_t> id;
  std::string name; // command or event name
  bool ok = true;
  std::string error;
  std::string message;
  nlohmann::json body = nlohmann::json::object();

  bool operator==(const Message&) const = default;
};

class ProtocolError : public std::runtime_error {
public:
  ProtocolError(std::optional<std::int64_t> id, const std::string& what)
      : std::runtime_error(what), id_(id) {}
  std::optional<std::int64_t> id() const { return id_; }

private:
  std::optional<std::int64_t> id_;
};

nlohmann::json to_json(const Message& m);
Message from_json(const nlohmann::json& j); // throws ProtocolError
std::string serialize(const Message& m);    // single line, no trailing newline
Message parse(std::string_view line);        // throws ProtocolError

std::string_view command_name(CommandKind kind);
std::optional<CommandKind> command_from_name(std::string_view name);
bool resumes_execution(CommandKind kind);

// Throws ProtocolError for unknown commands or malformed bodies.
Command to_command(const Message& request);
Message to_response(std::int64_t id, const Command& cmd, const Reply& reply);
Message to_event(const Event& event);
Message error_response(std::optional<std::int64_t> id, std::string_view command,
                       std::string_view error, std::string_view message);

// Bridges serialized requests to a DebugSession. Every outgoing line (reply
// or event, already serialized, without newline) is handed to `sink` in the
// order the session emitted it.
class Endpoint {
public:
  using Sink = std::function<void(const std::string& line)>;

  Endpoint(ProgramBundle program, Sink sink, VmOptions options = {});
  ~Endpoint();

  void receive(std::string_view line);
  void close();

private:
  void send(const Message& m);

  Sink sink_;
  std::mutex send_mutex_;
  std::unique_ptr<DebugSession> session_;
};

} // namespace rts::protocol
