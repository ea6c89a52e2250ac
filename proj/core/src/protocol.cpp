#include "rtsearch/protocol.hpp"

#include <array>

namespace rts::protocol {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, CommandKind>, 12> kCommands = {{
    {"launch", CommandKind::launch},
    {"find", CommandKind::find},
    {"findNext", CommandKind::find_next},
    {"continue", CommandKind::continue_run},
    {"stepIn", CommandKind::step_in},
    {"stepOver", CommandKind::step_over},
    {"stepOut", CommandKind::step_out},
    {"pause", CommandKind::pause},
    {"stackTrace", CommandKind::stack_trace},
    {"variables", CommandKind::variables},
    {"source", CommandKind::source},
    {"stop", CommandKind::stop},
}};

std::string_view direction_name(Direction d) {
  switch (d) {
  case Direction::request: return "request";
  case Direction::response: return "response";
  case Direction::event: return "event";
  }
  return "?";
}

bool flag(const json& body, const char* key, bool fallback, std::optional<std::int64_t> id) {
  auto it = body.find(key);
  if (it == body.end()) {
    return fallback;
  }
  if (!it->is_boolean()) {
    throw ProtocolError(id, std::string("'") + key + "' must be a boolean");
  }
  return it->get<bool>();
}

json site_json(const CaptureSite& s) {
  return json{{"id", s.id},     {"function", s.function}, {"unit", s.unit},
              {"line", s.line}, {"kind", to_string(s.kind)}};
}

} // namespace

std::string_view command_name(CommandKind kind) {
  for (const auto& [name, k] : kCommands) {
    if (k == kind) {
      return name;
    }
  }
  return "?";
}

std::optional<CommandKind> command_from_name(std::string_view name) {
  for (const auto& [n, k] : kCommands) {
    if (n == name) {
      return k;
    }
  }
  return std::nullopt;
}

bool resumes_execution(CommandKind kind) {
  switch (kind) {
  case CommandKind::launch:
  case CommandKind::find:
  case CommandKind::find_next:
  case CommandKind::continue_run:
  case CommandKind::step_in:
  case CommandKind::step_over:
  case CommandKind::step_out: return true;
  default: return false;
  }
}

json to_json(const Message& m) {
  json j;
  j["type"] = direction_name(m.direction);
  switch (m.direction) {
  case Direction::request:
    j["id"] = m.id ? json(*m.id) : json(nullptr);
    j["command"] = m.name;
    j["body"] = m.body;
    break;
  case Direction::response:
    j["id"] = m.id ? json(*m.id) : json(nullptr);
    j["command"] = m.name;
    j["ok"] = m.ok;
    if (m.ok) {
      j["body"] = m.body;
    } else {
      j["error"] = m.error;
      j["message"] = m.message;
    }
    break;
  case Direction::event:
    j["event"] = m.name;
    j["body"] = m.body;
    break;
  }
  return j;
}

Message from_json(const json& j) {
  if (!j.is_object()) {
    throw ProtocolError(std::nullopt, "message must be a JSON object");
  }
  Message m;
  auto id_it = j.find("id");
  if (id_it != j.end() && id_it->is_number_integer()) {
    m.id = id_it->get<std::int64_t>();
  } else if (id_it != j.end() && !id_it->is_null()) {
    throw ProtocolError(std::nullopt, "'id' must be an integer");
  }

  std::string type = "request";
  if (auto t = j.find("type"); t != j.end()) {
    if (!t->is_string()) {
      throw ProtocolError(m.id, "'type' must be a string");
    }
    type = t->get<std::string>();
  } else if (j.contains("event")) {
    type = "event";
  } else if (j.contains("ok")) {
    type = "response";
  }

  const auto text = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw ProtocolError(m.id, std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
  };

  if (auto b = j.find("body"); b != j.end()) {
    if (!b->is_object()) {
      throw ProtocolError(m.id, "'body' must be an object");
    }
    m.body = *b;
  }

  if (type == "request") {
    m.direction = Direction::request;
    if (!m.id) {
      throw ProtocolError(std::nullopt, "request without an integer 'id'");
    }
    m.name = text("command");
  } else if (type == "response") {
    m.direction = Direction::response;
    auto ok = j.find("ok");
    if (ok == j.end() || !ok->is_boolean()) {
      throw ProtocolError(m.id, "response without boolean 'ok'");
    }
    m.ok = ok->get<bool>();
    m.name = j.contains("command") ? text("command") : std::string();
    if (!m.ok) {
      m.error = text("error");
      m.message = j.contains("message") ? text("message") : std::string();
    }
  } else if (type == "event") {
    m.direction = Direction::event;
    m.id.reset();
    m.name = text("event");
  } else {
    throw ProtocolError(m.id, "unknown message type '" + type + "'");
  }
  return m;
}

std::string serialize(const Message& m) { return to_json(m).dump(); }

Message parse(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) {
    throw ProtocolError(std::nullopt, "malformed JSON");
  }
  return from_json(j);
}

Command to_command(const Message& request) {
  auto kind = command_from_name(request.name);
  if (!kind) {
    throw ProtocolError(request.id, "unknown command '" + request.name + "'");
  }
  Command cmd;
  cmd.kind = *kind;
  const json& body = request.body;
  switch (cmd.kind) {
  case CommandKind::launch: cmd.stop_on_entry = flag(body, "stopOnEntry", false, request.id); break;
  case CommandKind::find: {
    auto text = body.find("text");
    if (text == body.end() || !text->is_string()) {
      throw ProtocolError(request.id, "find requires a string 'text'");
    }
    cmd.query.text = text->get<std::string>();
    cmd.query.match_case = flag(body, "matchCase", true, request.id);
    cmd.query.whole_word = flag(body, "wholeWord", false, request.id);
    cmd.query.regex = flag(body, "regex", false, request.id);
    cmd.query.skip_repeated_site = flag(body, "skipRepeats", false, request.id);
    break;
  }
  case CommandKind::variables: {
    auto frame = body.find("frame");
    if (frame != body.end()) {
      if (!frame->is_number_unsigned()) {
        throw ProtocolError(request.id, "'frame' must be a non-negative integer");
      }
      cmd.frame = frame->get<std::size_t>();
    }
    break;
  }
  default: break;
  }
  return cmd;
}

Message error_response(std::optional<std::int64_t> id, std::string_view command,
                       std::string_view error, std::string_view message) {
  Message m;
  m.direction = Direction::response;
  m.id = id;
  m.name = std::string(command);
  m.ok = false;
  m.error = std::string(error);
  m.message = std::string(message);
  return m;
}

Message to_response(std::int64_t id, const Command& cmd, const Reply& reply) {
  if (!reply.ok) {
    return error_response(id, command_name(cmd.kind), reply.error, reply.message);
  }
  Message m;
  m.direction = Direction::response;
  m.id = id;
  m.name = std::string(command_name(cmd.kind));
  struct Visitor {
    json& body;
    void operator()(std::monostate) const {}
    void operator()(const StackPayload& p) const {
      json frames = json::array();
      for (std::size_t i = 0; i < p.frames.size(); ++i) {
        const auto& f = p.frames[i];
        frames.push_back(json{{"id", i}, {"function", f.function}, {"unit", f.unit}, {"line", f.line}});
      }
      body["frames"] = std::move(frames);
    }
    void operator()(const VariablesPayload& p) const {
      json vars = json::array();
      for (const auto& v : p.variables) {
        vars.push_back(json{{"name", v.name}, {"type", v.type}, {"value", v.value}});
      }
      body["variables"] = std::move(vars);
    }
    void operator()(const SourcePayload& p) const {
      json units = json::array();
      for (const auto& u : p.units) {
        units.push_back(json{{"unit", u.unit_name}, {"path", u.path}, {"text", u.source}});
      }
      body["units"] = std::move(units);
    }
  };
  std::visit(Visitor{m.body}, reply.payload);
  return m;
}

Message to_event(const Event& event) {
  Message m;
  m.direction = Direction::event;
  struct Visitor {
    Message& m;
    void operator()(const StoppedEvent& e) const {
      m.name = "stopped";
      m.body = json{{"reason", e.reason}, {"function", e.function}, {"unit", e.unit}, {"line", e.line}};
      if (e.site) {
        m.body["site"] = site_json(*e.site);
        m.body["value"] = e.value;
        m.body["matchCount"] = e.match_count;
      }
      if (!e.message.empty()) {
        m.body["message"] = e.message;
      }
    }
    void operator()(const OutputEvent& e) const {
      m.name = "output";
      m.body = json{{"category", "stdout"}, {"output", e.text}};
    }
    void operator()(const TerminatedEvent& e) const {
      m.name = "terminated";
      m.body = json{{"reason", e.reason}};
    }
  };
  std::visit(Visitor{m}, event);
  return m;
}

Endpoint::Endpoint(ProgramBundle program, Sink sink, VmOptions options) : sink_(std::move(sink)) {
  DebugSession::Listener listener;
  listener.on_reply = [this](std::int64_t id, const Command& cmd, const Reply& reply) {
    send(to_response(id, cmd, reply));
  };
  listener.on_event = [this](const Event& e) { send(to_event(e)); };
  session_ = std::make_unique<DebugSession>(std::move(program), std::move(listener), options);
}

Endpoint::~Endpoint() { close(); }

void Endpoint::close() {
  if (session_) {
    session_->shutdown();
  }
}

void Endpoint::send(const Message& m) {
  std::string line = serialize(m);
  std::lock_guard lock(send_mutex_);
  if (sink_) {
    sink_(line);
  }
}

void Endpoint::receive(std::string_view line) {
  Message request;
  try {
    request = parse(line);
    if (request.direction != Direction::request) {
      throw ProtocolError(request.id, "expected a request");
    }
    session_->submit(*request.id, to_command(request));
  } catch (const ProtocolError& e) {
    send(error_response(e.id(), request.name, "bad_request", e.what()));
  }
}

} // namespace rts::protocol
