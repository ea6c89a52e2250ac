#include "repl.hpp"

#include <ostream>
#include <sstream>

namespace rtsearch_cli {

using nlohmann::json;
namespace proto = rts::protocol;

namespace {

std::string quoted(const json& v) {
  return v.is_string() ? rts::render_constant(v.get<std::string>()) : v.dump();
}

std::string location(const json& body) {
  return body.value("unit", "") + "." + body.value("function", "") + " line " +
         std::to_string(body.value("line", 0));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

Repl::Repl(rts::ProgramBundle bundle, ReplOptions options, std::ostream& out)
    : options_(options), out_(out),
      endpoint_(std::move(bundle), [this](const std::string& line) { deliver(line); }) {}

Repl::~Repl() { endpoint_.close(); }

void Repl::deliver(const std::string& line) {
  {
    std::lock_guard lock(mutex_);
    inbox_.push_back(line);
  }
  ready_.notify_one();
}

proto::Message Repl::take() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [this] { return !inbox_.empty(); });
  std::string line = std::move(inbox_.front());
  inbox_.pop_front();
  lock.unlock();
  return proto::parse(line);
}

void Repl::request(const std::string& command, json body, bool until_stop) {
  const std::int64_t id = next_id_++;
  json req{{"type", "request"}, {"id", id}, {"command", command}, {"body", std::move(body)}};
  endpoint_.receive(req.dump());

  bool ok = false;
  for (;;) {
    proto::Message m = take();
    if (m.direction == proto::Direction::response && m.id == id) {
      render_response(m);
      ok = m.ok;
      break;
    }
    render_event(m);
  }
  if (!ok || !until_stop) {
    return;
  }
  while (!render_event(take())) {
  }
}

void Repl::render_response(const proto::Message& m) {
  if (!m.ok) {
    out_ << "  error (" << m.error << "): " << m.message << '\n';
    return;
  }
  const json& b = m.body;
  if (b.contains("frames")) {
    for (const auto& f : b["frames"]) {
      out_ << "  #" << f.value("id", 0) << ' ' << location(f) << '\n';
    }
  } else if (b.contains("variables")) {
    if (b["variables"].empty()) {
      out_ << "  (no variables)\n";
    }
    for (const auto& v : b["variables"]) {
      out_ << "  " << v.value("name", "") << ": " << v.value("type", "") << " = "
           << v.value("value", "") << '\n';
    }
  } else if (b.contains("units")) {
    for (const auto& u : b["units"]) {
      out_ << "  [" << u.value("unit", "") << "]\n";
      std::istringstream text(u.value("text", ""));
      std::string line;
      for (int n = 1; std::getline(text, line); ++n) {
        out_ << "  " << n << " | " << line << '\n';
      }
    }
  } else {
    out_ << "  ok\n";
  }
}

bool Repl::render_event(const proto::Message& m) {
  const json& b = m.body;
  if (m.name == "output") {
    out_ << b.value("output", "");
    return false;
  }
  if (m.name == "terminated") {
    out_ << "! terminated: " << b.value("reason", "") << '\n';
    return true;
  }
  if (m.name == "stopped") {
    const std::string reason = b.value("reason", "");
    out_ << "! stopped: " << reason;
    if (b.contains("site")) {
      out_ << " #" << b.value("matchCount", 0);
    }
    out_ << " at " << location(b);
    if (b.contains("site")) {
      const json& s = b["site"];
      out_ << ", site " << s.value("id", 0) << " (" << s.value("kind", "") << "): "
           << quoted(b["value"]);
    }
    if (b.contains("message")) {
      out_ << ": " << b.value("message", "");
    }
    out_ << '\n';
    return true;
  }
  out_ << "! " << m.name << ' ' << b.dump() << '\n';
  return false;
}

void Repl::help() {
  out_ << "  find <text>     search the running program for <text>\n"
          "  next            resume to the next match\n"
          "  step|over|out   step in, over or out\n"
          "  continue        resume without searching\n"
          "  launch          start paused at entry\n"
          "  stack           show frames\n"
          "  locals [n]      show variables of frame n\n"
          "  source          show program text\n"
          "  pause | stop | quit\n";
}

bool Repl::execute(const std::string& raw) {
  const std::string line = trim(raw);
  if (line.empty() || line[0] == '#') {
    return true;
  }
  const auto space = line.find(' ');
  const std::string cmd = line.substr(0, space);
  const std::string arg = space == std::string::npos ? "" : trim(line.substr(space + 1));

  if (cmd == "find") {
    if (arg.empty()) {
      out_ << "  usage: find <text>\n";
      return true;
    }
    request("find",
            json{{"text", arg},
                 {"matchCase", !options_.ignore_case},
                 {"wholeWord", options_.whole_word},
                 {"regex", options_.regex},
                 {"skipRepeats", options_.skip_repeats}},
            true);
  } else if (cmd == "next" || cmd == "findNext") {
    request("findNext", json::object(), true);
  } else if (cmd == "step" || cmd == "stepIn") {
    request("stepIn", json::object(), true);
  } else if (cmd == "over" || cmd == "stepOver") {
    request("stepOver", json::object(), true);
  } else if (cmd == "out" || cmd == "stepOut") {
    request("stepOut", json::object(), true);
  } else if (cmd == "continue") {
    request("continue", json::object(), true);
  } else if (cmd == "launch") {
    request("launch", json{{"stopOnEntry", true}}, true);
  } else if (cmd == "stack" || cmd == "stackTrace") {
    request("stackTrace", json::object(), false);
  } else if (cmd == "locals" || cmd == "variables") {
    json body = json::object();
    if (!arg.empty()) {
      try {
        body["frame"] = std::stoul(arg);
      } catch (const std::exception&) {
        out_ << "  usage: locals [frame]\n";
        return true;
      }
    }
    request("variables", std::move(body), false);
  } else if (cmd == "source") {
    request("source", json::object(), false);
  } else if (cmd == "pause") {
    request("pause", json::object(), false);
  } else if (cmd == "stop") {
    request("stop", json::object(), true);
  } else if (cmd == "quit" || cmd == "exit") {
    return false;
  } else if (cmd == "help") {
    help();
  } else {
    out_ << "  unknown command: " << cmd << " (try help)\n";
  }
  return true;
}

} // namespace rtsearch_cli
