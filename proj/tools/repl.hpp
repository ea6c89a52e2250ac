#pragma once

#include "rtsearch/protocol.hpp"

#include <condition_variable>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <string>

namespace rtsearch_cli {

struct ReplOptions {
  bool ignore_case = false;
  bool regex = false;
  bool whole_word = false;
  bool skip_repeats = false;
};

// Line-oriented debugger front end. Each command becomes a protocol request
// on an in-process endpoint; replies and events are rendered to `out`.
class Repl {
public:
  Repl(rts::ProgramBundle bundle, ReplOptions options, std::ostream& out);
  ~Repl();

  // Runs one command line. Returns false once the user quits.
  bool execute(const std::string& line);

private:
  void deliver(const std::string& line);
  rts::protocol::Message take();
  // Sends a request and renders everything up to its response. When
  // `until_stop` is set and the request succeeded, keeps rendering until a
  // stopped or terminated event.
  void request(const std::string& command, nlohmann::json body, bool until_stop);
  void render_response(const rts::protocol::Message& m);
  // Returns true for stopped/terminated.
  bool render_event(const rts::protocol::Message& m);
  void help();

  ReplOptions options_;
  std::ostream& out_;
  std::int64_t next_id_ = 1;

  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<std::string> inbox_;

  rts::protocol::Endpoint endpoint_;
};

} // namespace rtsearch_cli
