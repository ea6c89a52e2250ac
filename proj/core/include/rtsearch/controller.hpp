#pragma once

#include "rtsearch/ast.hpp"
#include "rtsearch/query.hpp"
#include "rtsearch/vm.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rts {

enum class SessionState { NotStarted, Running, PausedAtMatch, PausedAtStep, Terminated };

std::string_view to_string(SessionState state);

enum class CommandKind {
  launch,
  find,
  find_next,
  continue_run,
  step_in,
  step_over,
  step_out,
  pause,
  stack_trace,
  variables,
  source,
  stop,
};

struct Command {
  Command() = default;
  explicit Command(CommandKind k) : kind(k) {}

  CommandKind kind = CommandKind::continue_run;
  Query query;               // find
  bool stop_on_entry = false; // launch
  std::size_t frame = 0;      // variables; 0 is the top frame
};

// Stop reasons on the wire: entry, match, step, fault, stopped (user pause).
struct StoppedEvent {
  std::string reason;
  std::string function;
  std::string unit;
  int line = 0;
  std::optional<CaptureSite> site; // match only
  std::string value;               // match only
  std::uint64_t match_count = 0;   // match only
  std::string message;             // fault only
};

struct OutputEvent {
  std::string text;
};

// Reasons: exited, stopped (stop command), fault (resumed after a fault).
struct TerminatedEvent {
  std::string reason;
};

using Event = std::variant<StoppedEvent, OutputEvent, TerminatedEvent>;

struct CaptureEvent {
  const CaptureSite* site = nullptr;
  std::string_view value;
  std::uint64_t sequence_no = 0;
};

enum class Verdict { Continue, PauseAtMatch };

struct StackPayload {
  std::vector<FrameView> frames;
};
struct VariablesPayload {
  std::vector<VariableView> variables;
};
struct SourcePayload {
  std::vector<SourceUnit> units;
};

struct Reply {
  bool ok = true;
  std::string error;   // bad_request | bad_state
  std::string message; // error kind, e.g. "NotPaused: ..."
  std::variant<std::monostate, StackPayload, VariablesPayload, SourcePayload> payload;

  static Reply success() { return Reply{}; }
  static Reply failure(std::string error, std::string message) {
    Reply r;
    r.ok = false;
    r.error = std::move(error);
    r.message = std::move(message);
    return r;
  }
};

struct ProgramBundle {
  std::shared_ptr<const ProgramImage> image; // instrumented for searching
  std::vector<SourceUnit> sources;
  std::vector<std::string> input;
};

// Sole owner of the debug-session state machine. Single-threaded: `handle`
// and `advance` must be called from one execution context. While `advance`
// runs, the poll callback may call `handle` re-entrantly; those commands see
// state Running.
class SearchController : private VmHooks {
public:
  using EventHandler = std::function<void(const Event&)>;
  using Poller = std::function<void(SearchController&)>;

  SearchController(ProgramBundle program, EventHandler on_event, VmOptions options = {});

  // Replies immediately; events caused by the command are held until
  // `flush` (or the next `advance`) so they follow the reply on the wire.
  Reply handle(const Command& cmd);
  void flush();

  // True while the VM has work to do; `advance` runs it to the next stop.
  bool runnable() const { return state_ == SessionState::Running; }
  void advance();

  // Invoked at every VM poll point during `advance`.
  void set_poller(Poller poller) { poller_ = std::move(poller); }

  Verdict on_capture(const CaptureEvent& event);

  SessionState state() const { return state_; }
  bool searching() const { return searching_; }
  const std::optional<Query>& active_query() const { return query_; }
  std::optional<std::uint32_t> last_match_site() const { return last_match_site_; }
  std::uint64_t match_count() const { return match_count_; }
  std::uint64_t capture_count() const { return sequence_no_; }
  const Vm& vm() const { return vm_; }

private:
  enum class Resume { entry, run, step_in, step_over, step_out };

  Control on_capture(const CaptureSite& site, const std::string& value) override;
  Control poll() override;
  void on_output(std::string_view text) override;

  Reply resume(Resume how);
  Reply set_query(const Query& query);
  StoppedEvent stop_event(std::string reason) const;
  void terminate(std::string reason);
  void emit(Event event);

  ProgramBundle program_;
  EventHandler on_event_;
  Vm vm_;
  Poller poller_;

  SessionState state_ = SessionState::NotStarted;
  Resume resume_ = Resume::run;
  std::optional<Query> query_;
  std::optional<Matcher> matcher_;
  bool searching_ = false;
  // Cleared by a match pause so stepping from a match does not re-match;
  // set again by find and findNext.
  bool armed_ = false;
  bool faulted_ = false;
  bool pause_requested_ = false;
  bool halt_requested_ = false;
  std::optional<std::uint32_t> last_match_site_;
  std::string last_match_value_;
  std::uint64_t match_count_ = 0;
  std::uint64_t sequence_no_ = 0;
  std::vector<Event> held_;
};

} // namespace rts
