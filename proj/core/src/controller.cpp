#include "rtsearch/controller.hpp"
#include "rtsearch/error.hpp"

namespace rts {

std::string_view to_string(SessionState state) {
  switch (state) {
  case SessionState::NotStarted: return "NotStarted";
  case SessionState::Running: return "Running";
  case SessionState::PausedAtMatch: return "PausedAtMatch";
  case SessionState::PausedAtStep: return "PausedAtStep";
  case SessionState::Terminated: return "Terminated";
  }
  return "?";
}

namespace {

Reply bad_state(Errc code, const std::string& detail) {
  return Reply::failure("bad_state", std::string(to_string(code)) + ": " + detail);
}

Reply bad_request(Errc code, const std::string& detail) {
  return Reply::failure("bad_request", std::string(to_string(code)) + ": " + detail);
}

bool paused(SessionState s) {
  return s == SessionState::PausedAtMatch || s == SessionState::PausedAtStep;
}

} // namespace

SearchController::SearchController(ProgramBundle program, EventHandler on_event, VmOptions options)
    : program_(std::move(program)), on_event_(std::move(on_event)), vm_(program_.image, options) {
  vm_.set_input(program_.input);
}

void SearchController::emit(Event event) {
  if (on_event_) {
    on_event_(event);
  }
}

void SearchController::flush() {
  auto held = std::move(held_);
  held_.clear();
  for (auto& e : held) {
    emit(std::move(e));
  }
}

void SearchController::terminate(std::string reason) {
  vm_.terminate();
  state_ = SessionState::Terminated;
  searching_ = false;
  held_.push_back(TerminatedEvent{std::move(reason)});
}

Reply SearchController::resume(Resume how) {
  if (faulted_) {
    terminate("fault");
    return Reply::success();
  }
  state_ = SessionState::Running;
  resume_ = how;
  return Reply::success();
}

Reply SearchController::set_query(const Query& query) {
  try {
    matcher_.emplace(query);
  } catch (const Error& e) {
    return bad_request(e.code(), query.text);
  }
  query_ = query;
  searching_ = true;
  armed_ = true;
  return Reply::success();
}

Reply SearchController::handle(const Command& cmd) {
  const bool over = state_ == SessionState::Terminated;
  switch (cmd.kind) {
  case CommandKind::launch:
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (state_ != SessionState::NotStarted) {
      return bad_state(Errc::already_started, "the program is already launched");
    }
    state_ = SessionState::Running;
    resume_ = cmd.stop_on_entry ? Resume::entry : Resume::run;
    return Reply::success();

  case CommandKind::find: {
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    Reply r = set_query(cmd.query);
    if (!r.ok) {
      return r;
    }
    if (state_ == SessionState::NotStarted) {
      state_ = SessionState::Running;
      resume_ = Resume::run;
    } else if (paused(state_)) {
      return resume(Resume::run);
    }
    return r;
  }

  case CommandKind::find_next:
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (!query_) {
      return bad_state(Errc::no_active_query, "use find first");
    }
    if (!paused(state_)) {
      return bad_state(Errc::not_paused, "the program is not paused");
    }
    searching_ = true;
    armed_ = true;
    return resume(Resume::run);

  case CommandKind::continue_run:
  case CommandKind::step_in:
  case CommandKind::step_over:
  case CommandKind::step_out:
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (!paused(state_)) {
      return bad_state(Errc::not_paused, "the program is not paused");
    }
    if (cmd.kind == CommandKind::continue_run) {
      searching_ = false;
      return resume(Resume::run);
    }
    return resume(cmd.kind == CommandKind::step_in    ? Resume::step_in
                  : cmd.kind == CommandKind::step_over ? Resume::step_over
                                                       : Resume::step_out);

  case CommandKind::pause:
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (state_ != SessionState::Running) {
      return bad_state(Errc::not_running, "the program is not running");
    }
    pause_requested_ = true;
    return Reply::success();

  case CommandKind::stack_trace:
  case CommandKind::variables: {
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (!paused(state_)) {
      return bad_state(Errc::not_paused, "the program is not paused");
    }
    auto frames = vm_.snapshot_stack();
    Reply r;
    if (cmd.kind == CommandKind::stack_trace) {
      r.payload = StackPayload{std::move(frames)};
    } else {
      if (cmd.frame >= frames.size()) {
        return Reply::failure("bad_request", "no frame " + std::to_string(cmd.frame));
      }
      r.payload = VariablesPayload{std::move(frames[cmd.frame].locals)};
    }
    return r;
  }

  case CommandKind::source: {
    Reply r;
    r.payload = SourcePayload{program_.sources};
    return r;
  }

  case CommandKind::stop:
    if (over) {
      return bad_state(Errc::session_over, "the program has terminated");
    }
    if (state_ == SessionState::Running) {
      halt_requested_ = true;
    } else {
      terminate("stopped");
    }
    return Reply::success();
  }
  return Reply::failure("bad_request", "unknown command");
}

StoppedEvent SearchController::stop_event(std::string reason) const {
  StoppedEvent ev;
  ev.reason = std::move(reason);
  if (vm_.status() == VmStatus::Paused) {
    auto frames = vm_.snapshot_stack();
    ev.function = frames.front().function;
    ev.unit = frames.front().unit;
    ev.line = frames.front().line;
  }
  return ev;
}

void SearchController::advance() {
  flush();
  if (state_ != SessionState::Running) {
    return;
  }
  if (resume_ == Resume::entry) {
    vm_.pause_at_entry();
    state_ = SessionState::PausedAtStep;
    emit(stop_event("entry"));
    return;
  }
  if (halt_requested_) {
    halt_requested_ = false;
    pause_requested_ = false;
    vm_.terminate();
    state_ = SessionState::Terminated;
    searching_ = false;
    emit(TerminatedEvent{"stopped"});
    return;
  }
  if (pause_requested_) {
    pause_requested_ = false;
    vm_.pause_at_entry();
    state_ = SessionState::PausedAtStep;
    emit(stop_event("stopped"));
    return;
  }

  StopResult r;
  switch (resume_) {
  case Resume::step_in: r = vm_.step(StepKind::in, *this); break;
  case Resume::step_over: r = vm_.step(StepKind::over, *this); break;
  case Resume::step_out: r = vm_.step(StepKind::out, *this); break;
  default: r = vm_.run(*this); break;
  }
  // Commands handled from the poller may have held events (none today, but
  // keep the reply-before-event ordering intact if they do).
  flush();

  switch (r.kind) {
  case StopKind::done:
    state_ = SessionState::Terminated;
    searching_ = false;
    emit(TerminatedEvent{"exited"});
    break;
  case StopKind::halted:
    state_ = SessionState::Terminated;
    searching_ = false;
    emit(TerminatedEvent{"stopped"});
    break;
  case StopKind::match: {
    state_ = SessionState::PausedAtMatch;
    StoppedEvent ev = stop_event("match");
    ev.site = program_.image->capture_sites[*r.site];
    ev.value = last_match_value_;
    ev.match_count = match_count_;
    emit(std::move(ev));
    break;
  }
  case StopKind::step:
    state_ = SessionState::PausedAtStep;
    emit(stop_event("step"));
    break;
  case StopKind::pause:
    state_ = SessionState::PausedAtStep;
    emit(stop_event("stopped"));
    break;
  case StopKind::fault: {
    state_ = SessionState::PausedAtStep;
    faulted_ = true;
    StoppedEvent ev = stop_event("fault");
    ev.message = vm_.fault()->message;
    emit(std::move(ev));
    break;
  }
  }
}

Verdict SearchController::on_capture(const CaptureEvent& event) {
  if (!searching_ || !armed_) {
    return Verdict::Continue;
  }
  if (query_->skip_repeated_site && last_match_site_ == event.site->id) {
    return Verdict::Continue;
  }
  if (!matcher_->matches(event.value)) {
    return Verdict::Continue;
  }
  last_match_site_ = event.site->id;
  last_match_value_ = std::string(event.value);
  ++match_count_;
  armed_ = false;
  return Verdict::PauseAtMatch;
}

Control SearchController::on_capture(const CaptureSite& site, const std::string& value) {
  CaptureEvent event{&site, value, ++sequence_no_};
  return on_capture(event) == Verdict::PauseAtMatch ? Control::pause : Control::proceed;
}

Control SearchController::poll() {
  if (poller_) {
    poller_(*this);
  }
  if (halt_requested_) {
    halt_requested_ = false;
    pause_requested_ = false;
    return Control::halt;
  }
  if (pause_requested_) {
    pause_requested_ = false;
    return Control::pause;
  }
  return Control::proceed;
}

void SearchController::on_output(std::string_view text) { emit(OutputEvent{std::string(text)}); }

} // namespace rts
