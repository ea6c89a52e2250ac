#include "rtsearch/session.hpp"

namespace rts {

DebugSession::DebugSession(ProgramBundle program, Listener listener, VmOptions options)
    : program_(std::move(program)), listener_(std::move(listener)), options_(options) {
  thread_ = std::thread([this] { loop(); });
}

DebugSession::~DebugSession() { shutdown(); }

void DebugSession::submit(std::int64_t id, Command cmd) {
  {
    std::lock_guard lock(mutex_);
    mailbox_.push_back(Envelope{id, std::move(cmd)});
    pending_.store(true, std::memory_order_release);
  }
  wake_.notify_one();
}

void DebugSession::shutdown() {
  {
    std::lock_guard lock(mutex_);
    quit_ = true;
    pending_.store(true, std::memory_order_release);
  }
  wake_.notify_one();
  if (thread_.joinable()) {
    thread_.join();
  }
}

void DebugSession::dispatch(SearchController& controller, const Envelope& env) {
  Reply reply = controller.handle(env.cmd);
  if (listener_.on_reply) {
    listener_.on_reply(env.id, env.cmd, reply);
  }
  controller.flush();
}

void DebugSession::drain(SearchController& controller) {
  if (!pending_.load(std::memory_order_acquire)) {
    return;
  }
  std::deque<Envelope> batch;
  bool quitting = false;
  {
    std::lock_guard lock(mutex_);
    batch.swap(mailbox_);
    quitting = quit_;
    pending_.store(quitting, std::memory_order_release);
  }
  for (const auto& env : batch) {
    dispatch(controller, env);
  }
  if (quitting && controller.state() == SessionState::Running) {
    controller.handle(Command{CommandKind::stop});
  }
}

void DebugSession::loop() {
  SearchController controller(program_, listener_.on_event, options_);
  controller.set_poller([this](SearchController& c) { drain(c); });
  for (;;) {
    if (controller.runnable()) {
      controller.advance();
      continue;
    }
    Envelope env;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return quit_ || !mailbox_.empty(); });
      if (mailbox_.empty()) {
        return; // quit with nothing left to answer
      }
      env = std::move(mailbox_.front());
      mailbox_.pop_front();
      pending_.store(!mailbox_.empty() || quit_, std::memory_order_release);
    }
    dispatch(controller, env);
  }
}

} // namespace rts
