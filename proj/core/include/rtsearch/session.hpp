#pragma once

#include "rtsearch/controller.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>

namespace rts {

// Runs a SearchController on a dedicated thread. Commands go through an
// ordered mailbox drained at VM poll points; replies and events are delivered
// to the listener from the session thread in emission order.
class DebugSession {
public:
  struct Listener {
    std::function<void(std::int64_t id, const Command& cmd, const Reply& reply)> on_reply;
    std::function<void(const Event& event)> on_event;
  };

  DebugSession(ProgramBundle program, Listener listener, VmOptions options = {});
  ~DebugSession();

  DebugSession(const DebugSession&) = delete;
  DebugSession& operator=(const DebugSession&) = delete;

  void submit(std::int64_t id, Command cmd);

  // Stops the target (if still alive) and joins the session thread.
  void shutdown();

private:
  struct Envelope {
    std::int64_t id;
    Command cmd;
  };

  void loop();
  void drain(SearchController& controller);
  void dispatch(SearchController& controller, const Envelope& env);

  ProgramBundle program_;
  Listener listener_;
  VmOptions options_;

  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<Envelope> mailbox_;
  std::atomic<bool> pending_{false};
  bool quit_ = false;
  std::thread thread_;
};

} // namespace rts
