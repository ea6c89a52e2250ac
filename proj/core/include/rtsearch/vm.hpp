#pragma once

#include "rtsearch/bytecode.hpp"
#include "rtsearch/value.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rts {

enum class VmStatus { Ready, Running, Paused, Done };
enum class StepKind { in, over, out };

enum class Control { proceed, pause, halt };

// Callbacks the VM makes while running. All calls happen on the thread that
// called Vm::run.
class VmHooks {
public:
  virtual ~VmHooks() = default;
  // Called for Capture opcodes whose value is a string. The stack is untouched.
  virtual Control on_capture(const CaptureSite& /*site*/, const std::string& /*value*/) {
    return Control::proceed;
  }
  // Called at every Capture opcode (before on_capture) and every poll_interval
  // instructions.
  virtual Control poll() { return Control::proceed; }
  virtual void on_output(std::string_view /*text*/) {}
};

struct VmOptions {
  std::uint32_t poll_interval = 1000;
  std::size_t max_frames = 10000;
};

enum class StopKind { done, match, step, pause, fault, halted };

struct StopResult {
  StopKind kind = StopKind::done;
  std::optional<std::uint32_t> site; // set for match
};

struct RuntimeFault {
  std::string message;
  std::string function;
  int line = 0;
};

struct VariableView {
  std::string name;
  std::string type;
  std::string value;
};

struct FrameView {
  std::string function;
  std::string unit;
  int line = 0;
  std::size_t ip = 0;
  std::vector<VariableView> locals;
};

class Vm {
public:
  Vm(std::shared_ptr<const ProgramImage> image, VmOptions options = {});

  // Lines returned by successive readline() calls; exhausted input yields "".
  void set_input(std::vector<std::string> lines);

  // Runs until the program finishes or a hook/step/fault stops it.
  // Requires status Ready or Paused; a Done VM returns StopKind::done at once.
  StopResult run(VmHooks& hooks);

  // Arms a step request and runs. Requires status Paused (Errc::not_paused).
  StopResult step_in(VmHooks& hooks);
  StopResult step_over(VmHooks& hooks);
  StopResult step_out(VmHooks& hooks);
  StopResult step(StepKind kind, VmHooks& hooks);

  // Marks a Ready VM as paused before its first instruction.
  void pause_at_entry();
  // Drops all frames; status becomes Done.
  void terminate();

  VmStatus status() const { return status_; }
  std::size_t depth() const { return frames_.size(); }
  const std::optional<RuntimeFault>& fault() const { return fault_; }
  const ProgramImage& image() const { return *image_; }

  // Top-to-bottom frames with rendered locals. Requires status Paused.
  std::vector<FrameView> snapshot_stack() const;
  // Operand stack of frame `index` (0 = top), rendered. Requires Paused.
  std::vector<std::string> operand_stack(std::size_t index) const;

  // Rendering used by print/str/concat: strings raw, records `{f: v, ...}`.
  std::string display(const Value& v) const;
  // Rendering used by inspection: strings quoted, records one level deep.
  std::string inspect(const Value& v, int depth = 0) const;

private:
  struct Frame {
    std::uint32_t function = 0;
    std::size_t ip = 0;
    std::size_t stack_base = 0;
    std::vector<Value> locals;
    std::vector<bool> assigned;
  };

  struct StepRequest {
    StepKind kind;
    std::size_t depth;
    int line;
  };

  void push_frame(std::uint32_t function);
  int frame_line(std::size_t index_from_top) const;
  bool step_reached(std::size_t depth, int line) const;
  StopResult execute(VmHooks& hooks);
  void require_paused() const;

  std::shared_ptr<const ProgramImage> image_;
  VmOptions options_;
  VmStatus status_ = VmStatus::Ready;
  std::vector<Frame> frames_;
  std::vector<Value> stack_;
  std::vector<Record> heap_;
  std::vector<std::string> input_;
  std::size_t input_pos_ = 0;
  std::uint32_t budget_ = 0;
  bool capture_done_ = false;
  std::optional<StepRequest> step_;
  std::optional<RuntimeFault> fault_;
};

} // namespace rts
