#include "rtsearch/vm.hpp"
#include "rtsearch/error.hpp"

#include <algorithm>
#include <limits>

namespace rts {

std::string_view type_name(const Value& v) {
  switch (v.index()) {
  case 0: return "null";
  case 1: return "bool";
  case 2: return "int";
  case 3: return "string";
  default: return "record";
  }
}

namespace {

struct FaultSignal {
  std::string message;
};

[[noreturn]] void raise_fault(std::string message) { throw FaultSignal{std::move(message)}; }

Value to_value(const Constant& c) {
  return std::visit([](const auto& x) -> Value { return x; }, c);
}

std::int64_t expect_int(const Value& v, const char* what) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) {
    return *i;
  }
  raise_fault(std::string(what) + " expects int, got " + std::string(type_name(v)));
}

const std::string& expect_string(const Value& v, const char* what) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    return *s;
  }
  raise_fault(std::string(what) + " expects string, got " + std::string(type_name(v)));
}

std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

} // namespace

Vm::Vm(std::shared_ptr<const ProgramImage> image, VmOptions options)
    : image_(std::move(image)), options_(options) {
  options_.poll_interval = std::max<std::uint32_t>(1, options_.poll_interval);
  budget_ = options_.poll_interval;
  push_frame(image_->entry_index());
}

void Vm::set_input(std::vector<std::string> lines) {
  input_ = std::move(lines);
  input_pos_ = 0;
}

void Vm::push_frame(std::uint32_t function) {
  const auto& fn = image_->functions[function];
  Frame f;
  f.function = function;
  f.locals.resize(fn.local_names.size());
  f.assigned.resize(fn.local_names.size(), false);
  f.stack_base = stack_.size() - fn.arity;
  for (std::uint32_t i = 0; i < fn.arity; ++i) {
    f.locals[i] = std::move(stack_[f.stack_base + i]);
    f.assigned[i] = true;
  }
  stack_.resize(f.stack_base);
  frames_.push_back(std::move(f));
}

void Vm::pause_at_entry() {
  if (status_ == VmStatus::Ready) {
    status_ = VmStatus::Paused;
  }
}

void Vm::terminate() {
  frames_.clear();
  stack_.clear();
  step_.reset();
  capture_done_ = false;
  status_ = VmStatus::Done;
}

void Vm::require_paused() const {
  if (status_ != VmStatus::Paused) {
    throw Error(Errc::not_paused, "the program is not paused");
  }
}

StopResult Vm::run(VmHooks& hooks) {
  if (status_ == VmStatus::Done) {
    return StopResult{StopKind::done, std::nullopt};
  }
  step_.reset();
  return execute(hooks);
}

StopResult Vm::step(StepKind kind, VmHooks& hooks) {
  require_paused();
  step_ = StepRequest{kind, frames_.size(), frame_line(0)};
  return execute(hooks);
}

StopResult Vm::step_in(VmHooks& hooks) { return step(StepKind::in, hooks); }
StopResult Vm::step_over(VmHooks& hooks) { return step(StepKind::over, hooks); }
StopResult Vm::step_out(VmHooks& hooks) { return step(StepKind::out, hooks); }

int Vm::frame_line(std::size_t index_from_top) const {
  const Frame& f = frames_[frames_.size() - 1 - index_from_top];
  const auto& lines = image_->functions[f.function].lines;
  if (index_from_top == 0 || f.ip == 0) {
    return lines[f.ip];
  }
  return lines[f.ip - 1];
}

bool Vm::step_reached(std::size_t depth, int line) const {
  switch (step_->kind) {
  case StepKind::in: return depth != step_->depth || line != step_->line;
  case StepKind::over: return depth < step_->depth || (depth == step_->depth && line != step_->line);
  case StepKind::out: return depth < step_->depth;
  }
  return false;
}

StopResult Vm::execute(VmHooks& hooks) {
  status_ = VmStatus::Running;

  Frame* frame = &frames_.back();
  const FunctionBytecode* fn = &image_->functions[frame->function];
  const Instruction* code = fn->code.data();
  std::size_t ip = frame->ip;

  const auto reload = [&] {
    frame = &frames_.back();
    fn = &image_->functions[frame->function];
    code = fn->code.data();
    ip = frame->ip;
  };
  const auto stop = [&](StopKind kind, std::optional<std::uint32_t> site = std::nullopt) {
    frame->ip = ip;
    step_.reset();
    status_ = VmStatus::Paused;
    return StopResult{kind, site};
  };
  const auto control_stop = [&](Control c) {
    if (c == Control::halt) {
      terminate();
      return StopResult{StopKind::halted, std::nullopt};
    }
    return stop(StopKind::pause);
  };
  const auto pop = [&]() {
    Value v = std::move(stack_.back());
    stack_.pop_back();
    return v;
  };

  try {
    for (;;) {
      if (step_ && step_reached(frames_.size(), fn->lines[ip])) {
        return stop(StopKind::step);
      }
      if (--budget_ == 0) {
        budget_ = options_.poll_interval;
        if (Control c = hooks.poll(); c != Control::proceed) {
          return control_stop(c);
        }
      }
      const Instruction& ins = code[ip];
      switch (ins.op) {
      case Opcode::PushConst:
        stack_.push_back(to_value(image_->constants[static_cast<std::size_t>(ins.arg)]));
        ++ip;
        break;
      case Opcode::LoadLocal: {
        auto slot = static_cast<std::size_t>(ins.arg);
        stack_.push_back(frame->locals[slot]);
        ++ip;
        break;
      }
      case Opcode::StoreLocal: {
        auto slot = static_cast<std::size_t>(ins.arg);
        frame->locals[slot] = pop();
        frame->assigned[slot] = true;
        ++ip;
        break;
      }
      case Opcode::LoadField:
      case Opcode::StoreField: {
        Value value;
        if (ins.op == Opcode::StoreField) {
          value = pop();
        }
        Value object = pop();
        const auto* ref = std::get_if<RecordRef>(&object);
        const std::string& field = image_->names[static_cast<std::size_t>(ins.arg)];
        if (ref == nullptr) {
          raise_fault("field access ." + field + " on " + std::string(type_name(object)));
        }
        Record& rec = heap_[ref->id];
        const auto& shape = image_->shapes[rec.shape];
        auto at = std::find(shape.begin(), shape.end(), static_cast<std::uint32_t>(ins.arg));
        if (at == shape.end()) {
          raise_fault("record has no field '" + field + "'");
        }
        auto slot = static_cast<std::size_t>(at - shape.begin());
        if (ins.op == Opcode::LoadField) {
          stack_.push_back(rec.fields[slot]);
        } else {
          rec.fields[slot] = std::move(value);
        }
        ++ip;
        break;
      }
      case Opcode::NewRecord: {
        Record rec;
        rec.shape = static_cast<std::uint32_t>(ins.arg);
        auto n = image_->shapes[rec.shape].size();
        rec.fields.assign(std::make_move_iterator(stack_.end() - static_cast<std::ptrdiff_t>(n)),
                          std::make_move_iterator(stack_.end()));
        stack_.resize(stack_.size() - n);
        heap_.push_back(std::move(rec));
        stack_.push_back(RecordRef{static_cast<std::uint32_t>(heap_.size() - 1)});
        ++ip;
        break;
      }
      case Opcode::Call: {
        if (frames_.size() >= options_.max_frames) {
          raise_fault("stack overflow");
        }
        frame->ip = ip + 1;
        push_frame(static_cast<std::uint32_t>(ins.arg));
        reload();
        break;
      }
      case Opcode::CallBuiltin: {
        switch (static_cast<Builtin>(ins.arg)) {
        case Builtin::upper:
        case Builtin::lower: {
          bool up = static_cast<Builtin>(ins.arg) == Builtin::upper;
          auto* s = std::get_if<std::string>(&stack_.back());
          if (s == nullptr) {
            raise_fault(std::string(up ? "upper" : "lower") + " expects string, got " +
                  std::string(type_name(stack_.back())));
          }
          for (auto& c : *s) {
            if (up && c >= 'a' && c <= 'z') {
              c = static_cast<char>(c - 'a' + 'A');
            } else if (!up && c >= 'A' && c <= 'Z') {
              c = static_cast<char>(c - 'A' + 'a');
            }
          }
          break;
        }
        case Builtin::len: {
          const std::string& s = expect_string(stack_.back(), "len");
          std::int64_t n = 0;
          for (unsigned char c : s) {
            n += (c & 0xC0) != 0x80 ? 1 : 0;
          }
          stack_.back() = n;
          break;
        }
        case Builtin::str:
          if (!std::holds_alternative<std::string>(stack_.back())) {
            stack_.back() = display(stack_.back());
          }
          break;
        case Builtin::print: {
          Value v = pop();
          std::string text = display(v);
          text += '\n';
          frame->ip = ip;
          hooks.on_output(text);
          break;
        }
        case Builtin::readline:
          stack_.push_back(input_pos_ < input_.size() ? input_[input_pos_++] : std::string());
          break;
        }
        ++ip;
        break;
      }
      case Opcode::BinOp: {
        Value rhs = pop();
        Value& lhs = stack_.back();
        auto op = static_cast<BinaryOp>(ins.arg);
        switch (op) {
        case BinaryOp::add:
        case BinaryOp::concat: {
          auto* ls = std::get_if<std::string>(&lhs);
          auto* rs = std::get_if<std::string>(&rhs);
          auto* li = std::get_if<std::int64_t>(&lhs);
          auto* ri = std::get_if<std::int64_t>(&rhs);
          if (li && ri) {
            lhs = wrap(static_cast<std::uint64_t>(*li) + static_cast<std::uint64_t>(*ri));
          } else if (ls && (rs || ri)) {
            if (rs) {
              *ls += *rs;
            } else {
              *ls += std::to_string(*ri);
            }
          } else if (rs && li) {
            lhs = std::to_string(*li) + *rs;
          } else {
            raise_fault("cannot add " + std::string(type_name(lhs)) + " and " +
                  std::string(type_name(rhs)));
          }
          break;
        }
        case BinaryOp::sub:
          lhs = wrap(static_cast<std::uint64_t>(expect_int(lhs, "-")) -
                     static_cast<std::uint64_t>(expect_int(rhs, "-")));
          break;
        case BinaryOp::mul:
          lhs = wrap(static_cast<std::uint64_t>(expect_int(lhs, "*")) *
                     static_cast<std::uint64_t>(expect_int(rhs, "*")));
          break;
        case BinaryOp::div: {
          std::int64_t a = expect_int(lhs, "/");
          std::int64_t b = expect_int(rhs, "/");
          if (b == 0) {
            raise_fault("division by zero");
          }
          if (a == std::numeric_limits<std::int64_t>::min() && b == -1) {
            raise_fault("integer overflow in division");
          }
          lhs = a / b;
          break;
        }
        case BinaryOp::eq: lhs = lhs == rhs; break;
        case BinaryOp::ne: lhs = lhs != rhs; break;
        case BinaryOp::lt: {
          auto* li = std::get_if<std::int64_t>(&lhs);
          auto* ri = std::get_if<std::int64_t>(&rhs);
          auto* ls = std::get_if<std::string>(&lhs);
          auto* rs = std::get_if<std::string>(&rhs);
          if (li && ri) {
            lhs = *li < *ri;
          } else if (ls && rs) {
            lhs = *ls < *rs;
          } else {
            raise_fault("cannot compare " + std::string(type_name(lhs)) + " and " +
                  std::string(type_name(rhs)));
          }
          break;
        }
        }
        ++ip;
        break;
      }
      case Opcode::Jump: ip = static_cast<std::size_t>(ins.arg); break;
      case Opcode::JumpIfFalse: {
        const auto* b = std::get_if<bool>(&stack_.back());
        if (b == nullptr) {
          raise_fault("condition must be bool, got " + std::string(type_name(stack_.back())));
        }
        bool taken = !*b;
        stack_.pop_back();
        ip = taken ? static_cast<std::size_t>(ins.arg) : ip + 1;
        break;
      }
      case Opcode::Return: {
        Value result = ins.arg != 0 ? pop() : Value{};
        stack_.resize(frame->stack_base);
        frames_.pop_back();
        if (frames_.empty()) {
          terminate();
          return StopResult{StopKind::done, std::nullopt};
        }
        stack_.push_back(std::move(result));
        reload();
        break;
      }
      case Opcode::Pop:
        stack_.pop_back();
        ++ip;
        break;
      case Opcode::Capture: {
        if (capture_done_) {
          capture_done_ = false;
          ++ip;
          break;
        }
        if (Control c = hooks.poll(); c != Control::proceed) {
          return control_stop(c);
        }
        if (const auto* s = std::get_if<std::string>(&stack_.back())) {
          const CaptureSite& site = image_->capture_sites[static_cast<std::size_t>(ins.arg)];
          Control c = hooks.on_capture(site, *s);
          if (c == Control::pause) {
            capture_done_ = true;
            return stop(StopKind::match, site.id);
          }
          if (c == Control::halt) {
            return control_stop(c);
          }
        }
        ++ip;
        break;
      }
      }
    }
  } catch (const FaultSignal& f) {
    frame->ip = ip;
    fault_ = RuntimeFault{f.message, fn->name, fn->lines[ip]};
    step_.reset();
    status_ = VmStatus::Paused;
    return StopResult{StopKind::fault, std::nullopt};
  }
}

std::string Vm::display(const Value& v) const {
  if (const auto* s = std::get_if<std::string>(&v)) {
    return *s;
  }
  return inspect(v);
}

std::string Vm::inspect(const Value& v, int depth) const {
  struct Visitor {
    const Vm& vm;
    int depth;
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const std::string& s) const { return render_constant(s); }
    std::string operator()(RecordRef r) const {
      if (depth > 0) {
        return "{...}";
      }
      const Record& rec = vm.heap_[r.id];
      const auto& shape = vm.image_->shapes[rec.shape];
      std::string out = "{";
      for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
          out += ", ";
        }
        out += vm.image_->names[shape[i]] + ": " + vm.inspect(rec.fields[i], depth + 1);
      }
      return out + "}";
    }
  };
  return std::visit(Visitor{*this, depth}, v);
}

std::vector<FrameView> Vm::snapshot_stack() const {
  require_paused();
  std::vector<FrameView> out;
  for (std::size_t k = 0; k < frames_.size(); ++k) {
    const Frame& f = frames_[frames_.size() - 1 - k];
    const auto& fn = image_->functions[f.function];
    FrameView view;
    view.function = fn.name;
    view.unit = fn.unit;
    view.line = frame_line(k);
    view.ip = f.ip;
    for (std::size_t i = 0; i < f.locals.size(); ++i) {
      if (f.assigned[i]) {
        view.locals.push_back(VariableView{fn.local_names[i], std::string(type_name(f.locals[i])),
                                           inspect(f.locals[i])});
      }
    }
    out.push_back(std::move(view));
  }
  return out;
}

std::vector<std::string> Vm::operand_stack(std::size_t index) const {
  require_paused();
  if (index >= frames_.size()) {
    return {};
  }
  std::size_t pos = frames_.size() - 1 - index;
  std::size_t begin = frames_[pos].stack_base;
  std::size_t end = pos + 1 < frames_.size() ? frames_[pos + 1].stack_base : stack_.size();
  std::vector<std::string> out;
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(inspect(stack_[i]));
  }
  return out;
}

} // namespace rts
