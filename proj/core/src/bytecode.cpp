#include "rtsearch/bytecode.hpp"
#include "rtsearch/error.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <sstream>

namespace rts {

namespace {

constexpr std::array<std::string_view, 14> kOpcodeNames = {
    "PushConst", "LoadLocal", "StoreLocal",  "LoadField", "StoreField", "NewRecord", "Call",
    "CallBuiltin", "BinOp",   "Jump",        "JumpIfFalse", "Return",  "Pop",       "Capture",
};
constexpr std::array<std::string_view, 6> kBuiltinNames = {"upper", "lower", "len",
                                                           "str",   "print", "readline"};
constexpr std::array<std::string_view, 8> kBinaryNames = {"add", "concat", "sub", "mul",
                                                          "div", "eq",     "ne",  "lt"};
constexpr std::array<std::string_view, 4> kKindNames = {"Const", "LocalRead", "FieldRead",
                                                        "CallResult"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) {
      return static_cast<E>(i);
    }
  }
  return std::nullopt;
}

[[noreturn]] void bad(const std::string& msg) { throw Error(Errc::bad_image, msg); }

} // namespace

std::string_view to_string(Opcode op) { return kOpcodeNames.at(static_cast<std::size_t>(op)); }
std::string_view to_string(Builtin fn) { return kBuiltinNames.at(static_cast<std::size_t>(fn)); }
std::string_view to_string(BinaryOp op) { return kBinaryNames.at(static_cast<std::size_t>(op)); }
std::string_view to_string(CaptureKind kind) {
  return kKindNames.at(static_cast<std::size_t>(kind));
}

std::optional<Opcode> opcode_from_string(std::string_view text) {
  return lookup<Opcode>(kOpcodeNames, text);
}
std::optional<Builtin> builtin_from_string(std::string_view text) {
  return lookup<Builtin>(kBuiltinNames, text);
}
std::optional<BinaryOp> binary_op_from_string(std::string_view text) {
  return lookup<BinaryOp>(kBinaryNames, text);
}
std::optional<CaptureKind> capture_kind_from_string(std::string_view text) {
  return lookup<CaptureKind>(kKindNames, text);
}

unsigned builtin_arity(Builtin fn) { return fn == Builtin::readline ? 0 : 1; }
bool builtin_returns_value(Builtin fn) { return fn != Builtin::print; }

std::string render_constant(const Constant& value) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const std::string& s) const {
      std::string out = "\"";
      for (unsigned char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (c < 0x20 || c == 0x7f) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02x", c);
            out += buf;
          } else {
            out += static_cast<char>(c);
          }
        }
      }
      return out + "\"";
    }
  };
  return std::visit(Visitor{}, value);
}

std::optional<std::uint32_t> ProgramImage::find_function(std::string_view name) const {
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].name == name) {
      return static_cast<std::uint32_t>(i);
    }
  }
  return std::nullopt;
}

std::uint32_t ProgramImage::entry_index() const {
  auto idx = find_function(entry);
  if (!idx) {
    throw Error(Errc::missing_main, "entry function '" + entry + "' not found");
  }
  return *idx;
}

const CaptureSite& site_lookup(const ProgramImage& image, std::uint32_t id) {
  if (id >= image.capture_sites.size()) {
    throw Error(Errc::unknown_site, "site " + std::to_string(id) + " of " +
                                        std::to_string(image.capture_sites.size()));
  }
  return image.capture_sites[id];
}

int stack_demand(const ProgramImage& image, const Instruction& instr) {
  switch (instr.op) {
  case Opcode::PushConst:
  case Opcode::LoadLocal:
  case Opcode::Jump: return 0;
  case Opcode::StoreLocal:
  case Opcode::LoadField:
  case Opcode::JumpIfFalse:
  case Opcode::Pop:
  case Opcode::Capture: return 1;
  case Opcode::StoreField:
  case Opcode::BinOp: return 2;
  case Opcode::NewRecord:
    return static_cast<int>(image.shapes.at(static_cast<std::size_t>(instr.arg)).size());
  case Opcode::Call:
    return static_cast<int>(image.functions.at(static_cast<std::size_t>(instr.arg)).arity);
  case Opcode::CallBuiltin: return static_cast<int>(builtin_arity(static_cast<Builtin>(instr.arg)));
  case Opcode::Return: return instr.arg;
  }
  return 0;
}

int stack_effect(const ProgramImage& image, const Instruction& instr) {
  switch (instr.op) {
  case Opcode::PushConst:
  case Opcode::LoadLocal: return 1;
  case Opcode::StoreLocal:
  case Opcode::JumpIfFalse:
  case Opcode::Pop:
  case Opcode::BinOp: return -1;
  case Opcode::LoadField:
  case Opcode::Jump:
  case Opcode::Capture: return 0;
  case Opcode::StoreField: return -2;
  case Opcode::NewRecord: return 1 - stack_demand(image, instr);
  case Opcode::Call: return 1 - stack_demand(image, instr);
  case Opcode::CallBuiltin: {
    auto fn = static_cast<Builtin>(instr.arg);
    return (builtin_returns_value(fn) ? 1 : 0) - static_cast<int>(builtin_arity(fn));
  }
  case Opcode::Return: return -instr.arg;
  }
  return 0;
}

namespace {

void check_operands(const ProgramImage& image, const FunctionBytecode& fn) {
  const auto where = [&](std::size_t i) { return fn.qualified_name() + "@" + std::to_string(i); };
  if (fn.lines.size() != fn.code.size()) {
    bad(fn.qualified_name() + ": line table does not cover the code");
  }
  if (fn.code.empty()) {
    bad(fn.qualified_name() + ": empty code");
  }
  if (fn.arity > fn.local_names.size()) {
    bad(fn.qualified_name() + ": fewer locals than parameters");
  }
  for (std::size_t i = 0; i < fn.code.size(); ++i) {
    const Instruction& ins = fn.code[i];
    const auto arg = ins.arg;
    const auto in_range = [&](std::size_t n) { return arg >= 0 && static_cast<std::size_t>(arg) < n; };
    bool ok = true;
    switch (ins.op) {
    case Opcode::PushConst: ok = in_range(image.constants.size()); break;
    case Opcode::LoadLocal:
    case Opcode::StoreLocal: ok = in_range(fn.local_names.size()); break;
    case Opcode::LoadField:
    case Opcode::StoreField: ok = in_range(image.names.size()); break;
    case Opcode::NewRecord: ok = in_range(image.shapes.size()); break;
    case Opcode::Call: ok = in_range(image.functions.size()); break;
    case Opcode::CallBuiltin: ok = in_range(kBuiltinNames.size()); break;
    case Opcode::BinOp: ok = in_range(kBinaryNames.size()); break;
    case Opcode::Jump:
    case Opcode::JumpIfFalse: ok = in_range(fn.code.size()); break;
    case Opcode::Return: ok = arg == 0 || arg == 1; break;
    case Opcode::Pop: ok = arg == 0; break;
    case Opcode::Capture: ok = in_range(image.capture_sites.size()); break;
    }
    if (!ok) {
      bad(where(i) + ": operand " + std::to_string(arg) + " out of range for " +
          std::string(to_string(ins.op)));
    }
    if (fn.lines[i] < 1) {
      bad(where(i) + ": missing source line");
    }
  }
}

} // namespace

std::vector<int> stack_depths(const ProgramImage& image, const FunctionBytecode& fn) {
  check_operands(image, fn);
  std::vector<int> depth(fn.code.size(), -1);
  std::vector<std::size_t> work{0};
  depth[0] = 0;
  const auto flow = [&](std::size_t from, std::size_t to, int d) {
    if (to >= fn.code.size()) {
      bad(fn.qualified_name() + "@" + std::to_string(from) + ": falls off the end of the code");
    }
    if (depth[to] == -1) {
      depth[to] = d;
      work.push_back(to);
    } else if (depth[to] != d) {
      bad(fn.qualified_name() + "@" + std::to_string(to) + ": inconsistent stack depth " +
          std::to_string(depth[to]) + " vs " + std::to_string(d));
    }
  };
  while (!work.empty()) {
    std::size_t i = work.back();
    work.pop_back();
    const Instruction& ins = fn.code[i];
    int d = depth[i];
    if (d < stack_demand(image, ins)) {
      bad(fn.qualified_name() + "@" + std::to_string(i) + ": stack underflow in " +
          std::string(to_string(ins.op)));
    }
    int after = d + stack_effect(image, ins);
    switch (ins.op) {
    case Opcode::Return:
      if (d != ins.arg) {
        bad(fn.qualified_name() + "@" + std::to_string(i) + ": return with stack depth " +
            std::to_string(d));
      }
      break;
    case Opcode::Jump: flow(i, static_cast<std::size_t>(ins.arg), after); break;
    case Opcode::JumpIfFalse:
      flow(i, static_cast<std::size_t>(ins.arg), after);
      flow(i, i + 1, after);
      break;
    default: flow(i, i + 1, after); break;
    }
  }
  return depth;
}

void verify(const ProgramImage& image) {
  if (!image.find_function(image.entry)) {
    bad("entry function '" + image.entry + "' not found");
  }
  for (const auto& shape : image.shapes) {
    for (auto name : shape) {
      if (name >= image.names.size()) {
        bad("record shape references unknown field name");
      }
    }
  }
  std::vector<int> seen(image.capture_sites.size(), 0);
  for (std::size_t f = 0; f < image.functions.size(); ++f) {
    const auto& fn = image.functions[f];
    stack_depths(image, fn);
    for (std::size_t i = 0; i < fn.code.size(); ++i) {
      if (fn.code[i].op != Opcode::Capture) {
        continue;
      }
      auto id = static_cast<std::size_t>(fn.code[i].arg);
      const CaptureSite& site = image.capture_sites[id];
      if (site.id != id || site.function_index != f || site.instr_index + 1 != i ||
          site.function != fn.name || site.unit != fn.unit) {
        bad(fn.qualified_name() + "@" + std::to_string(i) + ": Capture " + std::to_string(id) +
            " disagrees with the site table");
      }
      ++seen[id];
    }
  }
  for (std::size_t id = 0; id < seen.size(); ++id) {
    if (seen[id] != 1) {
      bad("site " + std::to_string(id) + " has " + std::to_string(seen[id]) + " Capture opcodes");
    }
  }
  if (!image.instrumented && !image.capture_sites.empty()) {
    bad("capture sites present on an uninstrumented image");
  }
}

// ---------------------------------------------------------------------------
// Disassembly

namespace {

std::string render_shape(const ProgramImage& image, std::size_t shape) {
  std::string out = "{";
  const auto& fields = image.shapes.at(shape);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) {
      out += ",";
    }
    out += image.names.at(fields[i]);
  }
  return out + "}";
}

std::string render_operand(const ProgramImage& image, const Instruction& ins) {
  const auto arg = static_cast<std::size_t>(ins.arg);
  switch (ins.op) {
  case Opcode::PushConst: return render_constant(image.constants.at(arg));
  case Opcode::LoadField:
  case Opcode::StoreField: return image.names.at(arg);
  case Opcode::NewRecord: return render_shape(image, arg);
  case Opcode::Call: return image.functions.at(arg).name;
  case Opcode::CallBuiltin: {
    auto fn = static_cast<Builtin>(ins.arg);
    return std::string(to_string(fn)) + "/" + std::to_string(builtin_arity(fn));
  }
  case Opcode::BinOp: return std::string(to_string(static_cast<BinaryOp>(ins.arg)));
  case Opcode::Pop: return "-";
  default: return std::to_string(ins.arg);
  }
}

} // namespace

std::string disassemble(const ProgramImage& image, const FunctionBytecode& fn) {
  std::string out;
  for (std::size_t i = 0; i < fn.code.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += to_string(fn.code[i].op);
    out += '\t';
    out += render_operand(image, fn.code[i]);
    out += '\t';
    out += std::to_string(fn.lines[i]);
    out += '\n';
  }
  return out;
}

std::string disassemble(const ProgramImage& image) {
  std::ostringstream out;
  out << ".entry " << image.entry << "\n";
  if (image.instrumented) {
    out << ".instrumented " << image.scope << "\n";
  }
  for (std::size_t i = 0; i < image.constants.size(); ++i) {
    out << ".const " << i << " " << render_constant(image.constants[i]) << "\n";
  }
  for (std::size_t i = 0; i < image.names.size(); ++i) {
    out << ".name " << i << " " << image.names[i] << "\n";
  }
  for (std::size_t i = 0; i < image.shapes.size(); ++i) {
    out << ".shape " << i << " " << render_shape(image, i) << "\n";
  }
  for (const auto& fn : image.functions) {
    out << ".function " << fn.qualified_name() << " " << fn.arity;
    for (const auto& local : fn.local_names) {
      out << " " << local;
    }
    out << "\n" << disassemble(image, fn) << ".end\n";
  }
  for (const auto& s : image.capture_sites) {
    out << ".site " << s.id << " " << s.unit << "." << s.function << " " << s.instr_index << " "
        << s.line << " " << to_string(s.kind) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    auto at = text.find(sep, start);
    parts.push_back(text.substr(start, at == std::string_view::npos ? std::string_view::npos
                                                                    : at - start));
    if (at == std::string_view::npos) {
      return parts;
    }
    start = at + 1;
  }
}

template <typename T>
T parse_number(std::string_view text, int line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::bad_image, "bad number '" + std::string(text) + "'", line_no);
  }
  return value;
}

Constant parse_constant(std::string_view text, int line_no) {
  if (text == "null") {
    return std::monostate{};
  }
  if (text == "true" || text == "false") {
    return text == "true";
  }
  if (text.empty() || text.front() != '"') {
    return parse_number<std::int64_t>(text, line_no);
  }
  if (text.size() < 2 || text.back() != '"') {
    throw Error(Errc::bad_image, "unterminated string constant", line_no);
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    char c = text[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    char e = text.at(++i);
    switch (e) {
    case 'n': out += '\n'; break;
    case 't': out += '\t'; break;
    case 'r': out += '\r'; break;
    case '"': out += '"'; break;
    case '\\': out += '\\'; break;
    case 'x': {
      auto hex = text.substr(i + 1, 2);
      unsigned v = 0;
      auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
      if (ec != std::errc() || ptr != hex.data() + hex.size() || hex.size() != 2) {
        throw Error(Errc::bad_image, "bad \\x escape in constant", line_no);
      }
      out += static_cast<char>(v);
      i += 2;
      break;
    }
    default: throw Error(Errc::bad_image, "bad escape in constant", line_no);
    }
  }
  return out;
}

struct PendingInstruction {
  Opcode op;
  std::string operand;
  int line;
  int text_line;
};

struct PendingFunction {
  FunctionBytecode fn;
  std::vector<PendingInstruction> body;
};

} // namespace

ProgramImage assemble(std::string_view text) {
  ProgramImage image;
  std::vector<PendingFunction> pending;
  bool in_function = false;
  int line_no = 0;

  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (raw.empty()) {
      continue;
    }
    if (in_function && raw.front() != '.') {
      auto cols = split(raw, '\t');
      if (cols.size() != 4) {
        throw Error(Errc::bad_image, "expected 4 tab-separated columns", line_no);
      }
      auto op = opcode_from_string(cols[1]);
      if (!op) {
        throw Error(Errc::bad_image, "unknown opcode '" + std::string(cols[1]) + "'", line_no);
      }
      if (parse_number<std::size_t>(cols[0], line_no) != pending.back().body.size()) {
        throw Error(Errc::bad_image, "instruction index out of sequence", line_no);
      }
      pending.back().body.push_back(PendingInstruction{*op, std::string(cols[2]),
                                                       parse_number<int>(cols[3], line_no),
                                                       line_no});
      continue;
    }

    auto space = raw.find(' ');
    auto directive = raw.substr(0, space);
    auto rest = space == std::string_view::npos ? std::string_view{} : raw.substr(space + 1);
    if (directive == ".end") {
      in_function = false;
    } else if (directive == ".entry") {
      image.entry = std::string(rest);
    } else if (directive == ".instrumented") {
      image.instrumented = true;
      image.scope = std::string(rest);
    } else if (directive == ".const" || directive == ".name" || directive == ".shape") {
      auto sp = rest.find(' ');
      auto index = parse_number<std::size_t>(rest.substr(0, sp), line_no);
      auto payload = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
      if (directive == ".const") {
        if (index != image.constants.size()) {
          throw Error(Errc::bad_image, "constant index out of sequence", line_no);
        }
        image.constants.push_back(parse_constant(payload, line_no));
      } else if (directive == ".name") {
        if (index != image.names.size()) {
          throw Error(Errc::bad_image, "name index out of sequence", line_no);
        }
        image.names.emplace_back(payload);
      } else {
        if (index != image.shapes.size() || payload.size() < 2) {
          throw Error(Errc::bad_image, "bad shape", line_no);
        }
        std::vector<std::uint32_t> shape;
        auto inner = payload.substr(1, payload.size() - 2);
        if (!inner.empty()) {
          for (auto field : split(inner, ',')) {
            bool found = false;
            for (std::size_t n = 0; n < image.names.size() && !found; ++n) {
              if (image.names[n] == field) {
                shape.push_back(static_cast<std::uint32_t>(n));
                found = true;
              }
            }
            if (!found) {
              throw Error(Errc::bad_image, "shape references unknown name", line_no);
            }
          }
        }
        image.shapes.push_back(std::move(shape));
      }
    } else if (directive == ".function") {
      auto parts = split(rest, ' ');
      if (parts.size() < 2) {
        throw Error(Errc::bad_image, "bad .function header", line_no);
      }
      auto dot = parts[0].find('.');
      if (dot == std::string_view::npos) {
        throw Error(Errc::bad_image, "function name must be unit-qualified", line_no);
      }
      PendingFunction pf;
      pf.fn.unit = std::string(parts[0].substr(0, dot));
      pf.fn.name = std::string(parts[0].substr(dot + 1));
      pf.fn.arity = parse_number<std::uint32_t>(parts[1], line_no);
      for (std::size_t i = 2; i < parts.size(); ++i) {
        pf.fn.local_names.emplace_back(parts[i]);
      }
      pending.push_back(std::move(pf));
      in_function = true;
    } else if (directive == ".site") {
      auto parts = split(rest, ' ');
      if (parts.size() != 5) {
        throw Error(Errc::bad_image, "bad .site line", line_no);
      }
      CaptureSite site;
      site.id = parse_number<std::uint32_t>(parts[0], line_no);
      auto dot = parts[1].find('.');
      if (dot == std::string_view::npos || site.id != image.capture_sites.size()) {
        throw Error(Errc::bad_image, "bad .site line", line_no);
      }
      site.unit = std::string(parts[1].substr(0, dot));
      site.function = std::string(parts[1].substr(dot + 1));
      site.instr_index = parse_number<std::uint32_t>(parts[2], line_no);
      site.line = parse_number<int>(parts[3], line_no);
      auto kind = capture_kind_from_string(parts[4]);
      if (!kind) {
        throw Error(Errc::bad_image, "unknown capture kind", line_no);
      }
      site.kind = *kind;
      image.capture_sites.push_back(std::move(site));
    } else {
      throw Error(Errc::bad_image, "unknown directive '" + std::string(directive) + "'", line_no);
    }
  }

  for (const auto& pf : pending) {
    image.functions.push_back(pf.fn);
  }
  for (auto& site : image.capture_sites) {
    bool found = false;
    for (std::size_t f = 0; f < image.functions.size() && !found; ++f) {
      if (image.functions[f].name == site.function && image.functions[f].unit == site.unit) {
        site.function_index = static_cast<std::uint32_t>(f);
        found = true;
      }
    }
    if (!found) {
      throw Error(Errc::bad_image, "site references unknown function " + site.function);
    }
  }

  for (std::size_t f = 0; f < pending.size(); ++f) {
    FunctionBytecode& fn = image.functions[f];
    for (const auto& p : pending[f].body) {
      std::int32_t arg = 0;
      const auto fail = [&] {
        throw Error(Errc::bad_image, "bad operand '" + p.operand + "' for " +
                                         std::string(to_string(p.op)),
                    p.text_line);
      };
      switch (p.op) {
      case Opcode::PushConst: {
        Constant c = parse_constant(p.operand, p.text_line);
        arg = -1;
        for (std::size_t i = 0; i < image.constants.size() && arg < 0; ++i) {
          if (image.constants[i] == c) {
            arg = static_cast<std::int32_t>(i);
          }
        }
        if (arg < 0) {
          fail();
        }
        break;
      }
      case Opcode::LoadField:
      case Opcode::StoreField:
        arg = -1;
        for (std::size_t i = 0; i < image.names.size() && arg < 0; ++i) {
          if (image.names[i] == p.operand) {
            arg = static_cast<std::int32_t>(i);
          }
        }
        if (arg < 0) {
          fail();
        }
        break;
      case Opcode::NewRecord:
        arg = -1;
        for (std::size_t i = 0; i < image.shapes.size() && arg < 0; ++i) {
          if (render_shape(image, i) == p.operand) {
            arg = static_cast<std::int32_t>(i);
          }
        }
        if (arg < 0) {
          fail();
        }
        break;
      case Opcode::Call: {
        auto idx = image.find_function(p.operand);
        if (!idx) {
          fail();
        }
        arg = static_cast<std::int32_t>(*idx);
        break;
      }
      case Opcode::CallBuiltin: {
        auto b = builtin_from_string(p.operand.substr(0, p.operand.find('/')));
        if (!b) {
          fail();
        }
        arg = static_cast<std::int32_t>(*b);
        break;
      }
      case Opcode::BinOp: {
        auto b = binary_op_from_string(p.operand);
        if (!b) {
          fail();
        }
        arg = static_cast<std::int32_t>(*b);
        break;
      }
      case Opcode::Pop:
        if (p.operand != "-") {
          fail();
        }
        break;
      default: arg = parse_number<std::int32_t>(p.operand, p.text_line); break;
      }
      fn.code.push_back(Instruction{p.op, arg});
      fn.lines.push_back(p.line);
    }
  }
  return image;
}

} // namespace rts
