#include "rtsearch/ast.hpp"
#include "rtsearch/error.hpp"

#include <map>
#include <unordered_map>

namespace rts {

namespace {

struct FunctionSig {
  std::uint32_t index;
  std::uint32_t arity;
};

std::optional<Builtin> builtin_named(std::string_view name) {
  if (name == "print") {
    return std::nullopt; // statement only
  }
  return builtin_from_string(name);
}

class ImageBuilder {
public:
  ProgramImage image;

  std::int32_t intern_constant(const Constant& c) {
    for (std::size_t i = 0; i < image.constants.size(); ++i) {
      if (image.constants[i] == c) {
        return static_cast<std::int32_t>(i);
      }
    }
    image.constants.push_back(c);
    return static_cast<std::int32_t>(image.constants.size() - 1);
  }

  std::int32_t intern_name(const std::string& name) {
    for (std::size_t i = 0; i < image.names.size(); ++i) {
      if (image.names[i] == name) {
        return static_cast<std::int32_t>(i);
      }
    }
    image.names.push_back(name);
    return static_cast<std::int32_t>(image.names.size() - 1);
  }

  std::int32_t intern_shape(const std::vector<std::string>& fields) {
    std::vector<std::uint32_t> shape;
    for (const auto& f : fields) {
      shape.push_back(static_cast<std::uint32_t>(intern_name(f)));
    }
    for (std::size_t i = 0; i < image.shapes.size(); ++i) {
      if (image.shapes[i] == shape) {
        return static_cast<std::int32_t>(i);
      }
    }
    image.shapes.push_back(std::move(shape));
    return static_cast<std::int32_t>(image.shapes.size() - 1);
  }
};

class FunctionCompiler {
public:
  FunctionCompiler(ImageBuilder& builder, const std::map<std::string, FunctionSig>& sigs,
                   FunctionBytecode& out)
      : b_(builder), sigs_(sigs), fn_(out) {}

  void compile(const AstNode& decl) {
    scopes_.emplace_back();
    for (const auto& param : decl.names) {
      declare(param);
    }
    statement(decl.children.front());
    int tail_line = fn_.lines.empty() ? decl.line : fn_.lines.back();
    emit(Opcode::Return, 0, tail_line);
  }

private:
  std::int32_t declare(const std::string& name) {
    auto slot = static_cast<std::int32_t>(fn_.local_names.size());
    fn_.local_names.push_back(name);
    scopes_.back()[name] = slot;
    return slot;
  }

  std::int32_t resolve(const AstNode& n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto found = it->find(n.name); found != it->end()) {
        return found->second;
      }
    }
    throw Error(Errc::unknown_identifier, "unknown variable '" + n.name + "'", n.line);
  }

  std::size_t emit(Opcode op, std::int32_t arg, int line) {
    fn_.code.push_back(Instruction{op, arg});
    fn_.lines.push_back(line);
    return fn_.code.size() - 1;
  }

  std::int32_t here() const { return static_cast<std::int32_t>(fn_.code.size()); }

  void patch(std::size_t at, std::int32_t target) { fn_.code[at].arg = target; }

  void statement(const AstNode& n) {
    switch (n.kind) {
    case NodeKind::Block:
      scopes_.emplace_back();
      for (const auto& s : n.children) {
        statement(s);
      }
      scopes_.pop_back();
      return;
    case NodeKind::Let: {
      expression(n.children[0]);
      // Declared after the initializer so `let x = x;` reads an outer x.
      emit(Opcode::StoreLocal, declare(n.name), n.line);
      return;
    }
    case NodeKind::VarAssign: {
      std::int32_t slot = resolve(n);
      expression(n.children[0]);
      emit(Opcode::StoreLocal, slot, n.line);
      return;
    }
    case NodeKind::FieldAssign:
      expression(n.children[0]);
      expression(n.children[1]);
      emit(Opcode::StoreField, b_.intern_name(n.name), n.line);
      return;
    case NodeKind::If: {
      expression(n.children[0]);
      std::size_t to_else = emit(Opcode::JumpIfFalse, 0, n.line);
      statement(n.children[1]);
      if (n.children.size() > 2) {
        std::size_t to_end = emit(Opcode::Jump, 0, n.line);
        patch(to_else, here());
        statement(n.children[2]);
        patch(to_end, here());
      } else {
        patch(to_else, here());
      }
      return;
    }
    case NodeKind::While: {
      std::int32_t top = here();
      expression(n.children[0]);
      std::size_t to_end = emit(Opcode::JumpIfFalse, 0, n.line);
      statement(n.children[1]);
      emit(Opcode::Jump, top, n.line);
      patch(to_end, here());
      return;
    }
    case NodeKind::Return:
      if (n.children.empty()) {
        emit(Opcode::Return, 0, n.line);
      } else {
        expression(n.children[0]);
        emit(Opcode::Return, 1, n.line);
      }
      return;
    case NodeKind::Print:
      expression(n.children[0]);
      emit(Opcode::CallBuiltin, static_cast<std::int32_t>(Builtin::print), n.line);
      return;
    case NodeKind::ExprStmt:
      expression(n.children[0]);
      emit(Opcode::Pop, 0, n.line);
      return;
    default:
      throw Error(Errc::syntax_error, std::string("unexpected ") + std::string(to_string(n.kind)),
                  n.line);
    }
  }

  static bool statically_string(const AstNode& n) {
    switch (n.kind) {
    case NodeKind::Literal: return std::holds_alternative<std::string>(n.value);
    case NodeKind::BinOp:
      return n.op == BinaryOp::add &&
             (statically_string(n.children[0]) || statically_string(n.children[1]));
    case NodeKind::Call: {
      auto fn = builtin_named(n.name);
      return fn && (*fn == Builtin::upper || *fn == Builtin::lower || *fn == Builtin::str ||
                    *fn == Builtin::readline);
    }
    default: return false;
    }
  }

  void expression(const AstNode& n) {
    switch (n.kind) {
    case NodeKind::Literal:
      emit(Opcode::PushConst, b_.intern_constant(n.value), n.line);
      return;
    case NodeKind::VarRead:
      emit(Opcode::LoadLocal, resolve(n), n.line);
      return;
    case NodeKind::FieldRead:
      expression(n.children[0]);
      emit(Opcode::LoadField, b_.intern_name(n.name), n.line);
      return;
    case NodeKind::RecordNew:
      for (const auto& v : n.children) {
        expression(v);
      }
      emit(Opcode::NewRecord, b_.intern_shape(n.names), n.line);
      return;
    case NodeKind::BinOp: {
      expression(n.children[0]);
      expression(n.children[1]);
      BinaryOp op = n.op;
      if (op == BinaryOp::add && statically_string(n)) {
        op = BinaryOp::concat;
      }
      emit(Opcode::BinOp, static_cast<std::int32_t>(op), n.line);
      return;
    }
    case NodeKind::Call: call(n); return;
    default:
      throw Error(Errc::syntax_error,
                  std::string("unexpected ") + std::string(to_string(n.kind)) + " in expression",
                  n.line);
    }
  }

  void call(const AstNode& n) {
    auto argc = static_cast<std::uint32_t>(n.children.size());
    if (auto fn = sigs_.find(n.name); fn != sigs_.end()) {
      if (fn->second.arity != argc) {
        throw Error(Errc::arity_mismatch,
                    n.name + " expects " + std::to_string(fn->second.arity) + " argument(s), got " +
                        std::to_string(argc),
                    n.line);
      }
      for (const auto& a : n.children) {
        expression(a);
      }
      emit(Opcode::Call, static_cast<std::int32_t>(fn->second.index), n.line);
      return;
    }
    auto builtin = builtin_named(n.name);
    if (!builtin) {
      throw Error(Errc::unknown_identifier, "unknown function '" + n.name + "'", n.line);
    }
    if (builtin_arity(*builtin) != argc) {
      throw Error(Errc::arity_mismatch,
                  n.name + " expects " + std::to_string(builtin_arity(*builtin)) +
                      " argument(s), got " + std::to_string(argc),
                  n.line);
    }
    for (const auto& a : n.children) {
      expression(a);
    }
    emit(Opcode::CallBuiltin, static_cast<std::int32_t>(*builtin), n.line);
  }

  ImageBuilder& b_;
  const std::map<std::string, FunctionSig>& sigs_;
  FunctionBytecode& fn_;
  std::vector<std::unordered_map<std::string, std::int32_t>> scopes_;
};

} // namespace

ProgramImage compile(const AstNode& root, const std::string& unit_name) {
  return compile(std::vector<ParsedUnit>{ParsedUnit{unit_name, root}});
}

ProgramImage compile(const std::vector<ParsedUnit>& units) {
  std::map<std::string, FunctionSig> sigs;
  std::uint32_t next = 0;
  for (const auto& unit : units) {
    for (const auto& decl : unit.root.children) {
      if (decl.kind != NodeKind::FuncDecl) {
        throw Error(Errc::syntax_error, "expected function declaration", decl.line);
      }
      if (sigs.count(decl.name) != 0 || builtin_from_string(decl.name)) {
        throw Error(Errc::duplicate_function, "function '" + decl.name + "' is already defined",
                    decl.line);
      }
      sigs[decl.name] = FunctionSig{next++, static_cast<std::uint32_t>(decl.names.size())};
    }
  }
  if (auto main = sigs.find("main"); main == sigs.end()) {
    throw Error(Errc::missing_main, "no function 'main'");
  } else if (main->second.arity != 0) {
    throw Error(Errc::arity_mismatch, "main must take no parameters");
  }

  ImageBuilder builder;
  builder.image.functions.reserve(next);
  for (const auto& unit : units) {
    for (const auto& decl : unit.root.children) {
      FunctionBytecode fn;
      fn.name = decl.name;
      fn.unit = unit.unit_name;
      fn.arity = static_cast<std::uint32_t>(decl.names.size());
      FunctionCompiler(builder, sigs, fn).compile(decl);
      builder.image.functions.push_back(std::move(fn));
    }
  }
  return std::move(builder.image);
}

ProgramImage build_program(const std::vector<SourceUnit>& units) {
  std::vector<ParsedUnit> parsed;
  parsed.reserve(units.size());
  for (const auto& unit : units) {
    parsed.push_back(ParsedUnit{unit.unit_name, parse(unit, units.size() == 1)});
  }
  return compile(parsed);
}

} // namespace rts
