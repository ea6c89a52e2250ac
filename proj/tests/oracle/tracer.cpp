#include "tracer.hpp"

#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>

namespace oracle {

namespace {

struct Rec;

struct Val {
  enum class Tag { null, boolean, integer, string, record } tag = Tag::null;
  bool b = false;
  std::int64_t i = 0;
  std::string s;
  std::shared_ptr<Rec> r;
};

struct Rec {
  std::vector<std::pair<std::string, Val>> fields;
};

struct Fault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    if (c == '"') {
      out += "\\\"";
    } else if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\t') {
      out += "\\t";
    } else if (c == '\r') {
      out += "\\r";
    } else if (c < 0x20 || c == 0x7f) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out + "\"";
}

std::string show(const Val& v, bool nested) {
  switch (v.tag) {
  case Val::Tag::null: return "null";
  case Val::Tag::boolean: return v.b ? "true" : "false";
  case Val::Tag::integer: return std::to_string(v.i);
  case Val::Tag::string: return nested ? quote(v.s) : v.s;
  case Val::Tag::record: {
    if (nested) {
      return "{...}";
    }
    std::string out = "{";
    for (std::size_t k = 0; k < v.r->fields.size(); ++k) {
      if (k) {
        out += ", ";
      }
      out += v.r->fields[k].first + ": " + show(v.r->fields[k].second, true);
    }
    return out + "}";
  }
  }
  return "?";
}

Val str_val(std::string s) {
  Val v;
  v.tag = Val::Tag::string;
  v.s = std::move(s);
  return v;
}
Val int_val(std::int64_t i) {
  Val v;
  v.tag = Val::Tag::integer;
  v.i = i;
  return v;
}
Val bool_val(bool b) {
  Val v;
  v.tag = Val::Tag::boolean;
  v.b = b;
  return v;
}

bool same(const Val& a, const Val& b) {
  if (a.tag != b.tag) {
    return false;
  }
  switch (a.tag) {
  case Val::Tag::null: return true;
  case Val::Tag::boolean: return a.b == b.b;
  case Val::Tag::integer: return a.i == b.i;
  case Val::Tag::string: return a.s == b.s;
  case Val::Tag::record: return a.r == b.r;
  }
  return false;
}

struct FuncRef {
  const rts::AstNode* decl;
  std::string unit;
};

class Interp {
public:
  Interp(const std::vector<rts::ParsedUnit>& units, const std::vector<std::string>& input,
         const TraceOptions& options, Trace& out)
      : input_(input), options_(options), out_(out) {
    for (const auto& u : units) {
      for (const auto& decl : u.root.children) {
        funcs_[decl.name] = FuncRef{&decl, u.unit_name};
      }
    }
  }

  void run() { call("main", {}, 1); }

private:
  using Scope = std::map<std::string, Val>;

  struct Activation {
    std::string unit;
    std::string function;
    std::vector<Scope> scopes;
    bool returning = false;
    Val result;
  };

  void log(const Val& v, const rts::AstNode& n) {
    if (v.tag != Val::Tag::string) {
      return;
    }
    const Activation& a = stack_.back();
    if (!options_.units.empty()) {
      bool in = false;
      for (const auto& u : options_.units) {
        in = in || u == a.unit;
      }
      if (!in) {
        return;
      }
    }
    out_.strings.push_back(LoggedValue{v.s, n.line, n.kind, a.unit, a.function});
  }

  Val* lookup(const std::string& name) {
    auto& scopes = stack_.back().scopes;
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) {
        return &f->second;
      }
    }
    throw std::logic_error("unresolved variable " + name);
  }

  Val call(const std::string& name, std::vector<Val> args, int) {
    const FuncRef& f = funcs_.at(name);
    if (stack_.size() >= 10000) {
      throw Fault("stack overflow");
    }
    Activation a;
    a.unit = f.unit;
    a.function = name;
    a.scopes.emplace_back();
    for (std::size_t k = 0; k < args.size(); ++k) {
      a.scopes.back()[f.decl->names[k]] = std::move(args[k]);
    }
    stack_.push_back(std::move(a));
    exec(f.decl->children.front());
    Val result = std::move(stack_.back().result);
    stack_.pop_back();
    return result;
  }

  void exec(const rts::AstNode& n) {
    using K = rts::NodeKind;
    switch (n.kind) {
    case K::Block:
      stack_.back().scopes.emplace_back();
      for (const auto& s : n.children) {
        exec(s);
        if (stack_.back().returning) {
          break;
        }
      }
      stack_.back().scopes.pop_back();
      return;
    case K::Let: {
      Val v = eval(n.children[0]);
      stack_.back().scopes.back()[n.name] = std::move(v);
      return;
    }
    case K::VarAssign: {
      Val v = eval(n.children[0]);
      *lookup(n.name) = std::move(v);
      return;
    }
    case K::FieldAssign: {
      Val obj = eval(n.children[0]);
      Val v = eval(n.children[1]);
      field_slot(obj, n.name) = std::move(v);
      return;
    }
    case K::If: {
      if (truth(eval(n.children[0]))) {
        exec(n.children[1]);
      } else if (n.children.size() > 2) {
        exec(n.children[2]);
      }
      return;
    }
    case K::While:
      while (truth(eval(n.children[0]))) {
        exec(n.children[1]);
        if (stack_.back().returning) {
          return;
        }
      }
      return;
    case K::Return:
    {
      Val v = n.children.empty() ? Val{} : eval(n.children[0]);
      stack_.back().result = std::move(v);
      stack_.back().returning = true;
    }
      return;
    case K::Print: {
      Val v = eval(n.children[0]);
      out_.stdout_text += show(v, false) + "\n";
      return;
    }
    case K::ExprStmt: eval(n.children[0]); return;
    default: throw std::logic_error("bad statement");
    }
  }

  static bool truth(const Val& v) {
    if (v.tag != Val::Tag::boolean) {
      throw Fault("condition is not a boolean");
    }
    return v.b;
  }

  Val& field_slot(const Val& obj, const std::string& field) {
    if (obj.tag != Val::Tag::record) {
      throw Fault("field access on non-record");
    }
    for (auto& [name, value] : obj.r->fields) {
      if (name == field) {
        return value;
      }
    }
    throw Fault("no such field " + field);
  }

  Val eval(const rts::AstNode& n) {
    Val v = eval_inner(n);
    using K = rts::NodeKind;
    if (n.kind == K::Literal || n.kind == K::VarRead || n.kind == K::FieldRead ||
        n.kind == K::Call || n.kind == K::BinOp) {
      log(v, n);
    }
    return v;
  }

  Val eval_inner(const rts::AstNode& n) {
    using K = rts::NodeKind;
    switch (n.kind) {
    case K::Literal: {
      Val v;
      if (const auto* s = std::get_if<std::string>(&n.value)) {
        return str_val(*s);
      }
      if (const auto* i = std::get_if<std::int64_t>(&n.value)) {
        return int_val(*i);
      }
      if (const auto* b = std::get_if<bool>(&n.value)) {
        return bool_val(*b);
      }
      return v;
    }
    case K::VarRead: return *lookup(n.name);
    case K::FieldRead: {
      Val obj = eval(n.children[0]);
      return field_slot(obj, n.name);
    }
    case K::RecordNew: {
      Val v;
      v.tag = Val::Tag::record;
      v.r = std::make_shared<Rec>();
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        Val f = eval(n.children[k]);
        v.r->fields.emplace_back(n.names[k], std::move(f));
      }
      return v;
    }
    case K::Call: {
      std::vector<Val> args;
      for (const auto& a : n.children) {
        args.push_back(eval(a));
      }
      if (funcs_.count(n.name)) {
        return call(n.name, std::move(args), n.line);
      }
      return builtin(n.name, args);
    }
    case K::BinOp: {
      Val a = eval(n.children[0]);
      Val b = eval(n.children[1]);
      return binop(n.op, a, b);
    }
    default: throw std::logic_error("bad expression");
    }
  }

  Val builtin(const std::string& name, const std::vector<Val>& args) {
    if (name == "readline") {
      return str_val(line_ < input_.size() ? input_[line_++] : std::string());
    }
    const Val& a = args.at(0);
    if (name == "upper" || name == "lower") {
      if (a.tag != Val::Tag::string) {
        throw Fault(name + " of non-string");
      }
      std::string s = a.s;
      for (auto& c : s) {
        if (name == "upper" && c >= 'a' && c <= 'z') {
          c = static_cast<char>(c - 32);
        } else if (name == "lower" && c >= 'A' && c <= 'Z') {
          c = static_cast<char>(c + 32);
        }
      }
      return str_val(s);
    }
    if (name == "len") {
      if (a.tag != Val::Tag::string) {
        throw Fault("len of non-string");
      }
      std::int64_t n = 0;
      for (unsigned char c : a.s) {
        if ((c & 0xC0) != 0x80) {
          ++n;
        }
      }
      return int_val(n);
    }
    if (name == "str") {
      return str_val(show(a, false));
    }
    throw std::logic_error("unknown builtin " + name);
  }

  static Val binop(rts::BinaryOp op, const Val& a, const Val& b) {
    using T = Val::Tag;
    const auto ints = [&] {
      if (a.tag != T::integer || b.tag != T::integer) {
        throw Fault("arithmetic on non-integers");
      }
    };
    switch (op) {
    case rts::BinaryOp::add:
    case rts::BinaryOp::concat:
      if (a.tag == T::integer && b.tag == T::integer) {
        return int_val(static_cast<std::int64_t>(static_cast<std::uint64_t>(a.i) +
                                                 static_cast<std::uint64_t>(b.i)));
      }
      if (a.tag == T::string && (b.tag == T::string || b.tag == T::integer)) {
        return str_val(a.s + (b.tag == T::string ? b.s : std::to_string(b.i)));
      }
      if (a.tag == T::integer && b.tag == T::string) {
        return str_val(std::to_string(a.i) + b.s);
      }
      throw Fault("bad operands for +");
    case rts::BinaryOp::sub:
      ints();
      return int_val(static_cast<std::int64_t>(static_cast<std::uint64_t>(a.i) -
                                               static_cast<std::uint64_t>(b.i)));
    case rts::BinaryOp::mul:
      ints();
      return int_val(static_cast<std::int64_t>(static_cast<std::uint64_t>(a.i) *
                                               static_cast<std::uint64_t>(b.i)));
    case rts::BinaryOp::div:
      ints();
      if (b.i == 0) {
        throw Fault("division by zero");
      }
      if (b.i == -1 && a.i == INT64_MIN) {
        throw Fault("overflow");
      }
      return int_val(a.i / b.i);
    case rts::BinaryOp::eq: return bool_val(same(a, b));
    case rts::BinaryOp::ne: return bool_val(!same(a, b));
    case rts::BinaryOp::lt:
      if (a.tag == T::integer && b.tag == T::integer) {
        return bool_val(a.i < b.i);
      }
      if (a.tag == T::string && b.tag == T::string) {
        return bool_val(a.s < b.s);
      }
      throw Fault("bad operands for <");
    }
    throw std::logic_error("bad op");
  }

  std::map<std::string, FuncRef> funcs_;
  const std::vector<std::string>& input_;
  std::size_t line_ = 0;
  const TraceOptions& options_;
  Trace& out_;
  std::vector<Activation> stack_;
};

} // namespace

Trace trace(const std::vector<rts::SourceUnit>& units, const std::vector<std::string>& input,
            const TraceOptions& options) {
  std::vector<rts::ParsedUnit> parsed;
  for (const auto& u : units) {
    parsed.push_back(rts::ParsedUnit{u.unit_name, rts::parse(u, units.size() == 1)});
  }
  Trace out;
  Interp interp(parsed, input, options, out);
  try {
    interp.run();
  } catch (const Fault& f) {
    out.faulted = true;
    out.fault_message = f.what();
  }
  return out;
}

} // namespace oracle
