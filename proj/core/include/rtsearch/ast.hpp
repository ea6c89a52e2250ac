#pragma once

#include "rtsearch/bytecode.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rts {

struct SourceUnit {
  std::string path;
  std::string source;
  std::string unit_name;

  static SourceUnit from_text(std::string unit_name, std::string source);
  // Unit name is the file stem, with non-identifier characters replaced by `_`.
  static SourceUnit from_file(const std::filesystem::path& path);
};

enum class NodeKind {
  Literal,
  VarRead,
  VarAssign,
  FieldRead,
  FieldAssign,
  RecordNew,
  Call,
  BinOp,
  If,
  While,
  Return,
  Block,
  FuncDecl,
  Let,
  Print,
  ExprStmt,
};

std::string_view to_string(NodeKind kind);

// Child layout by kind:
//   VarAssign/Let: [value]          FieldRead: [object]
//   FieldAssign: [object, value]    RecordNew: field values, names in `names`
//   Call/Print/ExprStmt: arguments  BinOp: [lhs, rhs]
//   If: [cond, then, else?]         While: [cond, body]
//   Return: [value?]                FuncDecl: [body], params in `names`
struct AstNode {
  NodeKind kind = NodeKind::Block;
  int line = 1;
  std::string name;
  std::vector<std::string> names;
  Constant value;
  BinaryOp op = BinaryOp::add;
  std::vector<AstNode> children;
};

// Root is a Block of FuncDecls named after the unit.
AstNode parse(const SourceUnit& unit, bool require_main = true);

struct ParsedUnit {
  std::string unit_name;
  AstNode root;
};

ProgramImage compile(const AstNode& root, const std::string& unit_name);
ProgramImage compile(const std::vector<ParsedUnit>& units);

// Parses and compiles several units into one image; exactly one `main` must
// exist across them.
ProgramImage build_program(const std::vector<SourceUnit>& units);

} // namespace rts
