#include "rtsearch/ast.hpp"
#include "rtsearch/error.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rts {

SourceUnit SourceUnit::from_text(std::string unit_name, std::string source) {
  return SourceUnit{unit_name + ".mls", std::move(source), std::move(unit_name)};
}

SourceUnit SourceUnit::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();

  std::string stem = path.stem().string();
  for (auto& c : stem) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
      c = '_';
    }
  }
  if (stem.empty() || std::isdigit(static_cast<unsigned char>(stem.front()))) {
    stem.insert(stem.begin(), '_');
  }
  return SourceUnit{path.string(), buffer.str(), stem};
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::Literal: return "Literal";
  case NodeKind::VarRead: return "VarRead";
  case NodeKind::VarAssign: return "VarAssign";
  case NodeKind::FieldRead: return "FieldRead";
  case NodeKind::FieldAssign: return "FieldAssign";
  case NodeKind::RecordNew: return "RecordNew";
  case NodeKind::Call: return "Call";
  case NodeKind::BinOp: return "BinOp";
  case NodeKind::If: return "If";
  case NodeKind::While: return "While";
  case NodeKind::Return: return "Return";
  case NodeKind::Block: return "Block";
  case NodeKind::FuncDecl: return "FuncDecl";
  case NodeKind::Let: return "Let";
  case NodeKind::Print: return "Print";
  case NodeKind::ExprStmt: return "ExprStmt";
  }
  return "?";
}

namespace {

enum class Tok {
  ident,
  integer,
  string,
  kw_fn,
  kw_let,
  kw_if,
  kw_else,
  kw_while,
  kw_return,
  kw_new,
  kw_true,
  kw_false,
  kw_null,
  kw_print,
  lparen,
  rparen,
  lbrace,
  rbrace,
  comma,
  semicolon,
  colon,
  dot,
  assign,
  eq,
  ne,
  lt,
  plus,
  minus,
  star,
  slash,
  bang,
  eof,
};

struct Token {
  Tok kind = Tok::eof;
  std::string text;
  std::int64_t number = 0;
  int line = 1;
  int column = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::eof;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        lex_word(t);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (c == '"') {
        lex_string(t);
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

private:
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') {
          advance();
        }
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::syntax_error, msg, line_, column_);
  }

  void lex_word(Token& t) {
    std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') {
      advance();
    }
    t.text = std::string(src_.substr(start, pos_ - start));
    static const std::pair<std::string_view, Tok> keywords[] = {
        {"fn", Tok::kw_fn},       {"let", Tok::kw_let},       {"if", Tok::kw_if},
        {"else", Tok::kw_else},   {"while", Tok::kw_while},   {"return", Tok::kw_return},
        {"new", Tok::kw_new},     {"true", Tok::kw_true},     {"false", Tok::kw_false},
        {"null", Tok::kw_null},   {"print", Tok::kw_print},
    };
    t.kind = Tok::ident;
    for (const auto& [word, kind] : keywords) {
      if (t.text == word) {
        t.kind = kind;
      }
    }
  }

  void lex_number(Token& t) {
    std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      advance();
    }
    t.kind = Tok::integer;
    t.text = std::string(src_.substr(start, pos_ - start));
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
    if (ec != std::errc()) {
      fail("integer literal out of range");
    }
  }

  void lex_string(Token& t) {
    advance();
    t.kind = Tok::string;
    for (;;) {
      if (pos_ >= src_.size() || peek() == '\n') {
        fail("unterminated string literal");
      }
      char c = peek();
      if (c == '"') {
        advance();
        return;
      }
      if (c == '\\') {
        advance();
        char e = peek();
        switch (e) {
        case 'n': t.text += '\n'; break;
        case 't': t.text += '\t'; break;
        case 'r': t.text += '\r'; break;
        case '"': t.text += '"'; break;
        case '\\': t.text += '\\'; break;
        default: fail(std::string("unknown escape \\") + e);
        }
        advance();
        continue;
      }
      t.text += c;
      advance();
    }
  }

  void lex_punct(Token& t) {
    char c = peek();
    char n = peek(1);
    auto one = [&](Tok k) {
      t.kind = k;
      t.text = std::string(1, c);
      advance();
    };
    auto two = [&](Tok k) {
      t.kind = k;
      t.text = std::string{c, n};
      advance();
      advance();
    };
    switch (c) {
    case '(': one(Tok::lparen); break;
    case ')': one(Tok::rparen); break;
    case '{': one(Tok::lbrace); break;
    case '}': one(Tok::rbrace); break;
    case ',': one(Tok::comma); break;
    case ';': one(Tok::semicolon); break;
    case ':': one(Tok::colon); break;
    case '.': one(Tok::dot); break;
    case '<': one(Tok::lt); break;
    case '+': one(Tok::plus); break;
    case '-': one(Tok::minus); break;
    case '*': one(Tok::star); break;
    case '/': one(Tok::slash); break;
    case '=': n == '=' ? two(Tok::eq) : one(Tok::assign); break;
    case '!': n == '=' ? two(Tok::ne) : one(Tok::bang); break;
    default: fail(std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::eof) {
    return "end of input";
  }
  if (t.kind == Tok::string) {
    return "string literal";
  }
  return "'" + t.text + "'";
}

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  AstNode program(const std::string& unit_name) {
    AstNode root;
    root.kind = NodeKind::Block;
    root.name = unit_name;
    root.line = 1;
    while (cur().kind != Tok::eof) {
      root.children.push_back(function());
    }
    return root;
  }

private:
  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }

  bool accept(Tok k) {
    if (at(k)) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::syntax_error, what + ", found " + describe(cur()), cur().line,
                cur().column);
  }

  const Token& expect(Tok k, const char* what) {
    if (!at(k)) {
      fail(std::string("expected ") + what);
    }
    return toks_[pos_++];
  }

  static AstNode node(NodeKind kind, int line) {
    AstNode n;
    n.kind = kind;
    n.line = line;
    return n;
  }

  AstNode function() {
    const Token& kw = expect(Tok::kw_fn, "'fn'");
    AstNode fn = node(NodeKind::FuncDecl, kw.line);
    fn.name = expect(Tok::ident, "function name").text;
    expect(Tok::lparen, "'('");
    if (!at(Tok::rparen)) {
      do {
        fn.names.push_back(expect(Tok::ident, "parameter name").text);
      } while (accept(Tok::comma));
    }
    expect(Tok::rparen, "')'");
    fn.children.push_back(block());
    return fn;
  }

  AstNode block() {
    const Token& open = expect(Tok::lbrace, "'{'");
    AstNode b = node(NodeKind::Block, open.line);
    while (!at(Tok::rbrace)) {
      if (at(Tok::eof)) {
        fail("expected '}'");
      }
      b.children.push_back(statement());
    }
    ++pos_;
    return b;
  }

  AstNode statement() {
    int line = cur().line;
    switch (cur().kind) {
    case Tok::kw_let: {
      ++pos_;
      AstNode n = node(NodeKind::Let, line);
      n.name = expect(Tok::ident, "variable name").text;
      expect(Tok::assign, "'='");
      n.children.push_back(expression());
      expect(Tok::semicolon, "';'");
      return n;
    }
    case Tok::kw_if: return if_statement();
    case Tok::kw_while: {
      ++pos_;
      AstNode n = node(NodeKind::While, line);
      n.children.push_back(expression());
      n.children.push_back(block());
      return n;
    }
    case Tok::kw_return: {
      ++pos_;
      AstNode n = node(NodeKind::Return, line);
      if (!at(Tok::semicolon)) {
        n.children.push_back(expression());
      }
      expect(Tok::semicolon, "';'");
      return n;
    }
    case Tok::kw_print: {
      ++pos_;
      AstNode n = node(NodeKind::Print, line);
      expect(Tok::lparen, "'('");
      n.children.push_back(expression());
      expect(Tok::rparen, "')'");
      expect(Tok::semicolon, "';'");
      return n;
    }
    case Tok::lbrace: return block();
    default: break;
    }

    AstNode target = expression();
    if (accept(Tok::assign)) {
      AstNode value = expression();
      expect(Tok::semicolon, "';'");
      if (target.kind == NodeKind::VarRead) {
        AstNode n = node(NodeKind::VarAssign, line);
        n.name = std::move(target.name);
        n.children.push_back(std::move(value));
        return n;
      }
      if (target.kind == NodeKind::FieldRead) {
        AstNode n = node(NodeKind::FieldAssign, line);
        n.name = std::move(target.name);
        n.children.push_back(std::move(target.children.front()));
        n.children.push_back(std::move(value));
        return n;
      }
      throw Error(Errc::syntax_error, "invalid assignment target", line);
    }
    expect(Tok::semicolon, "';'");
    AstNode n = node(NodeKind::ExprStmt, line);
    n.children.push_back(std::move(target));
    return n;
  }

  AstNode if_statement() {
    int line = cur().line;
    ++pos_;
    AstNode n = node(NodeKind::If, line);
    n.children.push_back(expression());
    n.children.push_back(block());
    if (accept(Tok::kw_else)) {
      if (at(Tok::kw_if)) {
        AstNode nested = if_statement();
        AstNode wrapper = node(NodeKind::Block, nested.line);
        wrapper.children.push_back(std::move(nested));
        n.children.push_back(std::move(wrapper));
      } else {
        n.children.push_back(block());
      }
    }
    return n;
  }

  static AstNode binary(BinaryOp op, int line, AstNode lhs, AstNode rhs) {
    AstNode n = node(NodeKind::BinOp, line);
    n.op = op;
    n.children.push_back(std::move(lhs));
    n.children.push_back(std::move(rhs));
    return n;
  }

  AstNode expression() { return equality(); }

  AstNode equality() {
    AstNode lhs = comparison();
    for (;;) {
      int line = cur().line;
      if (accept(Tok::eq)) {
        lhs = binary(BinaryOp::eq, line, std::move(lhs), comparison());
      } else if (accept(Tok::ne)) {
        lhs = binary(BinaryOp::ne, line, std::move(lhs), comparison());
      } else {
        return lhs;
      }
    }
  }

  AstNode comparison() {
    AstNode lhs = additive();
    while (at(Tok::lt)) {
      int line = cur().line;
      ++pos_;
      lhs = binary(BinaryOp::lt, line, std::move(lhs), additive());
    }
    return lhs;
  }

  AstNode additive() {
    AstNode lhs = multiplicative();
    for (;;) {
      int line = cur().line;
      if (accept(Tok::plus)) {
        lhs = binary(BinaryOp::add, line, std::move(lhs), multiplicative());
      } else if (accept(Tok::minus)) {
        lhs = binary(BinaryOp::sub, line, std::move(lhs), multiplicative());
      } else {
        return lhs;
      }
    }
  }

  AstNode multiplicative() {
    AstNode lhs = unary();
    for (;;) {
      int line = cur().line;
      if (accept(Tok::star)) {
        lhs = binary(BinaryOp::mul, line, std::move(lhs), unary());
      } else if (accept(Tok::slash)) {
        lhs = binary(BinaryOp::div, line, std::move(lhs), unary());
      } else {
        return lhs;
      }
    }
  }

  // `-x` is `0 - x` and `!x` is `x == false`.
  AstNode unary() {
    int line = cur().line;
    if (accept(Tok::minus)) {
      AstNode zero = node(NodeKind::Literal, line);
      zero.value = std::int64_t{0};
      return binary(BinaryOp::sub, line, std::move(zero), unary());
    }
    if (accept(Tok::bang)) {
      AstNode operand = unary();
      AstNode f = node(NodeKind::Literal, line);
      f.value = false;
      return binary(BinaryOp::eq, line, std::move(operand), std::move(f));
    }
    return postfix();
  }

  AstNode postfix() {
    AstNode e = primary();
    while (at(Tok::dot)) {
      ++pos_;
      const Token& field = expect(Tok::ident, "field name");
      AstNode n = node(NodeKind::FieldRead, field.line);
      n.name = field.text;
      n.children.push_back(std::move(e));
      e = std::move(n);
    }
    return e;
  }

  AstNode primary() {
    const Token& t = cur();
    int line = t.line;
    switch (t.kind) {
    case Tok::integer: {
      AstNode n = node(NodeKind::Literal, line);
      n.value = t.number;
      ++pos_;
      return n;
    }
    case Tok::string: {
      AstNode n = node(NodeKind::Literal, line);
      n.value = t.text;
      ++pos_;
      return n;
    }
    case Tok::kw_true:
    case Tok::kw_false: {
      AstNode n = node(NodeKind::Literal, line);
      n.value = t.kind == Tok::kw_true;
      ++pos_;
      return n;
    }
    case Tok::kw_null: {
      ++pos_;
      return node(NodeKind::Literal, line);
    }
    case Tok::lparen: {
      ++pos_;
      AstNode e = expression();
      expect(Tok::rparen, "')'");
      return e;
    }
    case Tok::kw_new: {
      ++pos_;
      AstNode n = node(NodeKind::RecordNew, line);
      expect(Tok::lbrace, "'{'");
      if (!at(Tok::rbrace)) {
        do {
          std::string field = expect(Tok::ident, "field name").text;
          for (const auto& existing : n.names) {
            if (existing == field) {
              fail("duplicate field '" + field + "'");
            }
          }
          n.names.push_back(std::move(field));
          expect(Tok::colon, "':'");
          n.children.push_back(expression());
        } while (accept(Tok::comma));
      }
      expect(Tok::rbrace, "'}'");
      return n;
    }
    case Tok::ident: {
      std::string name = t.text;
      ++pos_;
      if (accept(Tok::lparen)) {
        AstNode n = node(NodeKind::Call, line);
        n.name = std::move(name);
        if (!at(Tok::rparen)) {
          do {
            n.children.push_back(expression());
          } while (accept(Tok::comma));
        }
        expect(Tok::rparen, "')'");
        return n;
      }
      AstNode n = node(NodeKind::VarRead, line);
      n.name = std::move(name);
      return n;
    }
    case Tok::kw_print: fail("print is a statement, not an expression");
    default: fail("expected expression");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace

AstNode parse(const SourceUnit& unit, bool require_main) {
  Parser parser(Lexer(unit.source).run());
  AstNode root = parser.program(unit.unit_name);
  if (require_main) {
    bool found = false;
    for (const auto& fn : root.children) {
      found = found || fn.name == "main";
    }
    if (!found) {
      throw Error(Errc::missing_main, "no function 'main' in unit " + unit.unit_name);
    }
  }
  return root;
}

} // namespace rts
