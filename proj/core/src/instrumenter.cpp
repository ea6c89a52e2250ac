#include "rtsearch/instrumenter.hpp"
#include "rtsearch/error.hpp"

#include <optional>

namespace rts {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

bool glob(std::string_view pattern, std::string_view text) {
  std::size_t p = 0;
  std::size_t t = 0;
  std::size_t star = std::string_view::npos;
  std::size_t resume = 0;
  while (t < text.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      resume = t;
    } else if (p < pattern.size() && pattern[p] == text[t]) {
      ++p;
      ++t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++resume;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') {
    ++p;
  }
  return p == pattern.size();
}

// Kind of the value pushed by `ins`, if it may be a string.
std::optional<CaptureKind> site_kind(const ProgramImage& image, const Instruction& ins) {
  switch (ins.op) {
  case Opcode::PushConst:
    if (std::holds_alternative<std::string>(image.constants.at(static_cast<std::size_t>(ins.arg)))) {
      return CaptureKind::Const;
    }
    return std::nullopt;
  case Opcode::LoadLocal: return CaptureKind::LocalRead;
  case Opcode::LoadField: return CaptureKind::FieldRead;
  case Opcode::Call: return CaptureKind::CallResult;
  case Opcode::CallBuiltin:
    switch (static_cast<Builtin>(ins.arg)) {
    case Builtin::upper:
    case Builtin::lower:
    case Builtin::str:
    case Builtin::readline: return CaptureKind::CallResult;
    default: return std::nullopt;
    }
  case Opcode::BinOp: {
    auto op = static_cast<BinaryOp>(ins.arg);
    if (op == BinaryOp::add || op == BinaryOp::concat) {
      return CaptureKind::CallResult;
    }
    return std::nullopt;
  }
  default: return std::nullopt;
  }
}

} // namespace

ScopePattern::ScopePattern(std::string_view pattern) : text_(pattern) {
  if (trim(pattern).empty()) {
    throw Error(Errc::empty_scope, "scope pattern is empty");
  }
  std::size_t start = 0;
  for (;;) {
    auto comma = pattern.find(',', start);
    auto alt = trim(pattern.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start));
    if (alt.empty()) {
      throw Error(Errc::empty_scope, "scope pattern '" + text_ + "' has an empty alternative");
    }
    alternatives_.emplace_back(alt);
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
}

bool ScopePattern::matches(std::string_view qualified_name) const {
  for (const auto& alt : alternatives_) {
    if (glob(alt, qualified_name)) {
      return true;
    }
  }
  return false;
}

std::vector<CaptureSite> enumerate_sites(const ProgramImage& image, const ScopePattern& scope) {
  if (image.instrumented) {
    throw Error(Errc::already_instrumented, "image was instrumented with scope '" + image.scope + "'");
  }
  std::vector<CaptureSite> sites;
  for (std::size_t f = 0; f < image.functions.size(); ++f) {
    const auto& fn = image.functions[f];
    if (!scope.matches(fn.qualified_name())) {
      continue;
    }
    for (std::size_t i = 0; i < fn.code.size(); ++i) {
      if (auto kind = site_kind(image, fn.code[i])) {
        CaptureSite site;
        site.id = static_cast<std::uint32_t>(sites.size());
        site.function = fn.name;
        site.unit = fn.unit;
        site.function_index = static_cast<std::uint32_t>(f);
        site.instr_index = static_cast<std::uint32_t>(i);
        site.line = fn.lines[i];
        site.kind = *kind;
        sites.push_back(std::move(site));
      }
    }
  }
  return sites;
}

ProgramImage instrument(const ProgramImage& image, const ScopePattern& scope) {
  std::vector<CaptureSite> sites = enumerate_sites(image, scope);
  ProgramImage out = image;
  out.instrumented = true;
  out.scope = scope.text();

  auto next_site = sites.begin();
  for (std::size_t f = 0; f < out.functions.size(); ++f) {
    const FunctionBytecode& src = image.functions[f];
    FunctionBytecode& dst = out.functions[f];
    dst.code.clear();
    dst.lines.clear();
    std::vector<std::int32_t> relocated(src.code.size());
    for (std::size_t i = 0; i < src.code.size(); ++i) {
      relocated[i] = static_cast<std::int32_t>(dst.code.size());
      dst.code.push_back(src.code[i]);
      dst.lines.push_back(src.lines[i]);
      if (next_site != sites.end() && next_site->function_index == f &&
          next_site->instr_index == i) {
        next_site->instr_index = static_cast<std::uint32_t>(dst.code.size() - 1);
        dst.code.push_back(Instruction{Opcode::Capture, static_cast<std::int32_t>(next_site->id)});
        dst.lines.push_back(src.lines[i]);
        ++next_site;
      }
    }
    for (auto& ins : dst.code) {
      if (ins.op == Opcode::Jump || ins.op == Opcode::JumpIfFalse) {
        ins.arg = relocated[static_cast<std::size_t>(ins.arg)];
      }
    }
  }
  out.capture_sites = std::move(sites);
  verify(out);
  return out;
}

} // namespace rts
