#pragma once

#include "rtsearch/bytecode.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rts {

// Glob over `unit.function` names: `*` matches any run of characters and
// `,` separates alternatives, e.g. `app.*,lib.format`.
class ScopePattern {
public:
  // Throws Errc::empty_scope for an empty pattern or an empty alternative.
  explicit ScopePattern(std::string_view pattern);

  bool matches(std::string_view qualified_name) const;
  const std::string& text() const { return text_; }

private:
  std::string text_;
  std::vector<std::string> alternatives_;
};

// Sites of `image` in code order, with `instr_index` relative to the
// uninstrumented code. Throws Errc::already_instrumented.
std::vector<CaptureSite> enumerate_sites(const ProgramImage& image, const ScopePattern& scope);

// Returns a copy of `image` with a Capture opcode after every site, jumps and
// line tables re-indexed. Throws Errc::already_instrumented.
ProgramImage instrument(const ProgramImage& image, const ScopePattern& scope);

} // namespace rts
