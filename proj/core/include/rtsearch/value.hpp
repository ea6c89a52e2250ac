#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace rts {

struct RecordRef {
  std::uint32_t id = 0;
  bool operator==(const RecordRef&) const = default;
};

// Null is std::monostate.
using Value = std::variant<std::monostate, bool, std::int64_t, std::string, RecordRef>;

struct Record {
  std::uint32_t shape = 0;
  std::vector<Value> fields;
};

std::string_view type_name(const Value& v);

} // namespace rts
