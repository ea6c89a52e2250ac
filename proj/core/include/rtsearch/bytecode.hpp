#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rts {

enum class Opcode : std::uint8_t {
  PushConst,
  LoadLocal,
  StoreLocal,
  LoadField,
  StoreField,
  NewRecord,
  Call,
  CallBuiltin,
  BinOp,
  Jump,
  JumpIfFalse,
  Return,
  Pop,
  Capture,
};

enum class Builtin : std::uint8_t { upper, lower, len, str, print, readline };

// `add` is the dynamic `+`: integer addition, or concatenation when either
// operand is a string. `concat` is emitted when one side is statically a string.
enum class BinaryOp : std::uint8_t { add, concat, sub, mul, div, eq, ne, lt };

enum class CaptureKind : std::uint8_t { Const, LocalRead, FieldRead, CallResult };

std::string_view to_string(Opcode op);
std::string_view to_string(Builtin fn);
std::string_view to_string(BinaryOp op);
std::string_view to_string(CaptureKind kind);

std::optional<Opcode> opcode_from_string(std::string_view text);
std::optional<Builtin> builtin_from_string(std::string_view text);
std::optional<BinaryOp> binary_op_from_string(std::string_view text);
std::optional<CaptureKind> capture_kind_from_string(std::string_view text);

unsigned builtin_arity(Builtin fn);
bool builtin_returns_value(Builtin fn);

// Null is std::monostate.
using Constant = std::variant<std::monostate, bool, std::int64_t, std::string>;

std::string render_constant(const Constant& value);

struct Instruction {
  Opcode op = Opcode::Pop;
  // PushConst: constant index; Load/StoreLocal: slot; Load/StoreField: name
  // index; NewRecord: shape index; Call: function index; CallBuiltin: Builtin;
  // BinOp: BinaryOp; jumps: target; Return: 1 if a value is returned;
  // Capture: site id.
  std::int32_t arg = 0;

  bool operator==(const Instruction&) const = default;
};

struct FunctionBytecode {
  std::string name;
  std::string unit;
  std::uint32_t arity = 0;
  std::vector<std::string> local_names;
  std::vector<Instruction> code;
  std::vector<int> lines; // parallel to `code`

  std::string qualified_name() const { return unit + "." + name; }
  bool operator==(const FunctionBytecode&) const = default;
};

struct CaptureSite {
  std::uint32_t id = 0;
  std::string function;
  std::string unit;
  std::uint32_t function_index = 0;
  // Index of the producing instruction within its function's code; the
  // Capture opcode sits at instr_index + 1 in an instrumented image.
  std::uint32_t instr_index = 0;
  int line = 0;
  CaptureKind kind = CaptureKind::Const;

  bool operator==(const CaptureSite&) const = default;
};

struct ProgramImage {
  std::vector<FunctionBytecode> functions;
  std::vector<Constant> constants;
  std::vector<std::string> names;                 // field names
  std::vector<std::vector<std::uint32_t>> shapes; // record layouts as name indices
  std::vector<CaptureSite> capture_sites;
  std::string entry = "main";
  bool instrumented = false;
  std::string scope; // pattern used by the instrumenter, if any

  std::optional<std::uint32_t> find_function(std::string_view name) const;
  std::uint32_t entry_index() const;

  bool operator==(const ProgramImage&) const = default;
};

// Throws Errc::unknown_site when `id` is out of range.
const CaptureSite& site_lookup(const ProgramImage& image, std::uint32_t id);

// Net operand-stack change of `instr`; requires the image for call arities.
int stack_effect(const ProgramImage& image, const Instruction& instr);

// Minimum stack depth `instr` needs before it executes.
int stack_demand(const ProgramImage& image, const Instruction& instr);

// Abstract interpretation of one function: depth before each instruction, or
// -1 for unreachable code. Throws Errc::bad_image on inconsistency.
std::vector<int> stack_depths(const ProgramImage& image, const FunctionBytecode& fn);

// Checks every function's operands and stack discipline plus the
// site-table/Capture-opcode bijection. Throws Errc::bad_image.
void verify(const ProgramImage& image);

// `index<TAB>opcode<TAB>operand<TAB>line` per instruction, with directive
// lines (`.const`, `.function`, ...) carrying the rest of the image.
std::string disassemble(const ProgramImage& image);
std::string disassemble(const ProgramImage& image, const FunctionBytecode& fn);
ProgramImage assemble(std::string_view text);

} // namespace rts
