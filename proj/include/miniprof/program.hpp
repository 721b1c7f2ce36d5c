#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "miniprof/line_id.hpp"

namespace miniprof {

enum class Opcode {
    push,
    pop,
    add,
    jmp,
    jnz,
    call,
    call_native,
    alloc,
    free_obj,
    copy,
    spawn,
    join,
    ret,
    halt,
};

const char* opcode_name(Opcode op);

struct Instruction {
    Opcode op;
    std::int64_t operand = 0;      // PUSH k, JMP/JNZ target, ALLOC/COPY n, JOIN tid
    std::uint32_t func_target = 0; // resolved CALL/SPAWN destination
    std::string symbol;            // CALL/SPAWN/CALL_NATIVE name
    std::uint64_t native_ns = 0;   // CALL_NATIVE virtual duration
    std::uint32_t file_idx = 0;
    std::uint32_t line = 0;        // 1-based source line

    bool operator==(const Instruction& o) const;
};

struct Function {
    std::string name;
    std::vector<Instruction> code;

    bool operator==(const Function& o) const { return name == o.name && code == o.code; }
};

// A parsed program: named functions plus the line table mapping every opcode
// back to (file, line). Entry point is the function named "main".
struct Program {
    std::vector<Function> functions;
    std::vector<std::string> files;
    std::uint32_t entry = 0;

    std::optional<std::uint32_t> find_function(std::string_view name) const;
    LineId line_of(std::uint32_t func, std::uint32_t opcode_index) const;
    std::size_t total_opcodes() const;

    // Structural equality: same functions, instructions, and resolved source
    // positions. File-table ordering is not significant.
    bool operator==(const Program& o) const;
};

struct ParseError : std::runtime_error {
    ParseError(std::string msg, std::size_t line, std::size_t column);
    std::size_t line;
    std::size_t column;
};

// Parses assembly text. Grammar: `.func NAME` opens a function, `.line N`
// sets the source line for following opcodes, `.file NAME` sets the source
// file, one opcode per line, `#` starts a comment. Opcodes without a
// preceding `.line` are attributed to their own line in the assembly text.
// Fails with a position-tagged ParseError; never returns a partial program.
Program parse_program(std::string_view text, std::string_view source_name = "<memory>");

struct DisasmRow {
    std::string function;
    std::uint32_t index = 0;
    std::string opcode;
    std::string operand;
    LineId line;
};

// One row per opcode, grouped by function in definition order. Row indices
// restart at 0 for each function and match jump-target numbering.
std::vector<DisasmRow> disassemble(const Program& program);

// Renders a disassembly listing (or a whole program) back to parseable
// assembly text. parse(render(disassemble(p))) is structurally equal to p.
std::string render_assembly(const std::vector<DisasmRow>& rows);
std::string render_assembly(const Program& program);

} // namespace miniprof
