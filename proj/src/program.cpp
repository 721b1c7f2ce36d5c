#include "miniprof/program.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

namespace miniprof {

namespace {

enum class OperandKind { none, integer, target, function, native };

struct OpInfo {
    Opcode op;
    const char* name;
    OperandKind kind;
    bool non_negative; // integer operand must be >= 0
};

const OpInfo kOps[] = {
    {Opcode::push, "PUSH", OperandKind::integer, false},
    {Opcode::pop, "POP", OperandKind::none, false},
    {Opcode::add, "ADD", OperandKind::none, false},
    {Opcode::jmp, "JMP", OperandKind::target, true},
    {Opcode::jnz, "JNZ", OperandKind::target, true},
    {Opcode::call, "CALL", OperandKind::function, false},
    {Opcode::call_native, "CALL_NATIVE", OperandKind::native, false},
    {Opcode::alloc, "ALLOC", OperandKind::integer, true},
    {Opcode::free_obj, "FREE", OperandKind::none, false},
    {Opcode::copy, "COPY", OperandKind::integer, true},
    {Opcode::spawn, "SPAWN", OperandKind::function, false},
    {Opcode::join, "JOIN", OperandKind::integer, true},
    {Opcode::ret, "RET", OperandKind::none, false},
    {Opcode::halt, "HALT", OperandKind::none, false},
};

const OpInfo& op_info(Opcode op) {
    return kOps[static_cast<int>(op)];
}

const OpInfo* lookup_op(std::string_view name) {
    for (const auto& info : kOps)
        if (name == info.name)
            return &info;
    return nullptr;
}

struct Token {
    std::string_view text;
    std::size_t column; // 1-based
};

std::vector<Token> tokenize_line(std::string_view line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#')
            break;
        if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
               line[i] != '\r' && line[i] != '#')
            ++i;
        tokens.push_back({line.substr(start, i - start), start + 1});
    }
    return tokens;
}

bool parse_int64(std::string_view s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

// Renders nanoseconds as decimal seconds with trailing zeros trimmed, so a
// rendered duration parses back to the identical tick count.
std::string format_seconds(std::uint64_t ns) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%llu.%09llu",
                  static_cast<unsigned long long>(ns / 1000000000ULL),
                  static_cast<unsigned long long>(ns % 1000000000ULL));
    std::string s(buf);
    while (s.size() > 1 && s.back() == '0')
        s.pop_back();
    if (s.back() == '.')
        s.pop_back();
    return s;
}

} // namespace

const char* opcode_name(Opcode op) {
    return op_info(op).name;
}

bool Instruction::operator==(const Instruction& o) const {
    return op == o.op && operand == o.operand && func_target == o.func_target &&
           symbol == o.symbol && native_ns == o.native_ns && file_idx == o.file_idx &&
           line == o.line;
}

bool Program::operator==(const Program& o) const {
    if (entry != o.entry || functions.size() != o.functions.size())
        return false;
    for (std::size_t f = 0; f < functions.size(); ++f) {
        const Function& a = functions[f];
        const Function& b = o.functions[f];
        if (a.name != b.name || a.code.size() != b.code.size())
            return false;
        for (std::size_t i = 0; i < a.code.size(); ++i) {
            const Instruction& x = a.code[i];
            const Instruction& y = b.code[i];
            if (x.op != y.op || x.operand != y.operand || x.func_target != y.func_target ||
                x.symbol != y.symbol || x.native_ns != y.native_ns || x.line != y.line ||
                files[x.file_idx] != o.files[y.file_idx])
                return false;
        }
    }
    return true;
}

std::optional<std::uint32_t> Program::find_function(std::string_view name) const {
    for (std::uint32_t i = 0; i < functions.size(); ++i)
        if (functions[i].name == name)
            return i;
    return std::nullopt;
}

LineId Program::line_of(std::uint32_t func, std::uint32_t opcode_index) const {
    if (func >= functions.size() || opcode_index >= functions[func].code.size())
        return unknown_line();
    const Instruction& ins = functions[func].code[opcode_index];
    return LineId{files[ins.file_idx], ins.line};
}

std::size_t Program::total_opcodes() const {
    std::size_t n = 0;
    for (const auto& f : functions)
        n += f.code.size();
    return n;
}

ParseError::ParseError(std::string msg, std::size_t line, std::size_t column)
    : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"),
      line(line), column(column) {}

Program parse_program(std::string_view text, std::string_view source_name) {
    Program prog;
    std::map<std::string, std::uint32_t, std::less<>> file_ids;
    auto intern_file = [&](std::string_view name) {
        auto it = file_ids.find(name);
        if (it != file_ids.end())
            return it->second;
        auto id = static_cast<std::uint32_t>(prog.files.size());
        prog.files.emplace_back(name);
        file_ids.emplace(std::string(name), id);
        return id;
    };

    std::uint32_t current_file = intern_file(source_name);
    std::uint32_t current_line = 0; // sticky .line value; 0 = unset
    Function* current_func = nullptr;
    // (function index, opcode index, symbol, source position) awaiting resolution
    struct PendingCall {
        std::uint32_t func, index;
        std::size_t src_line, src_col;
    };
    std::vector<PendingCall> pending_calls;

    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++lineno;

        auto tokens = tokenize_line(raw);
        if (tokens.empty())
            continue;
        const Token& head = tokens[0];

        if (head.text == ".func") {
            if (tokens.size() != 2)
                throw ParseError(".func expects one name", lineno, head.column);
            if (prog.find_function(tokens[1].text))
                throw ParseError("duplicate function '" + std::string(tokens[1].text) + "'",
                                 lineno, tokens[1].column);
            prog.functions.push_back(Function{std::string(tokens[1].text), {}});
            current_func = &prog.functions.back();
            current_line = 0;
            continue;
        }
        if (head.text == ".line") {
            std::int64_t n = 0;
            if (tokens.size() != 2 || !parse_int64(tokens[1].text, n) || n < 1)
                throw ParseError(".line expects a positive integer", lineno, head.column);
            current_line = static_cast<std::uint32_t>(n);
            continue;
        }
        if (head.text == ".file") {
            if (tokens.size() != 2)
                throw ParseError(".file expects one name", lineno, head.column);
            current_file = intern_file(tokens[1].text);
            continue;
        }
        if (head.text.front() == '.')
            throw ParseError("unknown directive '" + std::string(head.text) + "'",
                             lineno, head.column);

        const OpInfo* info = lookup_op(head.text);
        if (!info)
            throw ParseError("unknown opcode '" + std::string(head.text) + "'",
                             lineno, head.column);
        if (!current_func)
            throw ParseError("opcode before any .func", lineno, head.column);

        Instruction ins;
        ins.op = info->op;
        ins.file_idx = current_file;
        ins.line = current_line ? current_line : static_cast<std::uint32_t>(lineno);

        switch (info->kind) {
        case OperandKind::none:
            if (tokens.size() != 1)
                throw ParseError(std::string(head.text) + " takes no operand",
                                 lineno, tokens[1].column);
            break;
        case OperandKind::integer:
        case OperandKind::target: {
            if (tokens.size() != 2 || !parse_int64(tokens[1].text, ins.operand))
                throw ParseError(std::string(head.text) + " expects an integer operand",
                                 lineno, head.column);
            if (info->non_negative && ins.operand < 0)
                throw ParseError(std::string(head.text) + " operand must be non-negative",
                                 lineno, tokens[1].column);
            break;
        }
        case OperandKind::function: {
            if (tokens.size() != 2)
                throw ParseError(std::string(head.text) + " expects a function name",
                                 lineno, head.column);
            ins.symbol = std::string(tokens[1].text);
            pending_calls.push_back({static_cast<std::uint32_t>(prog.functions.size() - 1),
                                     static_cast<std::uint32_t>(current_func->code.size()),
                                     lineno, tokens[1].column});
            break;
        }
        case OperandKind::native: {
            if (tokens.size() != 3)
                throw ParseError("CALL_NATIVE expects a name and a duration",
                                 lineno, head.column);
            ins.symbol = std::string(tokens[1].text);
            double seconds = 0;
            auto sv = tokens[2].text;
            auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), seconds);
            if (ec != std::errc{} || p != sv.data() + sv.size() || seconds < 0 ||
                !std::isfinite(seconds))
                throw ParseError("CALL_NATIVE duration must be non-negative seconds",
                                 lineno, tokens[2].column);
            ins.native_ns = static_cast<std::uint64_t>(std::llround(seconds * 1e9));
            break;
        }
        }
        current_func->code.push_back(std::move(ins));
    }

    // Jump targets are opcode indices within their own function.
    for (const auto& f : prog.functions) {
        for (std::size_t i = 0; i < f.code.size(); ++i) {
            const Instruction& ins = f.code[i];
            if ((ins.op == Opcode::jmp || ins.op == Opcode::jnz) &&
                static_cast<std::uint64_t>(ins.operand) >= f.code.size())
                throw ParseError("jump target " + std::to_string(ins.operand) +
                                     " out of range in '" + f.name + "'",
                                 0, 0);
        }
    }
    for (const auto& pc : pending_calls) {
        Instruction& ins = prog.functions[pc.func].code[pc.index];
        auto target = prog.find_function(ins.symbol);
        if (!target)
            throw ParseError("call to undefined function '" + ins.symbol + "'",
                             pc.src_line, pc.src_col);
        ins.func_target = *target;
    }
    auto entry = prog.find_function("main");
    if (!entry)
        throw ParseError("program has no 'main' function", lineno, 1);
    prog.entry = *entry;
    return prog;
}

std::vector<DisasmRow> disassemble(const Program& program) {
    std::vector<DisasmRow> rows;
    rows.reserve(program.total_opcodes());
    for (const auto& f : program.functions) {
        for (std::uint32_t i = 0; i < f.code.size(); ++i) {
            const Instruction& ins = f.code[i];
            DisasmRow row;
            row.function = f.name;
            row.index = i;
            row.opcode = opcode_name(ins.op);
            switch (op_info(ins.op).kind) {
            case OperandKind::none:
                break;
            case OperandKind::integer:
            case OperandKind::target:
                row.operand = std::to_string(ins.operand);
                break;
            case OperandKind::function:
                row.operand = ins.symbol;
                break;
            case OperandKind::native:
                row.operand = ins.symbol + " " + format_seconds(ins.native_ns);
                break;
            }
            row.line = LineId{program.files[ins.file_idx], ins.line};
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string render_assembly(const std::vector<DisasmRow>& rows) {
    std::string out;
    std::string cur_func;
    std::string cur_file;
    std::uint32_t cur_line = 0;
    for (const auto& row : rows) {
        if (row.function != cur_func) {
            out += ".func " + row.function + "\n";
            cur_func = row.function;
            cur_file.clear();
            cur_line = 0;
        }
        if (row.line.file != cur_file) {
            out += ".file " + row.line.file + "\n";
            cur_file = row.line.file;
        }
        if (row.line.line != cur_line) {
            out += ".line " + std::to_string(row.line.line) + "\n";
            cur_line = row.line.line;
        }
        out += row.opcode;
        if (!row.operand.empty())
            out += " " + row.operand;
        out += "\n";
    }
    return out;
}

std::string render_assembly(const Program& program) {
    return render_assembly(disassemble(program));
}

} // namespace miniprof
