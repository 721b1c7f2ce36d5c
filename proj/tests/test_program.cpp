#include "doctest.h"

#include <random>
#include <sstream>

#include "miniprof/program.hpp"

using namespace miniprof;

namespace {

const char* kSmall = R"(# tiny two-function program
.func helper
.line 20
    PUSH 1
    RET

.func main
.line 1
    PUSH 2
.line 2
    CALL helper
    HALT
)";

} // namespace

TEST_CASE("parses functions opcodes and entry") {
    Program p = parse_program(kSmall);
    REQUIRE(p.functions.size() == 2);
    CHECK(p.functions[0].name == "helper");
    CHECK(p.functions[1].name == "main");
    CHECK(p.entry == 1);
    REQUIRE(p.functions[1].code.size() == 3);
    CHECK(p.functions[1].code[0].op == Opcode::push);
    CHECK(p.functions[1].code[0].operand == 2);
    CHECK(p.functions[1].code[1].op == Opcode::call);
    CHECK(p.functions[1].code[1].func_target == 0);
    CHECK(p.functions[1].code[2].op == Opcode::halt);
}

TEST_CASE("line directives are sticky and implicit lines use the source line") {
    Program p = parse_program(kSmall);
    // helper: .line 20 covers both opcodes
    CHECK(p.line_of(0, 0).line == 20);
    CHECK(p.line_of(0, 1).line == 20);
    // main: CALL sits on .line 2, HALT inherits it
    CHECK(p.line_of(1, 1).line == 2);
    CHECK(p.line_of(1, 2).line == 2);

    Program q = parse_program(".func main\nPUSH 1\nHALT\n", "f.asm");
    CHECK(q.line_of(0, 0).line == 2); // physical source line
    CHECK(q.line_of(0, 1).line == 3);
    CHECK(q.line_of(0, 0).file == "f.asm");
}

TEST_CASE("file directive switches attribution files") {
    Program p = parse_program(
        ".func main\n.file lib.asm\n.line 5\nPUSH 1\n.file app.asm\n.line 9\nHALT\n");
    CHECK(p.line_of(0, 0) == LineId{"lib.asm", 5});
    CHECK(p.line_of(0, 1) == LineId{"app.asm", 9});
}

TEST_CASE("line_of out of range maps to the unknown bucket") {
    Program p = parse_program(kSmall);
    CHECK(p.line_of(7, 0) == unknown_line());
    CHECK(p.line_of(0, 99) == unknown_line());
}

TEST_CASE("native call durations parse as nanoseconds") {
    Program p = parse_program(".func main\nCALL_NATIVE blit 0.25\nHALT\n");
    CHECK(p.functions[0].code[0].op == Opcode::call_native);
    CHECK(p.functions[0].code[0].symbol == "blit");
    CHECK(p.functions[0].code[0].native_ns == 250'000'000);
}

TEST_CASE("parse errors carry position and reason") {
    auto fails = [](const char* text, const char* needle) {
        try {
            parse_program(text);
            FAIL_CHECK("expected ParseError for: " << text);
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    fails("PUSH 1\n", "before any .func");
    fails(".func main\nFROB\n", "unknown opcode");
    fails(".func a\n.func a\n", "duplicate function");
    fails(".func main\nJMP 5\nHALT\n", "jump target");
    fails(".func main\nPUSH\n", "integer operand");
    fails(".func main\nPUSH 1 2\n", "integer operand");
    fails(".func main\nALLOC -3\n", "non-negative");
    fails(".func main\nCALL ghost\nHALT\n", "undefined function");
    fails(".func main\n.line 0\nHALT\n", "positive integer");
    fails(".func main\n.wat\nHALT\n", "unknown directive");
    fails(".func helper\nRET\n", "main");
    fails(".func main\nHALT extra\n", "takes no operand");
}

TEST_CASE("disassembly and rendering round-trip structurally") {
    const char* text =
        ".func worker\n.line 4\nPUSH 10\nPUSH -1\nADD\nJNZ 1\nRET\n"
        ".func main\n.file app.asm\n.line 1\nSPAWN worker\nALLOC 64\nFREE\n"
        "COPY 128\nCALL_NATIVE io 0.125\nJOIN 1\nHALT\n";
    Program p = parse_program(text);
    std::string rendered = render_assembly(p);
    Program again = parse_program(rendered);
    CHECK(p == again);
    // and rendering is a fixed point after one round
    CHECK(render_assembly(again) == rendered);
}

TEST_CASE("random programs survive the render/parse round-trip") {
    std::mt19937_64 rng(20260814);
    auto pick = [&](int lo, int hi) {
        return static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)) + lo;
    };
    for (int iter = 0; iter < 100; ++iter) {
        std::ostringstream text;
        int nfuncs = pick(1, 4);
        std::vector<std::string> names;
        for (int f = 0; f < nfuncs - 1; ++f) names.push_back("fn" + std::to_string(f));
        names.push_back("main");
        for (int f = 0; f < nfuncs; ++f) {
            text << ".func " << names[f] << "\n";
            int body = pick(1, 8);
            for (int i = 0; i < body; ++i) {
                if (pick(0, 3) == 0) text << ".line " << pick(1, 500) << "\n";
                switch (pick(0, 7)) {
                case 0: text << "PUSH " << pick(-100, 100) << "\n"; break;
                case 1: text << "POP\n"; break;
                case 2: text << "ADD\n"; break;
                case 3: text << "JNZ " << pick(0, body) << "\n"; break;
                case 4: text << "ALLOC " << pick(0, 4096) << "\n"; break;
                case 5: text << "COPY " << pick(0, 4096) << "\n"; break;
                case 6:
                    text << "CALL_NATIVE sym" << pick(0, 3) << " 0." << pick(1, 9)
                         << "\n";
                    break;
                default: text << "CALL " << names[static_cast<std::size_t>(
                                  pick(0, nfuncs - 1))] << "\n";
                }
            }
            text << (f == nfuncs - 1 ? "HALT\n" : "RET\n");
        }
        Program p = parse_program(text.str());
        Program q = parse_program(render_assembly(p));
        CHECK(p == q);
    }
}

TEST_CASE("opcode names match their mnemonics") {
    CHECK(opcode_name(Opcode::push) == "PUSH");
    CHECK(opcode_name(Opcode::call_native) == "CALL_NATIVE");
    CHECK(opcode_name(Opcode::jnz) == "JNZ");
    CHECK(opcode_name(Opcode::free_obj) == "FREE");
}

TEST_CASE("total_opcodes counts every instruction") {
    Program p = parse_program(kSmall);
    CHECK(p.total_opcodes() == 5);
}
