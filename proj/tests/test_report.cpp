#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "miniprof/report.hpp"

using namespace miniprof;

namespace {

CpuDelta delta(const char* file, std::uint32_t line, std::uint32_t quanta,
               double native) {
    return CpuDelta{LineId{file, line}, quanta, native};
}

Record record(RecordKind kind, const char* file, std::uint32_t line,
              std::uint64_t bytes, double frac, std::uint64_t footprint) {
    Record r;
    r.kind = kind;
    r.bytes = bytes;
    r.python_fraction = frac;
    r.footprint = footprint;
    r.line = LineId{file, line};
    return r;
}

// the table used for the frozen layout below
ProfileTable golden_table() {
    std::vector<CpuDelta> deltas{
        delta("app.asm", 3, 40, 0.1),
        delta("app.asm", 3, 20, 0.0),
        delta("app.asm", 7, 10, 1.9),
        delta("lib.asm", 2, 30, 0.0),
    };
    std::vector<Record> records{
        record(RecordKind::alloc_malloc, "app.asm", 3, 1'048'583, 0.5, 1'048'583),
        record(RecordKind::alloc_malloc, "app.asm", 3, 1'048'583, 1.0, 2'097'166),
        record(RecordKind::alloc_free, "app.asm", 7, 1'048'583, 0.0, 1'048'583),
        record(RecordKind::copy, "lib.asm", 2, 2'097'166, 0.0, 1'048'583),
    };
    return aggregate(deltas, records);
}

} // namespace

TEST_CASE("cpu deltas accumulate per line and in the totals") {
    ProfileTable t = golden_table();
    const auto& lines = t.lines();
    REQUIRE(lines.count(LineId{"app.asm", 3}) == 1);
    const LineStats& s = lines.at(LineId{"app.asm", 3});
    CHECK(s.python_quanta == 60);
    CHECK(s.cpu_sample_count == 60);
    CHECK(s.native_seconds == doctest::Approx(0.1));
    CHECK(t.total_python_quanta() == 100);
    CHECK(t.total_cpu_samples() == 100);
    CHECK(t.total_native_seconds() == doctest::Approx(2.0));
    CHECK(t.total_python_seconds(0.01) == doctest::Approx(1.0));
}

TEST_CASE("records split into script and native bytes by their fraction") {
    ProfileTable t = golden_table();
    const LineStats& alloc_line = t.lines().at(LineId{"app.asm", 3});
    // 0.5 of one record + all of the second
    CHECK(alloc_line.python_alloc_bytes == 524292 + 1'048'583);
    CHECK(alloc_line.native_alloc_bytes == 1'048'583 - 524292);
    CHECK(alloc_line.net_python_bytes() == 524292 + 1'048'583);

    const LineStats& free_line = t.lines().at(LineId{"app.asm", 7});
    CHECK(free_line.freed_bytes == 1'048'583);
    CHECK(free_line.python_freed_bytes == 0);
    CHECK(free_line.net_native_bytes() == -1'048'583);

    const LineStats& copy_line = t.lines().at(LineId{"lib.asm", 2});
    CHECK(copy_line.copy_bytes == 2'097'166);
    CHECK(t.total_copy_bytes() == 2'097'166);
}

TEST_CASE("heap trends sample alloc and free records but not copies") {
    ProfileTable t = golden_table();
    CHECK(t.lines().at(LineId{"app.asm", 3}).footprint_trend.size() == 2);
    CHECK(t.lines().at(LineId{"app.asm", 7}).footprint_trend.size() == 1);
    CHECK(t.lines().at(LineId{"lib.asm", 2}).footprint_trend.size() == 0);
    CHECK(t.global_trend().size() == 3);
    CHECK(t.peak_footprint_seen() == 2'097'166);
}

TEST_CASE("rows are ordered by file then line with unknown lines bucketed") {
    ProfileTable t;
    t.apply(delta("zeta.asm", 1, 1, 0.0));
    t.apply(delta("alpha.asm", 9, 1, 0.0));
    t.apply(delta("alpha.asm", 2, 1, 0.0));
    CpuDelta u;
    u.line = unknown_line();
    u.python_quanta = 1;
    t.apply(u);
    ReportOptions opt;
    std::string text = render_report(t, opt);
    auto pos = [&](const char* needle) { return text.find(needle); };
    CHECK(pos("(unknown)") != std::string::npos);
    CHECK(pos("(unknown)") < pos("alpha.asm:2"));
    CHECK(pos("alpha.asm:2") < pos("alpha.asm:9"));
    CHECK(pos("alpha.asm:9") < pos("zeta.asm:1"));
}

TEST_CASE("the rendered report matches the frozen golden layout") {
    ReportOptions opt;
    opt.q = 0.01;
    opt.run_seconds = 1.0;
    opt.peak_footprint = 3'145'728;
    std::string text = render_report(golden_table(), opt);

    std::ifstream golden(TEST_DATA_DIR "/report_basic.txt", std::ios::binary);
    REQUIRE(golden.good());
    std::ostringstream want;
    want << golden.rdbuf();
    CHECK(text == want.str());
}

TEST_CASE("an empty table renders the header alone") {
    ProfileTable t;
    ReportOptions opt;
    std::string text = render_report(t, opt);
    CHECK(text.find("Line") != std::string::npos);
    CHECK(text.find("Py%") != std::string::npos);
    // header, trend, units, blank, column header, rule - and nothing after
    int newlines = 0;
    for (char c : text) newlines += c == '\n';
    CHECK(newlines == 6);
}

TEST_CASE("attributed shares sum to at most one hundred percent") {
    ProfileTable t = golden_table();
    ReportOptions opt;
    opt.q = 0.01;
    opt.run_seconds = 3.0;
    std::string text = render_report(t, opt);
    std::istringstream in(text);
    std::string line;
    double total = 0.0;
    // skip past the rule line then parse the share columns
    while (std::getline(in, line) && line.find("-+-") == std::string::npos) {
    }
    while (std::getline(in, line)) {
        std::size_t bar = line.find('|');
        REQUIRE(bar != std::string::npos);
        double py = 0.0, native = 0.0;
        std::sscanf(line.c_str() + bar, "| %lf | %lf", &py, &native);
        total += py + native;
    }
    CHECK(total > 99.0);
    CHECK(total <= 100.01);
}
