#include "doctest.h"

#include <unistd.h>

#include <fstream>
#include <random>

#include "miniprof/event_channel.hpp"

using namespace miniprof;

namespace {

std::filesystem::path temp_file(const char* tag) {
    return std::filesystem::temp_directory_path() /
           (std::string(tag) + "-" + std::to_string(::getpid()));
}

Record sample_record() {
    Record r;
    r.seq = 42;
    r.kind = RecordKind::alloc_malloc;
    r.bytes = 1'048'583;
    r.python_fraction = 0.4375;
    r.footprint = 1234567890123ull;
    r.line = LineId{"app.asm", 17};
    return r;
}

} // namespace

TEST_CASE("records encode to one tab separated line and decode back") {
    Record r = sample_record();
    std::string text = encode_record(r);
    CHECK(text == "42\tmalloc\t1048583\t0.437500\t1234567890123\tapp.asm\t17");
    auto back = decode_record(text);
    REQUIRE(back.has_value());
    CHECK(*back == r);

    r.kind = RecordKind::alloc_free;
    CHECK(decode_record(encode_record(r)) == r);
    r.kind = RecordKind::copy;
    r.python_fraction = 0.0;
    CHECK(decode_record(encode_record(r)) == r);
}

TEST_CASE("random records survive the round-trip exactly") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        Record r;
        r.seq = rng();
        r.kind = static_cast<RecordKind>(rng() % 3);
        r.bytes = rng() % (1ull << 40);
        // fractions are always emitted from ratios at six digits; use
        // representable values
        r.python_fraction = static_cast<double>(rng() % 1'000'000) / 1e6;
        r.footprint = rng() % (1ull << 50);
        r.line = LineId{"f" + std::to_string(rng() % 10) + ".asm",
                        static_cast<std::uint32_t>(rng() % 100'000)};
        auto back = decode_record(encode_record(r));
        REQUIRE(back.has_value());
        CHECK(*back == r);
    }
}

TEST_CASE("malformed lines are rejected") {
    CHECK_FALSE(decode_record("").has_value());
    CHECK_FALSE(decode_record("1\tmalloc\t5").has_value());
    CHECK_FALSE(decode_record("x\tmalloc\t5\t0.0\t9\tf\t1").has_value());
    CHECK_FALSE(decode_record("1\tweird\t5\t0.0\t9\tf\t1").has_value());
    CHECK_FALSE(decode_record("1\tmalloc\t5\tnope\t9\tf\t1").has_value());
    CHECK_FALSE(decode_record("1\tmalloc\t5\t0.0\t9\tf\t1\textra").has_value());
}

TEST_CASE("the channel stamps sequence numbers and drains exactly once") {
    auto path = temp_file("chan-basic");
    Channel ch(path, true);
    Record r = sample_record();
    CHECK(ch.append(r) == 1);
    CHECK(ch.append(r) == 2);
    CHECK(ch.append(r) == 3);

    auto got = ch.drain();
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].seq == i + 1);

    CHECK(ch.drain().empty()); // drained means gone

    // sequence numbering continues across drains
    CHECK(ch.append(r) == 4);
    auto more = ch.drain();
    REQUIRE(more.size() == 1);
    CHECK(more[0].seq == 4);
    CHECK(ch.decode_errors() == 0);
}

TEST_CASE("garbage interleaved in the file is skipped and counted") {
    auto path = temp_file("chan-garbage");
    {
        Channel ch(path, false);
        ch.append(sample_record());
    }
    {
        std::ofstream f(path, std::ios::app);
        f << "not a record at all\n";
    }
    {
        Channel ch(path, true);
        ch.append(sample_record());
        auto got = ch.drain();
        CHECK(got.size() == 2);
        CHECK(ch.decode_errors() == 1);
    }
}

TEST_CASE("the backing file is removed on close only when asked") {
    auto keep = temp_file("chan-keep");
    auto drop = temp_file("chan-drop");
    {
        Channel ch(keep, false);
        ch.append(sample_record());
    }
    CHECK(std::filesystem::exists(keep));
    std::filesystem::remove(keep);
    {
        Channel ch(drop, true);
        ch.append(sample_record());
    }
    CHECK_FALSE(std::filesystem::exists(drop));
}

TEST_CASE("the default channel path is keyed by process id") {
    auto p = Channel::default_path().string();
    CHECK(p.find(std::to_string(::getpid())) != std::string::npos);
    CHECK(p.find("miniprof-") != std::string::npos);
}

TEST_CASE("kind names match the wire format") {
    CHECK(std::string(record_kind_name(RecordKind::alloc_malloc)) == "malloc");
    CHECK(std::string(record_kind_name(RecordKind::alloc_free)) == "free");
    CHECK(std::string(record_kind_name(RecordKind::copy)) == "copy");
}
