/*
 * Copyright 2026 The cellsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cstring>

#include "cellsim/cellconfig.hpp"
#include "cellsim/hypervisor.hpp"
#include "support.hpp"

using namespace cellsim;

namespace {

std::uint32_t rd32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return b[at] | b[at + 1] << 8 | b[at + 2] << 16 | static_cast<std::uint32_t>(b[at + 3]) << 24;
}
std::uint16_t rd16(const std::vector<std::uint8_t>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}
std::uint64_t rd64(const std::vector<std::uint8_t>& b, std::size_t at) {
    return rd32(b, at) | static_cast<std::uint64_t>(rd32(b, at + 4)) << 32;
}

}  // namespace

TEST_CASE("parse: rtos example") {
    CellConfig c = parse_config("cell \"rtos\"\ncpu 2,3\nmem 0x90000000 0x100000 rw\n");
    CHECK(c.name == "rtos");
    CHECK(c.cpus == std::set<std::uint32_t>{2, 3});
    REQUIRE(c.mem.size() == 1);
    CHECK(c.mem[0] == MemRegion{0x9000'0000, 0x10'0000, PermSet{Perm::Read, Perm::Write}});
    CHECK(c.workload.kind == WorkloadKind::Idle);
}

TEST_CASE("parse: minimum resources") {
    CHECK_ERRC(parse_config("cell \"x\"\nmem 0x1000 0x1000 r\n"), Errc::Semantic);
    CHECK_ERRC(parse_config("cell \"x\"\ncpu 0\n"), Errc::Semantic);
    CHECK_ERRC(parse_config("cpu 0\nmem 0x1000 0x1000 r\n"), Errc::Semantic);
}

TEST_CASE("parse: every directive equals the hand-built structure") {
    const char* text = R"(# full sample
cell "ctrl_1"          # trailing comment
cpu 0-1,3
mem 0x91000000 0x2000 rx
mem 0x90000000 0x100000 rwd
mmio gpio 0x6000d000 0x1000
pci 0x00a8
ioport 0x3f8 0x8
irq 32,40-42
comm peer=linux size=0x4000 vectors=2
run script "wl/fly.wl"
)";
    CellConfig want;
    want.name = "ctrl_1";
    want.cpus = {0, 1, 3};
    want.mem = {MemRegion{0x9000'0000, 0x10'0000, PermSet{Perm::Read, Perm::Write, Perm::Dma}},
                MemRegion{0x9100'0000, 0x2000, PermSet{Perm::Read, Perm::Execute}}};
    want.devices = {MmioDevice{"gpio", 0x6000'd000, 0x1000}, PciDevice{0xa8}, IoPortRange{0x3f8, 8}};
    want.irqs = {32, 40, 41, 42};
    want.comm = {CommDecl{"linux", 0x4000, 2}};
    want.workload = {WorkloadKind::Script, "wl/fly.wl"};

    CellConfig got = parse_config(text);
    CHECK(got.name == want.name);
    CHECK(got.cpus == want.cpus);
    CHECK(got.mem == want.mem);  // sorted by base
    CHECK(got.devices == want.devices);
    CHECK(got.irqs == want.irqs);
    CHECK(got.comm == want.comm);
    CHECK(got.workload == want.workload);
    CHECK(got == want);
    CHECK(parse_config(to_text(got)) == got);
}

TEST_CASE("parse: syntax errors carry line and column") {
    auto where = [](const char* text) -> std::pair<int, int> {
        try {
            parse_config(text);
        } catch (const SyntaxError& e) {
            return {e.line(), e.col()};
        }
        return {0, 0};
    };
    CHECK(where("cell \"x\"\ncpu 0\nmem 0x1000 0x1000 rq\n") == std::pair{3, 19});
    CHECK(where("cell \"x\"\n  bogus 1\n") == std::pair{2, 3});
    CHECK(where("cell \"x\"\ncpu 0\ncpu\n").first == 3);
    CHECK(where("cell \"x\ncpu 0\n").first == 1);  // unterminated quote
    CHECK(where("cell \"x\"\ncpu 3-1\n").first == 2);
    CHECK(where("cell \"x\"\ncell \"y\"\n").first == 2);
    CHECK(where("cell \"x\"\ncomm peer=a size=0x1000\n").first == 2);
    CHECK(where("cell \"x\"\nrun dance\n").first == 2);
    CHECK(where("cell \"x\"\npci 0x10000\n").first == 2);
}

TEST_CASE("parse: semantic errors") {
    const std::string base = "cell \"x\"\ncpu 0\nmem 0x1000 0x1000 rw\n";
    CHECK_ERRC(parse_config(base + "mem 0x1800 0x1000 r\n"), Errc::Semantic);      // unaligned
    CHECK_ERRC(parse_config(base + "mem 0x1000 0x1000 r\n"), Errc::Semantic);      // self overlap
    CHECK_ERRC(parse_config(base + "mmio uart 0x1000 0x1000\n"), Errc::Semantic);  // overlaps mem
    CHECK_ERRC(parse_config(base + "mmio bad.name 0x8000 0x1000\n"), Errc::Semantic);
    CHECK_ERRC(parse_config(base + "mmio a_very_long_device_name 0x8000 0x1000\n"), Errc::Semantic);
    CHECK_ERRC(parse_config(base + "ioport 0x10 0x10\nioport 0x18 0x4\n"), Errc::Semantic);
    CHECK_ERRC(parse_config(base + "comm peer=x size=0x1000 vectors=1\n"), Errc::Semantic);  // self
    CHECK_ERRC(parse_config(base + "comm peer=y size=0x1800 vectors=1\n"), Errc::Semantic);
    CHECK_ERRC(parse_config(base + "comm peer=y size=0x1000 vectors=0\n"), Errc::Semantic);
    CHECK_ERRC(parse_config("cell \"has space\"\ncpu 0\nmem 0x1000 0x1000 r\n"), Errc::Semantic);
    CHECK_ERRC(parse_config("cell \"" + std::string(32, 'a') + "\"\ncpu 0\nmem 0x1000 0x1000 r\n"), Errc::Semantic);
    CHECK_NOTHROW(parse_config("cell \"" + std::string(31, 'a') + "\"\ncpu 0\nmem 0x1000 0x1000 r\n"));
}

TEST_CASE("validate_against examples") {
    MachinePlatform p = platform_preset("jetson-tk1");
    Hypervisor hv(p);
    hv.enable(testsupport::whole_platform_config(p));

    CellConfig c2 = parse_config("cell \"a\"\ncpu 2\nmem 0x90000000 0x100000 rw\n");
    CHECK(validate_against(c2, p, hv.ledger()).empty());

    CellConfig c5 = parse_config("cell \"b\"\ncpu 5\nmem 0x90100000 0x100000 rw\n");
    auto v = validate_against(c5, p, hv.ledger());
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::NoSuchResource);
    CHECK(v[0].resource == key_of(Cpu{5}));
    CHECK(v[0].str() == "NoSuchResource(cpu 5)");

    CellId a = hv.create_cell(c2);
    CellConfig steal = parse_config("cell \"c\"\ncpu 1\nmem 0x90000000 0x100000 r\n");
    v = validate_against(steal, p, hv.ledger());
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::NotOwnedByRoot);
    CHECK(v[0].owner == a);
    CHECK(v[0].resource == key_of(MemRegion{0x9000'0000, 0x10'0000, {}}));

    // One violation per offending resource.
    CellConfig many = parse_config("cell \"d\"\ncpu 2,7\nmem 0x90000000 0x100000 r\nirq 161,160\n");
    v = validate_against(many, p, hv.ledger());
    CHECK(v.size() == 4);
}

TEST_CASE("validate_against oracle over random partitions") {
    Rng rng(21);
    for (int iter = 0; iter < 200; ++iter) {
        MachinePlatform p = build_platform(testsupport::random_platform_spec(rng));
        Hypervisor hv(p);
        hv.enable(testsupport::whole_platform_config(p));
        auto parts = testsupport::random_partition(p, rng, 1 + rng.below(3));
        for (const CellConfig& c : parts) {
            std::size_t expected = 0;
            for (const Resource& r : requested_resources(c)) {
                auto o = hv.ledger().owner(key_of(r));
                if (!o || *o != kRootCell) ++expected;
            }
            auto v = validate_against(c, p, hv.ledger());
            CHECK(v.size() == expected);
            // Empty implies create succeeds.
            if (v.empty()) CHECK_NOTHROW(hv.create_cell(c));
        }
    }
}

TEST_CASE("binary layout is bit exact") {
    CellConfig c = parse_config(
        "cell \"rtos\"\ncpu 2,3\nmem 0x90000000 0x100000 rwd\nmmio gpio 0x6000d000 0x1000\n"
        "pci 0x0010\nioport 0x3f8 0x8\nirq 160\ncomm peer=linux size=0x1000 vectors=3\n");
    auto b = emit_binary(c);
    CHECK(rd32(b, 0) == 0x4A484346);
    CHECK(std::memcmp(b.data(), "FCHJ", 4) == 0);  // little-endian "JHCF"
    CHECK(rd16(b, 4) == 1);
    CHECK(rd16(b, 6) == 2);   // cpus
    CHECK(rd16(b, 8) == 1);   // mem
    CHECK(rd16(b, 10) == 3);  // devices
    CHECK(rd16(b, 12) == 1);  // irqs
    CHECK(rd16(b, 14) == 1);  // comm
    CHECK(std::string(reinterpret_cast<const char*>(&b[16])) == "rtos");
    for (std::size_t i = 16 + 4; i < 48; ++i) CHECK(b[i] == 0);
    std::size_t at = 48;
    CHECK(rd32(b, at) == 2);
    CHECK(rd32(b, at + 4) == 3);
    at += 8;
    CHECK(rd64(b, at) == 0x9000'0000);
    CHECK(rd64(b, at + 8) == 0x10'0000);
    CHECK(rd32(b, at + 16) == 0b1011);
    at += 20;
    CHECK(b[at] == 0);  // mmio
    CHECK(std::string(reinterpret_cast<const char*>(&b[at + 1])) == "gpio");
    CHECK(rd64(b, at + 17) == 0x6000'd000);
    CHECK(rd64(b, at + 25) == 0x1000);
    at += 33;
    CHECK(b[at] == 1);  // pci
    CHECK(rd64(b, at + 17) == 0x10);
    at += 33;
    CHECK(b[at] == 2);  // ioport
    CHECK(rd64(b, at + 17) == 0x3f8);
    CHECK(rd64(b, at + 25) == 8);
    at += 33;
    CHECK(rd32(b, at) == 160);
    at += 4;
    CHECK(std::string(reinterpret_cast<const char*>(&b[at])) == "linux");
    CHECK(rd64(b, at + 32) == 0x1000);
    CHECK(rd16(b, at + 40) == 3);
    at += 42;
    // Workload trailer: kind u8, path length u16, path bytes.
    REQUIRE(b.size() == at + 3);
    CHECK(b[at] == 0);
    CHECK(rd16(b, at + 1) == 0);
}

TEST_CASE("binary: minimal config re-emits byte-identical") {
    CellConfig c = parse_config("cell \"m\"\ncpu 0\nmem 0x1000 0x1000 r\n");
    auto b = emit_binary(c);
    CellConfig back = load_binary(b);
    CHECK(back == c);
    CHECK(emit_binary(back) == b);
}

TEST_CASE("binary: malformed input") {
    CellConfig c = parse_config("cell \"m\"\ncpu 0\nmem 0x1000 0x1000 r\nirq 3\n");
    auto good = emit_binary(c);

    auto bad = good;
    std::fill_n(bad.begin(), 4, 0);
    CHECK_ERRC(load_binary(bad), Errc::BadMagic);
    bad = good;
    bad[4] = 2;
    CHECK_ERRC(load_binary(bad), Errc::UnsupportedVersion);
    for (std::size_t n = 0; n < good.size(); ++n) {
        auto got = testsupport::errc_of([&] { load_binary(std::span(good).first(n)); });
        CHECK_MESSAGE(got == Errc::TruncatedRecord, "prefix ", n);
    }
    bad = good;
    bad.push_back(0);
    CHECK_ERRC(load_binary(bad), Errc::InvariantViolation);  // trailing bytes
    bad = good;
    bad[6] = 0;  // cpu_count 0: no CPUs, shifts the rest
    CHECK(testsupport::errc_of([&] { load_binary(bad); }).has_value());
    bad = good;
    bad[60] = 0x55;  // mem size becomes unaligned
    CHECK_ERRC(load_binary(bad), Errc::InvariantViolation);
    bad = good;
    bad[16] = ' ';  // name with a space
    CHECK_ERRC(load_binary(bad), Errc::InvariantViolation);
}

TEST_CASE("binary round trip over randomized configs") {
    Rng rng(1234);
    for (int i = 0; i < 1500; ++i) {
        CellConfig c = testsupport::random_config(rng);
        REQUIRE_NOTHROW(check_config(c));
        auto b = emit_binary(c);
        CellConfig back = load_binary(b);
        CHECK(back == c);
        CHECK(emit_binary(back) == b);
        CHECK(parse_config(to_text(c)) == c);
    }
}

TEST_CASE("emission is canonical regardless of declaration order") {
    CellConfig a = parse_config("cell \"x\"\ncpu 3,1\nmem 0x3000 0x1000 r\nmem 0x1000 0x1000 w\nirq 9,2\n");
    CellConfig b = parse_config("cell \"x\"\ncpu 1\ncpu 3\nmem 0x1000 0x1000 w\nmem 0x3000 0x1000 r\nirq 2,9\n");
    CHECK(emit_binary(a) == emit_binary(b));
}
