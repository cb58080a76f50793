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

#include "cellsim/hypervisor.hpp"
#include "cellsim/machine.hpp"
#include "support.hpp"

using namespace cellsim;
using testsupport::errc_of;

namespace {

PlatformSpec minimal_spec() {
    PlatformSpec s;
    s.name = "tiny";
    s.resources = {Cpu{0}, MemRegion{0x1000, 0x1000, PermSet{Perm::Read}}};
    return s;
}

// Brute-force oracle: any two address ranges intersect.
bool any_pair_overlaps(const PlatformSpec& s) {
    for (std::size_t i = 0; i < s.resources.size(); ++i) {
        if (!is_address_range(s.resources[i])) continue;
        for (std::size_t j = i + 1; j < s.resources.size(); ++j) {
            if (!is_address_range(s.resources[j])) continue;
            auto a = addr_range(s.resources[i]), b = addr_range(s.resources[j]);
            if (std::max(a.base, b.base) < std::min(a.end(), b.end())) return true;
        }
    }
    return false;
}

}  // namespace

TEST_CASE("jetson-tk1 preset") {
    MachinePlatform p = platform_preset("jetson-tk1");
    CHECK(p.name() == "jetson-tk1");
    CHECK(p.gic_version() == GicVersion::V2);
    CHECK(p.cpu_count() == 4);
    CHECK_FALSE(p.has_pci());

    std::uint64_t ram = 0;
    for (const Resource& r : p.resources())
        if (const auto* m = std::get_if<MemRegion>(&r)) {
            CHECK(m->base >= 0x8000'0000);
            CHECK(m->end() <= 0x1'0000'0000);
            ram += m->size;
        }
    CHECK(ram == 0x8000'0000);  // 2 GiB from 0x8000_0000

    const Resource* gpio = p.find_containing(0x6000'd000, 0x1000);
    REQUIRE(gpio);
    CHECK(std::get<MmioDevice>(*gpio).name == "gpio");
    for (std::uint32_t n = 32; n <= 160; ++n) CHECK(p.contains(key_of(IrqLine{n})));
    CHECK_FALSE(p.contains(key_of(IrqLine{31})));
    CHECK_FALSE(p.contains(key_of(IrqLine{161})));
    REQUIRE(p.gic_distributor());
    CHECK(p.gic_distributor()->size == 0x1000);
}

TEST_CASE("minimal platform") {
    MachinePlatform p = build_platform(minimal_spec());
    CHECK(p.cpu_count() == 1);
    CHECK(p.resources().size() == 2);
    CHECK_FALSE(p.gic_distributor());
}

TEST_CASE("overlapping RAM regions are rejected") {
    PlatformSpec s = minimal_spec();
    s.resources = {Cpu{0}, MemRegion{0x1000, 0x2000, {}}, MemRegion{0x2000, 0x2000, {}}};
    CHECK_ERRC(build_platform(s), Errc::Overlap);
    s.resources = {Cpu{0}, MemRegion{0x1000, 0x1000, {}}, MemRegion{0x2000, 0x2000, {}}};  // touching is fine
    CHECK_NOTHROW(build_platform(s));
    s.resources = {Cpu{0}, MemRegion{0x1000, 0x2000, {}}, MmioDevice{"uart", 0x2000, 0x1000}};
    CHECK_ERRC(build_platform(s), Errc::Overlap);
}

TEST_CASE("overlap detection agrees with pairwise oracle") {
    Rng rng(11);
    int overlaps = 0;
    for (int iter = 0; iter < 2000; ++iter) {
        PlatformSpec s;
        s.name = "p";
        s.resources.push_back(Cpu{0});
        for (std::uint64_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
            std::uint64_t base = rng.below(32) * kPageSize, size = (1 + rng.below(6)) * kPageSize;
            if (rng.below(3) == 0)
                s.resources.push_back(MmioDevice{"d" + std::to_string(i), base, size});
            else
                s.resources.push_back(MemRegion{base, size, {}});
        }
        const bool expect = any_pair_overlaps(s);
        overlaps += expect;
        auto got = errc_of([&] { build_platform(s); });
        CHECK(got == (expect ? std::optional{Errc::Overlap} : std::nullopt));
    }
    CHECK(overlaps > 100);
}

TEST_CASE("platform guards") {
    PlatformSpec s = minimal_spec();
    s.resources = {MemRegion{0x1000, 0x1000, {}}};
    CHECK_ERRC(build_platform(s), Errc::EmptyCpuSet);

    s = minimal_spec();
    s.resources.push_back(IrqLine{40});
    s.resources.push_back(IrqLine{40});
    CHECK_ERRC(build_platform(s), Errc::DuplicateIrq);

    s = minimal_spec();
    s.resources.push_back(Cpu{2});
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);  // not contiguous

    s = minimal_spec();
    s.resources.push_back(MemRegion{0x3000, 0x800, {}});
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);  // not page aligned

    s = minimal_spec();
    s.resources.push_back(MemRegion{0xffff'ffff'ffff'f000, 0x2000, {}});
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);  // wraps

    s = minimal_spec();
    s.resources.push_back(IoPortRange{0xfff0, 0x20});
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);  // past 64 KiB
    s = minimal_spec();
    s.resources.push_back(IoPortRange{0xfff0, 0x10});
    CHECK_NOTHROW(build_platform(s));
    s.resources.push_back(IoPortRange{0x10, 0});
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);

    s = minimal_spec();
    s.resources.push_back(IoPortRange{0x10, 0x10});
    s.resources.push_back(IoPortRange{0x18, 0x10});
    CHECK_ERRC(build_platform(s), Errc::Overlap);

    s = minimal_spec();
    s.bus.contention_prob = 1.5;
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);
    s.bus.contention_prob = 0.1;
    s.bus.base_latency_us = 0;
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);
    s.bus.base_latency_us = 0.45;
    s.bus.hv_overhead.mu_log = std::numeric_limits<double>::infinity();
    CHECK_ERRC(build_platform(s), Errc::InvalidArgument);
}

TEST_CASE("random platforms: intervals pairwise disjoint, build deterministic") {
    Rng rng(3);
    for (int i = 0; i < 300; ++i) {
        PlatformSpec s = testsupport::random_platform_spec(rng);
        MachinePlatform a = build_platform(s), b = build_platform(s);
        CHECK(a == b);
        std::vector<AddrRange> rs;
        for (const Resource& r : a.resources())
            if (is_address_range(r)) rs.push_back(addr_range(r));
        std::sort(rs.begin(), rs.end(), [](auto& x, auto& y) { return x.base < y.base; });
        for (std::size_t k = 1; k < rs.size(); ++k) CHECK(rs[k - 1].end() <= rs[k].base);
    }
}

TEST_CASE("platform text round trip") {
    MachinePlatform p = platform_preset("jetson-tk1");
    const std::string text = to_text(p);
    MachinePlatform q = build_platform(parse_platform_spec(text));
    CHECK(p == q);
    CHECK(to_text(q) == text);

    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        MachinePlatform r = build_platform(testsupport::random_platform_spec(rng));
        CHECK(build_platform(parse_platform_spec(to_text(r))) == r);
    }
}

TEST_CASE("platform text errors") {
    CHECK_ERRC(parse_platform_spec("platform \"x\"\nfrob 1\n"), Errc::Syntax);
    CHECK_ERRC(parse_platform_spec("platform \"x\"\ncpu 0\nmem 0x1000 zz rw\n"), Errc::Syntax);
    try {
        parse_platform_spec("platform \"x\"\ncpu 0\n  gic v9\n");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line() == 3);
        CHECK(e.col() >= 3);
    }
    CHECK_ERRC(platform_preset("no-such-board"), Errc::InvalidArgument);
}

TEST_CASE("bus_load follows declared workloads") {
    MachinePlatform p = platform_preset("jetson-tk1");
    Hypervisor hv(p);
    CellConfig root = testsupport::whole_platform_config(p);
    hv.enable(root);

    CellConfig rt = parse_config("cell \"rtos\"\ncpu 3\nmem 0x90000000 0x100000 rw\nirq 160\nrun latency-responder\n");
    CellId measured = hv.create_cell(rt);
    hv.start_cell(measured);
    SUBCASE("only the measured cell and an idle root") { CHECK_FALSE(bus_load(hv, measured).stressed); }
    SUBCASE("two idle neighbours") {
        hv.start_cell(hv.create_cell(parse_config("cell \"a\"\ncpu 1\nmem 0x90100000 0x100000 rw\n")));
        CHECK_FALSE(bus_load(hv, measured).stressed);
    }
    SUBCASE("stress neighbour counts only while running") {
        CellId s = hv.create_cell(parse_config("cell \"s\"\ncpu 1\nmem 0x90100000 0x100000 rw\nrun stress\n"));
        CHECK_FALSE(bus_load(hv, measured).stressed);
        hv.start_cell(s);
        CHECK(bus_load(hv, measured).stressed);
        CHECK_FALSE(bus_load(hv, s).stressed);  // the measured cell itself does not count
        hv.stop_cell(s);
        CHECK_FALSE(bus_load(hv, measured).stressed);
    }
    SUBCASE("root cell declaring stress") {
        Hypervisor hv2(p);
        root.workload.kind = WorkloadKind::Stress;
        hv2.enable(root);
        CellId m = hv2.create_cell(rt);
        hv2.start_cell(m);
        CHECK(bus_load(hv2, m).stressed);
    }
}
