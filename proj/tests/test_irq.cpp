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

#include <cmath>
#include <random>

#include "cellsim/bench.hpp"
#include "cellsim/irq.hpp"
#include "support.hpp"

using namespace cellsim;

namespace {

struct Board {
    MachinePlatform platform = platform_preset("jetson-tk1");
    Hypervisor hv{platform};
    CellId rt = 0;
    explicit Board(bool vmm = true) {
        if (!vmm) return;
        hv.enable(testsupport::whole_platform_config(platform, "linux"));
        rt = hv.create_cell(parse_config("cell \"rtos\"\ncpu 2,3\nmem 0x90000000 0x100000 rw\nirq 160\n"));
        hv.start_cell(rt);
    }
};

BusModel no_jitter() {
    BusModel b;
    b.phase_jitter = false;
    return b;
}

struct Moments {
    double mean = 0, sigma = 0, max = 0;
};

template <class F>
Moments moments(std::size_t n, F&& draw) {
    long double s = 0, s2 = 0;
    double mx = -1;
    for (std::size_t i = 0; i < n; ++i) {
        double x = draw();
        s += x;
        s2 += static_cast<long double>(x) * x;
        mx = std::max(mx, x);
    }
    const long double m = s / n;
    return {static_cast<double>(m), static_cast<double>(std::sqrt(s2 / n - m * m)), mx};
}

// Independent reference: the same model written against <random>'s own
// distributions on a different engine, quantized by rounding.
Moments reference(bool stressed, std::size_t n, unsigned seed) {
    std::mt19937 eng(seed);
    std::lognormal_distribution<double> h(-2.3, 0.6), c(-0.08, 0.40);
    std::bernoulli_distribution gate(0.10);
    return moments(n, [&] {
        double t = 0.45 + 0.70 + h(eng);
        if (stressed && gate(eng)) t += c(eng);
        return std::round(t * 16.0) / 16.0;
    });
}

}  // namespace

TEST_CASE("quantize_62_5ns") {
    CHECK(quantize_62_5ns(0.0) == 0.0);
    CHECK(quantize_62_5ns(0.45) == 0.4375);  // 7.2 ticks -> 7
    CHECK(quantize_62_5ns(0.5) == 0.5);
    CHECK(quantize_62_5ns(0.46875) == 0.5);  // 7.5 ticks, tie rounds up
    CHECK(quantize_62_5ns(0.03125) == 0.0625);  // tie rounds up
    CHECK(quantize_62_5ns(0.09375) == 0.125);   // tie rounds up
    CHECK(quantize_62_5ns(0.0312) == 0.0);
    Rng rng(4);
    for (int i = 0; i < 10000; ++i) {
        double t = rng.uniform(0, 20);
        double q = quantize_62_5ns(t);
        CHECK(std::fmod(q, 0.0625) == 0.0);
        CHECK(std::abs(q - t) <= 0.03125);
    }
}

TEST_CASE("sample_latency degenerate and bare-metal cases") {
    Rng rng(1);
    // Jitter off: the base latency snapped to the capture lattice.
    for (int i = 0; i < 100; ++i) CHECK(sample_latency({false, false}, no_jitter(), rng) == 0.4375);
    // Bare metal ignores the stress flag.
    CHECK(sample_latency({false, true}, no_jitter(), rng) == 0.4375);

    BusModel fixed;
    fixed.base_latency_us = 0.5;
    fixed.hv_overhead = {0.75, false, 0, 0};
    fixed.contention = {0.25, false, 0, 0};
    fixed.contention_prob = 1.0;
    CHECK(sample_latency({true, false}, fixed, rng) == 1.25);
    CHECK(sample_latency({true, true}, fixed, rng) == 1.5);
    fixed.contention_prob = 0.0;
    CHECK(sample_latency({true, true}, fixed, rng) == 1.25);

    BusModel shifts = no_jitter();
    shifts.hv_overhead.lognormal = false;
    CHECK(sample_latency({true, false}, shifts, rng) == quantize_62_5ns(0.45 + 0.70));
}

TEST_CASE("bare metal with jitter averages 0.45") {
    Rng rng(7);
    BusModel bus;
    Moments m = moments(200000, [&] { return sample_latency({false, false}, bus, rng); });
    CHECK(m.mean == doctest::Approx(0.45).epsilon(0.005));
    CHECK(m.sigma == doctest::Approx(0.025).epsilon(0.1));
    CHECK(m.max == 0.5);
}

TEST_CASE("calibrated model against an independent Monte Carlo reference") {
    BusModel bus;
    for (bool stressed : {false, true}) {
        Rng rng(stressed ? 11 : 10);
        Moments got = moments(1'000'000, [&] { return sample_latency({true, stressed}, bus, rng); });
        Moments ref = reference(stressed, 1'000'000, 12345);
        CHECK(got.mean == doctest::Approx(ref.mean).epsilon(0.003));
        CHECK(got.sigma == doctest::Approx(ref.sigma).epsilon(0.02));
    }
    // Analytic first moment of the unstressed path: base + shift + exp(mu + s^2/2).
    Rng rng(3);
    Moments m = moments(1'000'000, [&] { return sample_latency({true, false}, bus, rng); });
    CHECK(m.mean == doctest::Approx(0.45 + 0.70 + std::exp(-2.3 + 0.18)).epsilon(0.003));
}

TEST_CASE("calibration examples") {
    BusModel bus;
    Rng rng(1);
    Moments on = moments(100000, [&] { return sample_latency({true, false}, bus, rng); });
    CHECK(std::abs(on.mean - 1.26) <= 0.05 * 1.26);
    Rng rng2(1);
    Moments st = moments(1'000'000, [&] { return sample_latency({true, true}, bus, rng2); });
    CHECK(std::abs(st.sigma - 0.34) <= 0.15 * 0.34);
}

TEST_CASE("raise_irq bare metal") {
    PlatformSpec spec = jetson_tk1_spec();
    spec.bus.phase_jitter = false;
    Hypervisor hv(build_platform(spec));
    Rng rng(1);
    IrqDelivery d = raise_irq(hv, 160, 1000, rng);
    CHECK(d.path == IrqPath::BareMetal);
    CHECK(d.latency_us == 0.4375);
    CHECK(d.delivered_at - d.raised_at == 438);  // 437.5 ns rounded half up
    CHECK(hv.events().empty());
    CHECK_ERRC(raise_irq(hv, 7, 2000, rng), Errc::NoSuchLine);
}

TEST_CASE("raise_irq reinjection") {
    Board b;
    Rng rng(2);
    IrqDelivery d = raise_irq(b.hv, 160, 10'000, rng);
    CHECK(d.path == IrqPath::Reinjected);
    CHECK(d.owner == b.rt);
    CHECK(d.delivered_at >= d.raised_at);
    CHECK(quantize_62_5ns(static_cast<double>(d.delivered_at - d.raised_at) / 1000.0) == d.latency_us);
    const TrapEvent& e = b.hv.events().back();
    CHECK(e.cause == CauseKind::IrqReinjection);
    CHECK(e.time_ns == d.raised_at);
    CHECK(e.value == 160);
    CHECK(e.cell == b.rt);

    // Lines left with the root cell reinject to root.
    CHECK(raise_irq(b.hv, 40, 20'000, rng).owner == kRootCell);
    CHECK_ERRC(raise_irq(b.hv, 161, 30'000, rng), Errc::NoSuchLine);
}

TEST_CASE("raise_irq to a dead receiver") {
    Board b;
    b.hv.handle_access(b.rt, Access::mem_write(0x8000'0000));  // fail the cell
    REQUIRE(b.hv.cell(b.rt).state == CellState::Failed);
    Rng rng(3);
    const std::size_t before = b.hv.events().size();
    CHECK_ERRC(raise_irq(b.hv, 160, 1000, rng), Errc::UnownedIrq);
    REQUIRE(b.hv.events().size() == before + 1);
    CHECK(b.hv.events().back().cause == CauseKind::AccessViolation);
    CHECK(b.hv.events().back().detail == "spurious irq 160");

    b.hv.stop_cell(b.rt);
    CHECK_ERRC(raise_irq(b.hv, 160, 2000, rng), Errc::UnownedIrq);
}

TEST_CASE("every reinjected delivery has a matching event") {
    Board b;
    Rng rng(9);
    std::vector<IrqDelivery> ds;
    for (std::uint64_t k = 1; k <= 500; ++k) ds.push_back(raise_irq(b.hv, 160, k * 20'000'000, rng));
    std::vector<const TrapEvent*> ev;
    for (const TrapEvent& e : b.hv.events())
        if (e.cause == CauseKind::IrqReinjection) ev.push_back(&e);
    REQUIRE(ev.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ev[i]->time_ns == ds[i].raised_at);
        CHECK(ev[i]->value == ds[i].line);
    }
}

TEST_CASE("distributor_access") {
    Board b;
    CHECK(distributor_access(b.hv, b.rt, 0x100) == AccessOutcome::Emulated);
    CHECK(distributor_count(b.hv, b.rt) == 1);
    CHECK(b.hv.events().back().cause == CauseKind::DistributorEmulation);
    CHECK(b.hv.events().back().value == 0x100);

    for (int i = 0; i < 9999; ++i) distributor_access(b.hv, b.rt, static_cast<std::uint32_t>((i * 4) % 0x1000));
    CHECK(distributor_count(b.hv, b.rt) == 10000);
    CHECK(b.hv.cell(b.rt).state == CellState::Running);

    // Past the 4 KiB window the write lands on gic-cpu, which the cell does not own.
    CHECK(distributor_access(b.hv, b.rt, 0x1000) == AccessOutcome::Violation);
    CHECK(b.hv.cell(b.rt).state == CellState::Failed);
    CHECK_ERRC(distributor_access(b.hv, b.rt, 0x100), Errc::BadState);
}

TEST_CASE("distributor window containment oracle") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        Board b;
        const std::uint32_t off = static_cast<std::uint32_t>(rng.below(0x4000)) & ~3u;
        const bool inside = off + 4 <= 0x1000;
        CHECK((distributor_access(b.hv, b.rt, off) == AccessOutcome::Emulated) == inside);
    }
}

TEST_CASE("frequency does not change latency draws") {
    MachinePlatform p = platform_preset("jetson-tk1");
    for (bool stress : {false, true}) {
        Scenario a{true, 10.0, stress, 20000, 5}, b{true, 50.0, stress, 20000, 5};
        auto ra = run_scenario(p, a), rb = run_scenario(p, b);
        REQUIRE(ra.deliveries.size() == rb.deliveries.size());
        for (std::size_t i = 0; i < ra.deliveries.size(); ++i) CHECK(ra.deliveries[i].latency_us == rb.deliveries[i].latency_us);
        CHECK(ra.deliveries[1].raised_at - ra.deliveries[0].raised_at == 100'000'000);
        CHECK(rb.deliveries[1].raised_at - rb.deliveries[0].raised_at == 20'000'000);
    }
}

TEST_CASE("ordering and determinism at 1e5 samples") {
    MachinePlatform p = platform_preset("jetson-tk1");
    auto off = run_scenario(p, {false, 10, false, 100000, 7}).stats;
    auto on = run_scenario(p, {true, 10, false, 100000, 7}).stats;
    auto st = run_scenario(p, {true, 10, true, 100000, 7}).stats;
    CHECK(st.mean_us > on.mean_us);
    CHECK(on.mean_us > off.mean_us);
    CHECK(run_scenario(p, {true, 10, true, 100000, 7}).stats == st);
    CHECK_FALSE(run_scenario(p, {true, 10, true, 100000, 8}).stats == st);
}

TEST_CASE("stream seeds") {
    CHECK(Rng::stream_seed(7, 0) != Rng::stream_seed(7, 1));
    CHECK(Rng::stream_seed(7, 3) == Rng::stream_seed(7, 3));
    CHECK((Rng::stream_seed(7, 3) ^ Rng::stream_seed(8, 3)) == (7u ^ 8u));
    // mt19937_64's 10000th output is fixed by the C++ standard.
    Rng r(5489);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = r.next_u64();
    CHECK(x == 9981545732273789042ULL);
}

TEST_CASE("scenario validation") {
    MachinePlatform p = platform_preset("jetson-tk1");
    CHECK_ERRC(run_scenario(p, {true, 0.0, false, 10, 1}), Errc::InvalidArgument);
    CHECK_ERRC(run_scenario(p, {true, 10.0, false, 0, 1}), Errc::InvalidArgument);
}
