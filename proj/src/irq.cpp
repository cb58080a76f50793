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

#include "cellsim/irq.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cellsim/error.hpp"

namespace cellsim {

double quantize_62_5ns(double t_us) {
    // the tick is a power of two, so t/tick and k*tick are exact
    return std::floor(t_us / kCaptureTickUs + 0.5) * kCaptureTickUs;
}

static double draw(const DistParams& d, Rng& rng) {
    double v = d.shift_us;
    if (d.lognormal) v += rng.lognormal(d.mu_log, d.sigma_log);
    return v;
}

double sample_latency(LatencyFlags flags, const BusModel& bus, Rng& rng) {
    double t = bus.base_latency_us;
    if (!flags.vmm_on) {
        if (bus.phase_jitter) t += rng.uniform(-kCaptureTickUs / 2, kCaptureTickUs / 2);
        return quantize_62_5ns(std::max(t, 0.0));
    }
    t += draw(bus.hv_overhead, rng);
    if (flags.stressed && bus.contention_prob > 0.0 && rng.uniform01() < bus.contention_prob) t += draw(bus.contention, rng);
    return quantize_62_5ns(t);
}

static std::uint64_t to_ns(double us) { return static_cast<std::uint64_t>(std::floor(us * 1000.0 + 0.5)); }

IrqDelivery raise_irq(Hypervisor& hv, std::uint32_t line, std::uint64_t t_ns, Rng& rng) {
    const ResourceKey key{ResourceKind::Irq, line, 0};
    if (!hv.platform().contains(key)) throw Error(Errc::NoSuchLine, fmt::format("platform has no irq {}", line));

    IrqDelivery d;
    d.line = line;
    d.raised_at = t_ns;
    if (!hv.enabled()) {
        hv.advance_to(t_ns);
        d.path = IrqPath::BareMetal;
        d.latency_us = sample_latency({false, false}, hv.platform().bus(), rng);
    } else {
        hv.advance_to(t_ns);
        const CellId owner = hv.owner_of(key);
        d.owner = owner;
        if (hv.cell(owner).state != CellState::Running) {
            hv.record(owner, CauseKind::AccessViolation, line, fmt::format("spurious irq {}", line));
            throw Error(Errc::UnownedIrq, fmt::format("irq {} owner cell {} is not Running", line, owner));
        }
        d.path = IrqPath::Reinjected;
        d.latency_us = sample_latency({true, bus_load(hv, owner).stressed}, hv.platform().bus(), rng);
        hv.record(owner, CauseKind::IrqReinjection, line, fmt::format("irq {}", line));
    }
    d.delivered_at = t_ns + to_ns(d.latency_us);
    return d;
}

AccessOutcome distributor_access(Hypervisor& hv, CellId cell, std::uint32_t offset) {
    auto gic = hv.platform().gic_distributor();
    if (!gic) throw Error(Errc::NoSuchResource, "platform has no gic-dist window");
    const std::uint64_t addr = gic->base + offset;
    return hv.handle_access(cell, Access::mem_write(addr, 4));
}

std::uint64_t distributor_count(const Hypervisor& hv, CellId cell) { return hv.cell(cell).dist_emulations; }

void check_scenario(const Scenario& sc) {
    if (!(std::isfinite(sc.freq_hz) && sc.freq_hz > 0)) throw Error(Errc::InvalidArgument, "scenario frequency must be positive");
    if (sc.n_samples < 1) throw Error(Errc::InvalidArgument, "scenario needs at least one sample");
}

}  // namespace cellsim
