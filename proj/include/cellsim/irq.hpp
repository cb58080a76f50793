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

#pragma once

#include <cstdint>

#include "cellsim/hypervisor.hpp"
#include "cellsim/machine.hpp"
#include "cellsim/rng.hpp"

namespace cellsim {

/// Resolution of the capture unit that timestamps responses: 62.5 ns.
inline constexpr double kCaptureTickUs = 0.0625;

/// Nearest multiple of 62.5 ns, ties upward.
double quantize_62_5ns(double t_us);

struct LatencyFlags {
    bool vmm_on = false;
    bool stressed = false;
};

/// One interrupt latency draw in microseconds:
///
///     off: quantize(base + jitter)           jitter ~ U(-tick/2, tick/2), if enabled
///     on:  quantize(base + H + [stressed] G)  H ~ hv_overhead, G = C w.p. contention_prob
///
/// Draw order is fixed (H, then gate, then C) so streams are reproducible.
double sample_latency(LatencyFlags flags, const BusModel& bus, Rng& rng);

enum class IrqPath : std::uint8_t { BareMetal, Reinjected };

struct IrqDelivery {
    std::uint32_t line = 0;
    CellId owner = kRootCell;
    std::uint64_t raised_at = 0;
    std::uint64_t delivered_at = 0;
    double latency_us = 0.0;
    IrqPath path = IrqPath::BareMetal;
};

/// Raises physical interrupt `line` at time `t_ns`.
///
/// Disabled hypervisor: the line goes straight to the (native) OS. Enabled:
/// the hypervisor takes the interrupt and reinjects it into the Running
/// owner, logging an IrqReinjection event stamped `t_ns`.
///
/// delivered_at is raised_at plus the quantized latency rounded to whole
/// nanoseconds; quantize((delivered_at - raised_at) / 1000) == latency_us.
///
/// Errors: NoSuchLine; UnownedIrq (owner not Running: a spurious
/// AccessViolation-class event is logged, nothing delivered);
/// InvalidArgument (t_ns before the hypervisor clock).
IrqDelivery raise_irq(Hypervisor& hv, std::uint32_t line, std::uint64_t t_ns, Rng& rng);

/// Guest write to the GIC distributor at `offset`. Inside the window this is
/// always emulated and counted; outside it falls through to handle_access.
/// Errors: BadState, NoSuchResource (platform has no "gic-dist" window).
AccessOutcome distributor_access(Hypervisor& hv, CellId cell, std::uint32_t offset);

std::uint64_t distributor_count(const Hypervisor& hv, CellId cell);

struct Scenario {
    bool vmm_on = false;
    double freq_hz = 10.0;
    bool stress = false;
    std::uint64_t n_samples = 1;
    std::uint64_t seed = 0;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

void check_scenario(const Scenario& sc);

struct LatencyStats {
    double mean_us = 0.0;
    double sigma_us = 0.0;
    double max_us = 0.0;
    std::uint64_t n = 0;

    friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

}  // namespace cellsim
