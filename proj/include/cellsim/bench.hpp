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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellsim/irq.hpp"
#include "cellsim/machine.hpp"

namespace cellsim {

/// Population statistics (sigma divides by n). Single pass, Welford update.
/// Errors: EmptySamples.
LatencyStats summarize(std::span<const double> samples_us);

struct ScenarioResult {
    LatencyStats stats;
    std::vector<IrqDelivery> deliveries;
};

/// Replays the GPIO-toggle measurement on a fresh hypervisor: a responder
/// cell owns the measured interrupt line, an optional neighbour declares a
/// stress workload, and n_samples interrupts are raised every 1/freq_hz.
/// The stream is Rng(Rng::stream_seed(sc.seed, stream_index)).
ScenarioResult run_scenario(const MachinePlatform& platform, const Scenario& sc, std::uint64_t stream_index = 0);

struct BenchRow {
    Scenario scenario;
    LatencyStats stats;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string rng_info;
    std::string platform_name;
};

/// Scenario i uses stream index i. Runs scenarios on up to `threads` worker
/// threads; row order always follows input order.
BenchReport run_bench(const MachinePlatform& platform, std::span<const Scenario> scenarios, unsigned threads = 0);

/// Four hours at the given frequency.
std::uint64_t four_hour_samples(double freq_hz);

/// off/on x 10/50 Hz x stress rows in table order. `samples` overrides the
/// four-hour default.
std::vector<Scenario> canonical_scenarios(std::optional<std::uint64_t> samples, std::uint64_t seed);

/// Columns VMM Freq Stress mu sigma Max; values in microseconds, 2 decimals.
std::string render_table(const BenchReport& report);
std::string render_footer(const BenchReport& report);

/// Header `vmm,freq_hz,stress,mean_us,sigma_us,max_us,n,seed`, LF endings.
std::string export_csv(const BenchReport& report);

}  // namespace cellsim
