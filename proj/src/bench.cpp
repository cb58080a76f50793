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

#include "cellsim/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"

namespace cellsim {

LatencyStats summarize(std::span<const double> samples) {
    if (samples.empty()) throw Error(Errc::EmptySamples, "cannot summarize zero samples");
    double mean = 0.0;
    double m2 = 0.0;
    double max = samples.front();
    std::uint64_t n = 0;
    for (double x : samples) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
        max = std::max(max, x);
    }
    return LatencyStats{mean, std::sqrt(std::max(m2, 0.0) / static_cast<double>(n)), max, n};
}

namespace {

struct Layout {
    std::uint32_t irq = 0;
    std::uint32_t responder_cpu = 0;
    MemRegion responder_mem;
    std::optional<MmioDevice> gpio;
    std::optional<std::uint32_t> stress_cpu;
    std::optional<MemRegion> stress_mem;
};

/// Responder takes the highest CPU, the measured (highest) interrupt line and
/// the smallest memory region that is not the lowest one (the root OS keeps
/// that). A stress neighbour, when the platform has room, takes the next CPU
/// down and the next smallest region.
Layout plan(const MachinePlatform& p) {
    std::vector<MemRegion> mem;
    std::optional<std::uint32_t> irq;
    Layout l;
    for (const Resource& r : p.resources()) {
        if (const auto* m = std::get_if<MemRegion>(&r)) mem.push_back(*m);
        if (const auto* i = std::get_if<IrqLine>(&r)) irq = std::max(irq.value_or(0), i->number);
        if (const auto* d = std::get_if<MmioDevice>(&r); d && d->name == "gpio") l.gpio = *d;
    }
    if (!irq) throw Error(Errc::InvalidArgument, "benchmark platform needs an interrupt line");
    if (mem.size() < 2 || p.cpu_count() < 2)
        throw Error(Errc::InvalidArgument, "benchmark platform needs two CPUs and two memory regions");
    std::sort(mem.begin(), mem.end(), [](const MemRegion& a, const MemRegion& b) { return a.base < b.base; });
    std::stable_sort(mem.begin() + 1, mem.end(), [](const MemRegion& a, const MemRegion& b) { return a.size < b.size; });
    l.irq = *irq;
    l.responder_cpu = p.cpu_count() - 1;
    l.responder_mem = mem[1];
    if (p.cpu_count() >= 3 && mem.size() >= 3) {
        l.stress_cpu = p.cpu_count() - 2;
        l.stress_mem = mem[2];
    }
    return l;
}

CellConfig root_config(const MachinePlatform& p, bool stress) {
    CellConfig cfg;
    cfg.name = "root";
    for (const Resource& r : p.resources()) {
        if (const auto* c = std::get_if<Cpu>(&r)) cfg.cpus.insert(c->index);
        if (const auto* m = std::get_if<MemRegion>(&r)) cfg.mem.push_back(*m);
    }
    if (stress) cfg.workload.kind = WorkloadKind::Stress;
    normalize(cfg);
    return cfg;
}

}  // namespace

ScenarioResult run_scenario(const MachinePlatform& platform, const Scenario& sc, std::uint64_t stream_index) {
    check_scenario(sc);
    Rng rng(Rng::stream_seed(sc.seed, stream_index));
    Hypervisor hv(platform);
    std::uint32_t line = 0;

    const Layout l = plan(platform);
    line = l.irq;
    if (sc.vmm_on) {
        const bool neighbour = sc.stress && l.stress_cpu.has_value();
        hv.enable(root_config(platform, sc.stress && !neighbour));

        CellConfig responder;
        responder.name = "responder";
        responder.cpus = {l.responder_cpu};
        responder.mem = {MemRegion{l.responder_mem.base, l.responder_mem.size, PermSet{Perm::Read, Perm::Write, Perm::Execute}}};
        if (l.gpio) responder.devices.emplace_back(*l.gpio);
        responder.irqs = {line};
        responder.workload.kind = WorkloadKind::LatencyResponder;
        hv.start_cell(hv.create_cell(responder));

        if (neighbour) {
            CellConfig load;
            load.name = "stress";
            load.cpus = {*l.stress_cpu};
            load.mem = {MemRegion{l.stress_mem->base, l.stress_mem->size, PermSet{Perm::Read, Perm::Write}}};
            load.workload.kind = WorkloadKind::Stress;
            hv.start_cell(hv.create_cell(load));
        }
    }

    const auto period_ns = static_cast<std::uint64_t>(std::llround(1e9 / sc.freq_hz));
    ScenarioResult result;
    result.deliveries.reserve(sc.n_samples);
    std::vector<double> latencies;
    latencies.reserve(sc.n_samples);
    for (std::uint64_t k = 0; k < sc.n_samples; ++k) {
        IrqDelivery d = raise_irq(hv, line, (k + 1) * period_ns, rng);
        latencies.push_back(d.latency_us);
        result.deliveries.push_back(d);
    }
    result.stats = summarize(latencies);
    return result;
}

static std::string rng_info(std::span<const Scenario> scenarios) {
    std::set<std::uint64_t> seeds;
    for (const Scenario& s : scenarios) seeds.insert(s.seed);
    std::string list;
    for (std::uint64_t s : seeds) list += (list.empty() ? "" : ",") + std::to_string(s);
    return fmt::format("{} seed={} stream=seed^splitmix64(row)", Rng::kAlgorithm, list);
}

BenchReport run_bench(const MachinePlatform& platform, std::span<const Scenario> scenarios, unsigned threads) {
    for (const Scenario& s : scenarios) check_scenario(s);
    BenchReport report;
    report.platform_name = platform.name();
    report.rng_info = rng_info(scenarios);
    report.rows.resize(scenarios.size());

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(scenarios.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(scenarios.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            try {
                report.rows[i] = BenchRow{scenarios[i], run_scenario(platform, scenarios[i], i).stats};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return report;
}

std::uint64_t four_hour_samples(double freq_hz) { return static_cast<std::uint64_t>(std::llround(freq_hz * 4 * 3600)); }

std::vector<Scenario> canonical_scenarios(std::optional<std::uint64_t> samples, std::uint64_t seed) {
    std::vector<Scenario> out;
    for (auto [vmm, stress] : {std::pair{false, false}, std::pair{true, false}, std::pair{true, true}}) {
        for (double f : {10.0, 50.0}) out.push_back(Scenario{vmm, f, stress, samples.value_or(four_hour_samples(f)), seed});
    }
    return out;
}

std::string render_table(const BenchReport& report) {
    std::string out = fmt::format("{:<5}{:>6}  {:<6}{:>7}{:>7}{:>7}\n", "VMM", "Freq", "Stress", "µ", "σ", "Max");
    for (const BenchRow& r : report.rows) {
        out += fmt::format("{:<5}{:>6}  {:<6}{:>7.2f}{:>7.2f}{:>7.2f}\n", r.scenario.vmm_on ? "on" : "off",
                           fmt::format("{:g}Hz", r.scenario.freq_hz), r.scenario.stress ? "yes" : "no", r.stats.mean_us,
                           r.stats.sigma_us, r.stats.max_us);
    }
    return out;
}

std::string render_footer(const BenchReport& report) {
    std::string samples;
    for (const BenchRow& r : report.rows) samples += (samples.empty() ? "" : ",") + std::to_string(r.stats.n);
    return fmt::format(
        "latency in µs; σ is the population standard deviation (divide by n)\n"
        "platform: {}; samples per row: {}\nrng: {}\n",
        report.platform_name, samples.empty() ? "-" : samples, report.rng_info);
}

std::string export_csv(const BenchReport& report) {
    std::string out = "vmm,freq_hz,stress,mean_us,sigma_us,max_us,n,seed\n";
    for (const BenchRow& r : report.rows) {
        out += fmt::format("{},{:.6f},{},{:.6f},{:.6f},{:.6f},{},{}\n", r.scenario.vmm_on ? "on" : "off", r.scenario.freq_hz,
                           r.scenario.stress ? "yes" : "no", r.stats.mean_us, r.stats.sigma_us, r.stats.max_us, r.stats.n,
                           r.scenario.seed);
    }
    return out;
}

}  // namespace cellsim
