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

#include "cellsim/cellsim.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <new>
#include <string>

#include <fmt/format.h>

#include "cellsim/bench.hpp"
#include "cellsim/cellconfig.hpp"
#include "cellsim/comm.hpp"
#include "cellsim/error.hpp"
#include "cellsim/hypervisor.hpp"
#include "cellsim/irq.hpp"
#include "cellsim/machine.hpp"

struct cs_platform {
    cellsim::MachinePlatform platform;
};

struct cs_config {
    cellsim::CellConfig config;
};

struct cs_hv {
    cellsim::Hypervisor hv;
};

struct cs_report {
    cellsim::BenchReport report;
};

namespace {

thread_local std::string g_last_error;

cs_status fail(cs_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

template <class F>
cs_status guard(F&& f) noexcept {
    try {
        f();
        return CS_OK;
    } catch (const cellsim::Error& e) {
        return fail(static_cast<cs_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(CS_E_NO_MEMORY, "out of memory");
    } catch (const std::exception& e) {
        return fail(CS_E_INTERNAL, e.what());
    } catch (...) {
        return fail(CS_E_INTERNAL, "unknown failure");
    }
}

void need(const void* p, const char* what) {
    if (!p) throw cellsim::Error(cellsim::Errc::InvalidArgument, fmt::format("{} must not be null", what));
}

void to_buffer(std::string_view bytes, cs_buffer* out) {
    need(out, "out");
    auto* data = static_cast<std::uint8_t*>(std::malloc(bytes.size() + 1));
    if (!data) throw std::bad_alloc();
    std::memcpy(data, bytes.data(), bytes.size());
    data[bytes.size()] = 0;
    out->data = data;
    out->size = bytes.size();
}

void to_buffer(const std::vector<std::uint8_t>& bytes, cs_buffer* out) {
    to_buffer(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), out);
}

cs_outcome to_c(cellsim::AccessOutcome o) { return static_cast<cs_outcome>(o); }

cellsim::Scenario from_c(const cs_scenario& s) {
    return {s.vmm_on != 0, s.freq_hz, s.stress != 0, s.n_samples, s.seed};
}

cs_scenario to_c(const cellsim::Scenario& s) {
    return {s.vmm_on ? 1 : 0, s.freq_hz, s.stress ? 1 : 0, s.n_samples, s.seed};
}

cs_latency_stats to_c(const cellsim::LatencyStats& s) { return {s.mean_us, s.sigma_us, s.max_us, s.n}; }

}  // namespace

extern "C" {

void cs_buffer_free(cs_buffer* buf) {
    if (!buf) return;
    std::free(buf->data);
    buf->data = nullptr;
    buf->size = 0;
}

const char* cs_status_name(cs_status status) {
    switch (status) {
        case CS_OK: return "OK";
        case CS_E_NO_MEMORY: return "NoMemory";
        case CS_E_INTERNAL: return "Internal";
        default: break;
    }
    if (status >= CS_E_INVALID_ARGUMENT && status <= CS_E_IO)
        return cellsim::errc_name(static_cast<cellsim::Errc>(status)).data();
    return "Unknown";
}

const char* cs_last_error(void) { return g_last_error.c_str(); }

cs_status cs_platform_preset(const char* name, cs_platform** out) {
    return guard([&] {
        need(name, "name");
        need(out, "out");
        *out = new cs_platform{cellsim::platform_preset(name)};
    });
}

cs_status cs_platform_parse(const char* text, size_t len, cs_platform** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new cs_platform{cellsim::build_platform(cellsim::parse_platform_spec({text, len}))};
    });
}

cs_status cs_platform_text(const cs_platform* p, cs_buffer* out) {
    return guard([&] {
        need(p, "platform");
        to_buffer(cellsim::to_text(p->platform), out);
    });
}

const char* cs_platform_name(const cs_platform* p) { return p ? p->platform.name().c_str() : ""; }

void cs_platform_free(cs_platform* p) { delete p; }

cs_status cs_config_parse(const char* text, size_t len, cs_config** out) {
    return guard([&] {
        need(text, "text");
        need(out, "out");
        *out = new cs_config{cellsim::parse_config({text, len})};
    });
}

cs_status cs_config_load_binary(const uint8_t* data, size_t len, cs_config** out) {
    return guard([&] {
        need(data, "data");
        need(out, "out");
        *out = new cs_config{cellsim::load_binary({data, len})};
    });
}

cs_status cs_config_emit_binary(const cs_config* cfg, cs_buffer* out) {
    return guard([&] {
        need(cfg, "cfg");
        to_buffer(cellsim::emit_binary(cfg->config), out);
    });
}

cs_status cs_config_text(const cs_config* cfg, cs_buffer* out) {
    return guard([&] {
        need(cfg, "cfg");
        to_buffer(cellsim::to_text(cfg->config), out);
    });
}

const char* cs_config_name(const cs_config* cfg) { return cfg ? cfg->config.name.c_str() : ""; }

void cs_config_free(cs_config* cfg) { delete cfg; }

cs_status cs_hv_new(const cs_platform* p, cs_hv** out) {
    return guard([&] {
        need(p, "platform");
        need(out, "out");
        *out = new cs_hv{cellsim::Hypervisor(p->platform)};
    });
}

void cs_hv_free(cs_hv* hv) { delete hv; }

int cs_hv_is_enabled(const cs_hv* hv) { return hv && hv->hv.enabled() ? 1 : 0; }

const char* cs_hv_platform_name(const cs_hv* hv) { return hv ? hv->hv.platform().name().c_str() : ""; }

cs_status cs_hv_enable(cs_hv* hv, const cs_config* root) {
    return guard([&] {
        need(hv, "hv");
        need(root, "root");
        hv->hv.enable(root->config);
    });
}

cs_status cs_hv_disable(cs_hv* hv) {
    return guard([&] {
        need(hv, "hv");
        hv->hv.disable();
    });
}

cs_status cs_hv_validate(const cs_hv* hv, const cs_config* cfg, cs_buffer* out) {
    return guard([&] {
        need(hv, "hv");
        need(cfg, "cfg");
        if (!hv->hv.enabled()) throw cellsim::Error(cellsim::Errc::NotEnabled, "hypervisor is not enabled");
        std::string text;
        for (const auto& v : cellsim::validate_against(cfg->config, hv->hv.platform(), hv->hv.ledger()))
            text += v.str() + "\n";
        to_buffer(text, out);
    });
}

cs_status cs_hv_cell_create(cs_hv* hv, const cs_config* cfg, uint32_t* out_id) {
    return guard([&] {
        need(hv, "hv");
        need(cfg, "cfg");
        std::uint32_t id = hv->hv.create_cell(cfg->config);
        if (out_id) *out_id = id;
    });
}

cs_status cs_hv_cell_load(cs_hv* hv, uint32_t cell, uint64_t addr, const uint8_t* data, size_t len) {
    return guard([&] {
        need(hv, "hv");
        if (len) need(data, "data");
        hv->hv.load_image(cell, addr, {data, len});
    });
}

#define CS_CELL_OP(fn, method)                  \
    cs_status fn(cs_hv* hv, uint32_t cell) {    \
        return guard([&] {                      \
            need(hv, "hv");                     \
            hv->hv.method(cell);                \
        });                                     \
    }

CS_CELL_OP(cs_hv_cell_start, start_cell)
CS_CELL_OP(cs_hv_cell_stop, stop_cell)
CS_CELL_OP(cs_hv_cell_destroy, destroy_cell)
CS_CELL_OP(cs_hv_cell_relaunch, relaunch_cell)

#undef CS_CELL_OP

cs_status cs_hv_cell_lookup(const cs_hv* hv, const char* name_or_id, uint32_t* out_id) {
    return guard([&] {
        need(hv, "hv");
        need(name_or_id, "name_or_id");
        need(out_id, "out_id");
        if (auto id = hv->hv.find_cell(name_or_id)) {
            *out_id = *id;
            return;
        }
        std::string s = name_or_id;
        if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos && s.size() < 10) {
            auto id = static_cast<std::uint32_t>(std::stoul(s));
            if (hv->hv.has_cell(id)) {
                *out_id = id;
                return;
            }
        }
        throw cellsim::Error(cellsim::Errc::NoSuchCell, fmt::format("no cell \"{}\"", s));
    });
}

size_t cs_hv_cell_count(const cs_hv* hv) { return hv ? hv->hv.cells().size() : 0; }

cs_status cs_hv_cell_info_at(const cs_hv* hv, size_t index, cs_cell_info* out) {
    return guard([&] {
        need(hv, "hv");
        need(out, "out");
        const auto& cells = hv->hv.cells();
        if (index >= cells.size()) throw cellsim::Error(cellsim::Errc::NoSuchCell, "cell index out of range");
        const cellsim::Cell& c = std::next(cells.begin(), static_cast<std::ptrdiff_t>(index))->second;
        std::memset(out, 0, sizeof *out);
        out->id = c.id;
        std::strncpy(out->name, c.config.name.c_str(), sizeof out->name - 1);
        out->state = static_cast<cs_cell_state>(c.state);
        std::uint32_t cpus = 0;
        const auto owned = hv->hv.ledger().owned_by(c.id);
        for (const auto& k : owned)
            if (k.kind == cellsim::ResourceKind::Cpu) ++cpus;
        out->cpu_count = cpus;
        out->owned_resources = static_cast<std::uint32_t>(owned.size());
    });
}

cs_status cs_hv_access(cs_hv* hv, uint32_t cell, cs_access_kind kind, uint64_t addr, uint8_t width, const char* instr,
                       cs_outcome* out) {
    return guard([&] {
        need(hv, "hv");
        need(out, "out");
        using cellsim::Access;
        Access a;
        switch (kind) {
            case CS_ACCESS_MEM_READ: a = Access::mem_read(addr, width); break;
            case CS_ACCESS_MEM_WRITE: a = Access::mem_write(addr, width); break;
            case CS_ACCESS_IO_READ:
            case CS_ACCESS_IO_WRITE:
                if (addr > 0xffff) throw cellsim::Error(cellsim::Errc::InvalidArgument, "port exceeds 0xffff");
                a = kind == CS_ACCESS_IO_READ ? Access::io_read(static_cast<std::uint16_t>(addr), width)
                                              : Access::io_write(static_cast<std::uint16_t>(addr), width);
                break;
            case CS_ACCESS_INSTR:
                need(instr, "instr");
                a = Access::instruction(instr);
                break;
            default: throw cellsim::Error(cellsim::Errc::InvalidArgument, "unknown access kind");
        }
        *out = to_c(hv->hv.handle_access(cell, a));
    });
}

cs_status cs_hv_raise_irq(cs_hv* hv, uint32_t line, uint64_t t_ns, cs_irq_delivery* out) {
    return guard([&] {
        need(hv, "hv");
        need(out, "out");
        auto d = cellsim::raise_irq(hv->hv, line, t_ns, hv->hv.rng());
        *out = {d.line, d.owner, d.raised_at, d.delivered_at, d.latency_us, d.path == cellsim::IrqPath::Reinjected};
    });
}

cs_status cs_hv_distributor_access(cs_hv* hv, uint32_t cell, uint32_t offset, cs_outcome* out) {
    return guard([&] {
        need(hv, "hv");
        need(out, "out");
        *out = to_c(cellsim::distributor_access(hv->hv, cell, offset));
    });
}

size_t cs_hv_event_count(const cs_hv* hv) { return hv ? hv->hv.events().size() : 0; }

cs_status cs_hv_events_jsonl(const cs_hv* hv, cs_buffer* out) {
    return guard([&] {
        need(hv, "hv");
        to_buffer(cellsim::export_events_jsonl(hv->hv.events()), out);
    });
}

cs_status cs_hv_snapshot(const cs_hv* hv, cs_buffer* out) {
    return guard([&] {
        need(hv, "hv");
        to_buffer(hv->hv.snapshot(), out);
    });
}

cs_status cs_hv_restore(const uint8_t* data, size_t len, cs_hv** out) {
    return guard([&] {
        need(data, "data");
        need(out, "out");
        *out = new cs_hv{cellsim::Hypervisor::restore({data, len})};
    });
}

cs_status cs_hv_save(const cs_hv* hv, const char* path) {
    return guard([&] {
        need(hv, "hv");
        need(path, "path");
        const auto bytes = hv->hv.snapshot();
        const std::string tmp = std::string(path) + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!f) throw cellsim::Error(cellsim::Errc::Io, "cannot write " + tmp);
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw cellsim::Error(cellsim::Errc::Io, fmt::format("cannot replace {}: {}", path, ec.message()));
    });
}

cs_status cs_hv_load(const char* path, cs_hv** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        std::ifstream f(path, std::ios::binary);
        if (!f) throw cellsim::Error(cellsim::Errc::Io, fmt::format("cannot open {}", path));
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        *out = new cs_hv{cellsim::Hypervisor::restore(bytes)};
    });
}

cs_status cs_hv_channel_create(cs_hv* hv, uint32_t a, uint32_t b, uint64_t size, uint16_t vectors, uint32_t* out_id) {
    return guard([&] {
        need(hv, "hv");
        auto id = cellsim::create_channel(hv->hv, a, b, size, vectors);
        if (out_id) *out_id = id;
    });
}

cs_status cs_hv_channel_send(cs_hv* hv, uint32_t channel, uint32_t from, uint64_t offset, const uint8_t* data, size_t len,
                             uint16_t vector) {
    return guard([&] {
        need(hv, "hv");
        if (len) need(data, "data");
        cellsim::send(hv->hv, channel, from, offset, {data, len}, vector);
    });
}

cs_status cs_hv_channel_poll(cs_hv* hv, uint32_t channel, uint32_t cell, uint16_t* out, size_t cap, size_t* count) {
    return guard([&] {
        need(hv, "hv");
        need(count, "count");
        if (cap) need(out, "out");
        auto& ch = hv->hv.comm().channels;
        auto it = ch.find(channel);
        if (it != ch.end()) {
            int e = it->second.endpoint_index(cell);
            if (e >= 0 && it->second.ends[static_cast<std::size_t>(e)].pending.size() > cap)
                throw cellsim::Error(cellsim::Errc::InvalidArgument, "poll buffer too small");
        }
        auto vectors = cellsim::poll(hv->hv, channel, cell);
        std::copy(vectors.begin(), vectors.end(), out);
        *count = vectors.size();
    });
}

cs_status cs_hv_pci_cfg_read(cs_hv* hv, uint32_t cell, uint16_t bdf, uint16_t offset, uint32_t* out) {
    return guard([&] {
        need(hv, "hv");
        need(out, "out");
        *out = cellsim::pci_cfg_read(hv->hv, cell, bdf, offset);
    });
}

cs_status cs_hv_traffic_jsonl(const cs_hv* hv, cs_buffer* out) {
    return guard([&] {
        need(hv, "hv");
        to_buffer(cellsim::export_traffic_jsonl(hv->hv.comm()), out);
    });
}

double cs_quantize_62_5ns(double t_us) { return cellsim::quantize_62_5ns(t_us); }

cs_status cs_summarize(const double* samples, size_t n, cs_latency_stats* out) {
    return guard([&] {
        need(out, "out");
        if (n) need(samples, "samples");
        *out = to_c(cellsim::summarize({samples, n}));
    });
}

size_t cs_bench_canonical(uint64_t samples, uint64_t seed, cs_scenario* out, size_t cap) {
    auto list = cellsim::canonical_scenarios(samples ? std::optional<std::uint64_t>(samples) : std::nullopt, seed);
    for (std::size_t i = 0; out && i < list.size() && i < cap; ++i) out[i] = to_c(list[i]);
    return list.size();
}

cs_status cs_bench_run(const cs_platform* p, const cs_scenario* scenarios, size_t n, unsigned threads, cs_report** out) {
    return guard([&] {
        need(p, "platform");
        need(out, "out");
        if (n) need(scenarios, "scenarios");
        std::vector<cellsim::Scenario> list;
        for (size_t i = 0; i < n; ++i) list.push_back(from_c(scenarios[i]));
        *out = new cs_report{cellsim::run_bench(p->platform, list, threads)};
    });
}

size_t cs_report_row_count(const cs_report* r) { return r ? r->report.rows.size() : 0; }

cs_status cs_report_row(const cs_report* r, size_t index, cs_scenario* scenario, cs_latency_stats* stats) {
    return guard([&] {
        need(r, "report");
        if (index >= r->report.rows.size()) throw cellsim::Error(cellsim::Errc::InvalidArgument, "row index out of range");
        if (scenario) *scenario = to_c(r->report.rows[index].scenario);
        if (stats) *stats = to_c(r->report.rows[index].stats);
    });
}

cs_status cs_report_table(const cs_report* r, cs_buffer* out) {
    return guard([&] {
        need(r, "report");
        to_buffer(cellsim::render_table(r->report), out);
    });
}

cs_status cs_report_footer(const cs_report* r, cs_buffer* out) {
    return guard([&] {
        need(r, "report");
        to_buffer(cellsim::render_footer(r->report), out);
    });
}

cs_status cs_report_csv(const cs_report* r, cs_buffer* out) {
    return guard([&] {
        need(r, "report");
        to_buffer(cellsim::export_csv(r->report), out);
    });
}

void cs_report_free(cs_report* r) { delete r; }

}  // extern "C"
