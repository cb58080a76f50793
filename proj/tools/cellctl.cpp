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

// cellctl: manage cells on a simulated partitioning hypervisor and run the
// interrupt-latency benchmark. Talks to libcellsim through its C interface
// only; hypervisor state lives in a snapshot file between invocations.

#include <cellsim/cellsim.h>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

/// A failed library call; carries the status and the library's message.
struct Failure : std::runtime_error {
    cs_status status;
    Failure(cs_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void check(cs_status s) {
    if (s != CS_OK) throw Failure(s, cs_last_error());
}

struct PlatformDel { void operator()(cs_platform* p) const { cs_platform_free(p); } };
struct ConfigDel { void operator()(cs_config* c) const { cs_config_free(c); } };
struct HvDel { void operator()(cs_hv* h) const { cs_hv_free(h); } };
struct ReportDel { void operator()(cs_report* r) const { cs_report_free(r); } };

using PlatformPtr = std::unique_ptr<cs_platform, PlatformDel>;
using ConfigPtr = std::unique_ptr<cs_config, ConfigDel>;
using HvPtr = std::unique_ptr<cs_hv, HvDel>;
using ReportPtr = std::unique_ptr<cs_report, ReportDel>;

/// Owns a cs_buffer for the duration of a scope.
struct Buffer {
    cs_buffer buf{nullptr, 0};
    ~Buffer() { cs_buffer_free(&buf); }
    cs_buffer* operator&() { return &buf; }
    std::string str() const { return buf.data ? std::string(reinterpret_cast<const char*>(buf.data), buf.size) : ""; }
};

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Failure(CS_E_IO, "cannot open " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw Failure(CS_E_IO, "cannot write " + path);
}

/// A preset name, or a path to a platform description.
PlatformPtr load_platform(const std::string& spec) {
    cs_platform* p = nullptr;
    if (fs::exists(spec)) {
        auto bytes = read_file(spec);
        check(cs_platform_parse(reinterpret_cast<const char*>(bytes.data()), bytes.size(), &p));
    } else {
        check(cs_platform_preset(spec.c_str(), &p));
    }
    return PlatformPtr(p);
}

/// Text DSL or binary image, told apart by the binary magic.
ConfigPtr load_config(const std::string& path) {
    auto bytes = read_file(path);
    cs_config* c = nullptr;
    static const std::uint8_t magic[4] = {0x46, 0x43, 0x48, 0x4A};
    if (bytes.size() >= 4 && std::equal(magic, magic + 4, bytes.begin()))
        check(cs_config_load_binary(bytes.data(), bytes.size(), &c));
    else
        check(cs_config_parse(reinterpret_cast<const char*>(bytes.data()), bytes.size(), &c));
    return ConfigPtr(c);
}

/// Advisory lock on "<state>.lock" held for one command.
class StateLock {
public:
    explicit StateLock(const std::string& state) {
        const std::string path = state + ".lock";
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Failure(CS_E_IO, "cannot open lock file " + path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw Failure(CS_E_IO, "cannot lock " + path);
        }
    }
    ~StateLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    StateLock(const StateLock&) = delete;
    StateLock& operator=(const StateLock&) = delete;

private:
    int fd_ = -1;
};

class Session {
public:
    explicit Session(std::string path) : path_(std::move(path)) {}

    /// The persisted hypervisor; fails cleanly when there is none.
    cs_hv* hv() {
        if (!hv_) {
            if (!fs::exists(path_))
                throw Failure(CS_E_NOT_ENABLED, "no hypervisor state at " + path_ + " (run `enable` first)");
            cs_hv* h = nullptr;
            check(cs_hv_load(path_.c_str(), &h));
            hv_.reset(h);
        }
        return hv_.get();
    }
    bool has_state() const { return fs::exists(path_); }
    void replace(HvPtr hv) { hv_ = std::move(hv); }
    void save() { check(cs_hv_save(hv_.get(), path_.c_str())); }

    std::uint32_t lookup(const std::string& cell) {
        std::uint32_t id = 0;
        check(cs_hv_cell_lookup(hv(), cell.c_str(), &id));
        return id;
    }

private:
    std::string path_;
    HvPtr hv_;
};

const char* state_str(cs_cell_state s) {
    switch (s) {
        case CS_CELL_CREATED: return "Created";
        case CS_CELL_RUNNING: return "Running";
        case CS_CELL_STOPPED: return "Stopped";
        case CS_CELL_FAILED: return "Failed";
    }
    return "?";
}

void print_cells(cs_hv* hv) {
    std::printf("%-4s %-31s %-8s %5s %9s\n", "ID", "NAME", "STATE", "CPUS", "RESOURCES");
    const size_t n = cs_hv_cell_count(hv);
    for (size_t i = 0; i < n; ++i) {
        cs_cell_info info{};
        check(cs_hv_cell_info_at(hv, i, &info));
        std::printf("%-4u %-31s %-8s %5u %9u\n", info.id, info.name, state_str(info.state), info.cpu_count,
                    info.owned_resources);
    }
}

struct Options {
    std::string state = "cellsim.state";

    std::string platform = "jetson-tk1";
    std::string root_cfg;

    std::string cfg_file;
    std::string emit_out;

    std::string cell;
    std::string image;
    std::uint64_t addr = 0;
    bool addr_set = false;

    std::string scenarios = "canonical";
    std::uint64_t samples = 0;
    std::uint64_t seed = 7;
    unsigned threads = 0;
    std::string out;
};

ReportPtr run_bench(const Options& o) {
    if (o.scenarios != "canonical") throw Failure(CS_E_INVALID_ARGUMENT, "unknown scenario set " + o.scenarios);
    auto platform = load_platform(o.platform);
    std::vector<cs_scenario> list(cs_bench_canonical(o.samples, o.seed, nullptr, 0));
    cs_bench_canonical(o.samples, o.seed, list.data(), list.size());
    cs_report* r = nullptr;
    check(cs_bench_run(platform.get(), list.data(), list.size(), o.threads, &r));
    return ReportPtr(r);
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(o.out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellctl - partitioning hypervisor simulator"};
    app.require_subcommand(1, 1);
    Options o;
    app.add_option("--state", o.state, "Hypervisor state file")->capture_default_str();

    auto* enable = app.add_subcommand("enable", "Enable the hypervisor with a root cell");
    enable->add_option("--platform", o.platform, "Platform preset or description file")->capture_default_str();
    enable->add_option("--root", o.root_cfg, "Root cell configuration")->required();

    auto* disable = app.add_subcommand("disable", "Disable the hypervisor (only the root cell may remain)");

    auto* cell = app.add_subcommand("cell", "Cell management");
    cell->require_subcommand(1, 1);
    auto* c_create = cell->add_subcommand("create", "Create a cell from a configuration");
    c_create->add_option("config", o.cfg_file, "Cell configuration (text or binary)")->required();
    auto* c_load = cell->add_subcommand("load", "Load an image into a cell");
    c_load->add_option("cell", o.cell, "Cell name or id")->required();
    c_load->add_option("image", o.image, "Image file")->required();
    c_load->add_option("--addr", o.addr, "Load address")->each([&](const std::string&) { o.addr_set = true; });
    std::vector<std::pair<CLI::App*, cs_status (*)(cs_hv*, uint32_t)>> cell_ops;
    for (auto [name, fn, help] : {std::tuple{"start", &cs_hv_cell_start, "Start a cell"},
                                  std::tuple{"stop", &cs_hv_cell_stop, "Stop a cell"},
                                  std::tuple{"destroy", &cs_hv_cell_destroy, "Destroy a cell, returning its resources"},
                                  std::tuple{"relaunch", &cs_hv_cell_relaunch, "Restart a stopped or failed cell"}}) {
        auto* sub = cell->add_subcommand(name, help);
        sub->add_option("cell", o.cell, "Cell name or id")->required();
        cell_ops.emplace_back(sub, fn);
    }
    auto* c_list = cell->add_subcommand("list", "List cells");

    auto* check_cfg = app.add_subcommand("check-config", "Parse and check a cell configuration");
    check_cfg->add_option("config", o.cfg_file, "Cell configuration (text or binary)")->required();
    check_cfg->add_option("--emit", o.emit_out, "Also write the canonical binary image here");

    auto* bench = app.add_subcommand("bench", "Interrupt latency benchmark");
    bench->require_subcommand(1, 1);
    std::vector<CLI::App*> bench_cmds;
    for (auto [name, help] : {std::pair{"run", "Run and print the table with its footer"},
                              std::pair{"table", "Run and print the table"},
                              std::pair{"csv", "Run and print CSV"}}) {
        auto* sub = bench->add_subcommand(name, help);
        sub->add_option("--scenarios", o.scenarios, "Scenario set")->check(CLI::IsMember({"canonical"}))->capture_default_str();
        sub->add_option("--samples", o.samples, "Samples per scenario (0: four hours' worth)")->capture_default_str();
        sub->add_option("--seed", o.seed, "Base seed")->capture_default_str();
        sub->add_option("--platform", o.platform, "Platform preset or description file")->capture_default_str();
        sub->add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
        sub->add_option("--out", o.out, "Write to a file instead of stdout");
        bench_cmds.push_back(sub);
    }

    auto* events = app.add_subcommand("events", "Trap event log");
    events->require_subcommand(1, 1);
    auto* e_export = events->add_subcommand("export", "Export events as JSON lines");
    e_export->add_option("--out", o.out, "Write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help("", CLI::AppFormatMode::All);
        return kExitUsage;
    }

    try {
        Session session(o.state);

        if (*check_cfg) {
            auto cfg = load_config(o.cfg_file);
            if (!o.emit_out.empty()) {
                Buffer bin;
                check(cs_config_emit_binary(cfg.get(), &bin));
                write_file(o.emit_out, bin.str());
            }
            std::printf("%s: ok (cell \"%s\")\n", o.cfg_file.c_str(), cs_config_name(cfg.get()));
            return kExitOk;
        }

        for (auto* sub : bench_cmds) {
            if (!*sub) continue;
            auto report = run_bench(o);
            Buffer text;
            if (sub->get_name() == "csv") {
                check(cs_report_csv(report.get(), &text));
                emit(o, text.str());
            } else {
                check(cs_report_table(report.get(), &text));
                std::string s = text.str();
                if (sub->get_name() == "run") {
                    Buffer footer;
                    check(cs_report_footer(report.get(), &footer));
                    s += footer.str();
                }
                emit(o, s);
            }
            return kExitOk;
        }

        if (*e_export) {
            Buffer text;
            check(cs_hv_events_jsonl(session.hv(), &text));
            emit(o, text.str());
            return kExitOk;
        }

        if (*c_list) {
            print_cells(session.hv());
            return kExitOk;
        }

        // Everything below mutates the persisted state.
        StateLock lock(o.state);

        if (*enable) {
            if (session.has_state() && cs_hv_is_enabled(session.hv()))
                throw Failure(CS_E_ALREADY_ENABLED, "hypervisor is already enabled");
            auto platform = load_platform(o.platform);
            auto root = load_config(o.root_cfg);
            cs_hv* h = nullptr;
            check(cs_hv_new(platform.get(), &h));
            HvPtr hv(h);
            check(cs_hv_enable(hv.get(), root.get()));
            session.replace(std::move(hv));
            session.save();
            std::printf("hypervisor enabled on %s, root cell \"%s\"\n", cs_platform_name(platform.get()),
                        cs_config_name(root.get()));
            return kExitOk;
        }

        if (*disable) {
            check(cs_hv_disable(session.hv()));
            session.save();
            std::printf("hypervisor disabled\n");
            return kExitOk;
        }

        if (*c_create) {
            auto cfg = load_config(o.cfg_file);
            std::uint32_t id = 0;
            check(cs_hv_cell_create(session.hv(), cfg.get(), &id));
            session.save();
            std::printf("created cell %u \"%s\"\n", id, cs_config_name(cfg.get()));
            return kExitOk;
        }

        if (*c_load) {
            std::uint32_t id = session.lookup(o.cell);
            auto image = read_file(o.image);
            std::uint64_t addr = o.addr;
            if (!o.addr_set) throw Failure(CS_E_INVALID_ARGUMENT, "cell load needs --addr <load address>");
            check(cs_hv_cell_load(session.hv(), id, addr, image.data(), image.size()));
            session.save();
            std::printf("loaded %zu bytes into cell %u at 0x%llx\n", image.size(), id, static_cast<unsigned long long>(addr));
            return kExitOk;
        }

        for (auto& [sub, fn] : cell_ops) {
            if (!*sub) continue;
            std::uint32_t id = session.lookup(o.cell);
            check(fn(session.hv(), id));
            session.save();
            std::printf("cell %u: %s ok\n", id, sub->get_name().c_str());
            return kExitOk;
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s: %s\n", cs_status_name(f.status), f.what());
        return kExitDomain;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDomain;
    }
    return kExitUsage;
}
