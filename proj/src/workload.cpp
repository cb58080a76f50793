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

#include "cellsim/workload.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cellsim/error.hpp"
#include "cellsim/irq.hpp"
#include "lexer.hpp"

namespace cellsim {

std::vector<ScriptOp> parse_script(std::string_view text) {
    std::vector<ScriptOp> ops;
    for (const lex::Line& line : lex::tokenize(text)) {
        std::vector<lex::Token> toks = line.tokens;
        ScriptOp op;
        if (toks.size() > 1 && toks.back().text.starts_with('*')) {
            lex::Token count = toks.back();
            count.text.erase(0, 1);
            op.repeat = lex::parse_dec(line, count);
            if (op.repeat == 0) line.fail(toks.back(), "repeat count must be positive");
            toks.pop_back();
        }
        const std::string& verb = toks.front().text;
        auto args = [&](std::size_t min, std::size_t max) {
            if (toks.size() - 1 < min || toks.size() - 1 > max) line.fail(toks.front(), "wrong number of arguments to '" + verb + "'");
        };
        auto width = [&](std::size_t i, std::uint8_t def) -> std::uint8_t {
            if (toks.size() <= i) return def;
            std::uint64_t w = lex::parse_dec(line, toks[i]);
            if (w != 1 && w != 2 && w != 4 && w != 8) line.fail(toks[i], "width must be 1, 2, 4 or 8");
            return static_cast<std::uint8_t>(w);
        };
        if (verb == "read" || verb == "write") {
            args(1, 2);
            op.kind = verb == "read" ? ScriptOp::Kind::Read : ScriptOp::Kind::Write;
            op.addr = lex::parse_hex(line, toks[1]);
            op.width = width(2, 4);
            if (op.addr % op.width) line.fail(toks[1], "address not aligned to width");
        } else if (verb == "ioread" || verb == "iowrite") {
            args(1, 2);
            op.kind = verb == "ioread" ? ScriptOp::Kind::IoRead : ScriptOp::Kind::IoWrite;
            op.addr = lex::parse_hex(line, toks[1]);
            if (op.addr > 0xffff) line.fail(toks[1], "port exceeds 0xffff");
            op.width = width(2, 1);
        } else if (verb == "instr") {
            args(1, 1);
            op.kind = ScriptOp::Kind::Instr;
            op.name = toks[1].text;
        } else if (verb == "dist") {
            args(1, 1);
            op.kind = ScriptOp::Kind::Dist;
            op.addr = lex::parse_hex(line, toks[1]);
            if (op.addr > 0xffffffffu || op.addr % 4) line.fail(toks[1], "distributor offset must be a 32-bit multiple of 4");
            op.width = 4;
        } else {
            line.fail(toks.front(), "unknown script operation '" + verb + "'");
        }
        ops.push_back(std::move(op));
    }
    return ops;
}

std::vector<ScriptOp> load_script_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open workload script " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_script(ss.str());
}

WorkloadRunner::WorkloadRunner(Hypervisor& hv) : WorkloadRunner(hv, load_script_file) {}

WorkloadRunner::WorkloadRunner(Hypervisor& hv, ScriptLoader loader) : hv_(hv), loader_(std::move(loader)) {}

void WorkloadRunner::set_script(CellId cell, std::vector<ScriptOp> ops) {
    Cursor& c = cursors_[cell];
    c = Cursor{};
    c.ops = std::move(ops);
    c.loaded = true;
}

StepStats WorkloadRunner::tally(AccessOutcome o) {
    StepStats s;
    switch (o) {
        case AccessOutcome::Direct: s.direct = 1; break;
        case AccessOutcome::Emulated: s.emulated = 1; break;
        case AccessOutcome::Violation: s.violations = 1; break;
    }
    return s;
}

StepStats WorkloadRunner::step_cell(const Cell& cell, Cursor& cur) {
    const Workload& w = cell.config.workload;
    if (w.kind == WorkloadKind::Script && !cur.loaded) {
        cur.ops = loader_(w.script_path);
        cur.loaded = true;
    }
    if (cur.loaded) {
        if (cur.index >= cur.ops.size()) return {};
        const ScriptOp& op = cur.ops[cur.index];
        if (++cur.done_in_op >= op.repeat) {
            ++cur.index;
            cur.done_in_op = 0;
        }
        switch (op.kind) {
            case ScriptOp::Kind::Read: return tally(hv_.handle_access(cell.id, Access::mem_read(op.addr, op.width)));
            case ScriptOp::Kind::Write: return tally(hv_.handle_access(cell.id, Access::mem_write(op.addr, op.width)));
            case ScriptOp::Kind::IoRead:
                return tally(hv_.handle_access(cell.id, Access::io_read(static_cast<std::uint16_t>(op.addr), op.width)));
            case ScriptOp::Kind::IoWrite:
                return tally(hv_.handle_access(cell.id, Access::io_write(static_cast<std::uint16_t>(op.addr), op.width)));
            case ScriptOp::Kind::Instr: return tally(hv_.handle_access(cell.id, Access::instruction(op.name)));
            case ScriptOp::Kind::Dist:
                return tally(distributor_access(hv_, cell.id, static_cast<std::uint32_t>(op.addr)));
        }
        return {};
    }

    const bool stress = w.kind == WorkloadKind::Stress;
    if (!stress && w.kind != WorkloadKind::LatencyResponder) return {};
    const Perm need = stress ? Perm::Write : Perm::Read;
    std::vector<const MemRegion*> usable;
    for (const MemRegion& m : cell.config.mem)
        if (m.flags.has(need) && hv_.ledger().owner(key_of(Resource{m})) == cell.id) usable.push_back(&m);
    if (usable.empty()) return {};
    // walk cache lines through the cell's own memory
    const std::uint64_t n = cur.sweep++;
    const MemRegion& m = *usable[n % usable.size()];
    const std::uint64_t addr = m.base + ((n / usable.size()) * 64) % m.size;
    return tally(hv_.handle_access(cell.id, stress ? Access::mem_write(addr, 8) : Access::mem_read(addr, 8)));
}

StepStats WorkloadRunner::step() {
    StepStats total;
    std::vector<CellId> running;
    for (const auto& [id, cell] : hv_.cells())
        if (cell.state == CellState::Running) running.push_back(id);
    for (CellId id : running) {
        if (!hv_.has_cell(id) || hv_.cell(id).state != CellState::Running) continue;
        total += step_cell(hv_.cell(id), cursors_[id]);
    }
    return total;
}

StepStats WorkloadRunner::run(std::uint64_t steps) {
    StepStats total;
    for (std::uint64_t i = 0; i < steps; ++i) total += step();
    return total;
}

}  // namespace cellsim
