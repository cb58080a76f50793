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

#include "lexer.hpp"

#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

namespace cellsim::lex {

void Line::expect_args(std::size_t min, std::size_t max) const {
    std::size_t n = tokens.size() - 1;
    if (n < min) fail(tokens.front(), fmt::format("'{}' needs at least {} argument(s)", tokens.front().text, min));
    if (n > max) fail(tokens[max + 1], fmt::format("unexpected argument to '{}'", tokens.front().text));
}

std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

        Line line{number, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            char c = raw[i];
            if (c == ' ' || c == '\t') {
                ++i;
                continue;
            }
            if (c == '#') break;
            Token tok;
            tok.col = static_cast<int>(i) + 1;
            if (c == '"') {
                std::size_t close = raw.find('"', i + 1);
                if (close == std::string_view::npos) throw SyntaxError(number, tok.col, "unterminated string");
                tok.text = std::string(raw.substr(i + 1, close - i - 1));
                tok.quoted = true;
                i = close + 1;
                if (i < raw.size() && raw[i] != ' ' && raw[i] != '\t' && raw[i] != '#')
                    throw SyntaxError(number, static_cast<int>(i) + 1, "expected whitespace after string");
            } else {
                std::size_t j = i;
                while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t' && raw[j] != '#') {
                    if (raw[j] == '"') throw SyntaxError(number, static_cast<int>(j) + 1, "stray quote");
                    ++j;
                }
                tok.text = std::string(raw.substr(i, j - i));
                i = j;
            }
            line.tokens.push_back(std::move(tok));
        }
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

static std::uint64_t parse_base(const Line& line, const Token& t, std::string_view digits, int base) {
    if (t.quoted || digits.empty()) line.fail(t, fmt::format("expected a number, got \"{}\"", t.text));
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (ec == std::errc::result_out_of_range) line.fail(t, fmt::format("number {} out of range", t.text));
    if (ec != std::errc{} || end != digits.data() + digits.size())
        line.fail(t, fmt::format("expected a {} number, got \"{}\"", base == 16 ? "hex" : "decimal", t.text));
    return v;
}

static bool has_hex_prefix(std::string_view s) { return s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X'); }

std::uint64_t parse_hex(const Line& line, const Token& t) {
    std::string_view s = t.text;
    if (has_hex_prefix(s)) s.remove_prefix(2);
    return parse_base(line, t, s, 16);
}

std::uint64_t parse_dec(const Line& line, const Token& t) { return parse_base(line, t, t.text, 10); }

std::uint64_t parse_int(const Line& line, const Token& t) {
    std::string_view s = t.text;
    if (has_hex_prefix(s)) return parse_base(line, t, s.substr(2), 16);
    return parse_base(line, t, s, 10);
}

double parse_double(const Line& line, const Token& t) {
    if (t.quoted || t.text.empty()) line.fail(t, "expected a number");
    char* end = nullptr;
    double v = std::strtod(t.text.c_str(), &end);
    if (end != t.text.c_str() + t.text.size()) line.fail(t, fmt::format("expected a number, got \"{}\"", t.text));
    return v;
}

std::set<std::uint32_t> parse_list(const Line& line, const Token& t) {
    std::set<std::uint32_t> out;
    std::string_view s = t.text;
    while (true) {
        std::size_t comma = s.find(',');
        std::string_view item = s.substr(0, comma);
        std::size_t dash = item.find('-');
        Token lo{std::string(item.substr(0, dash)), t.col, false};
        std::uint64_t a = parse_dec(line, lo);
        std::uint64_t b = a;
        if (dash != std::string_view::npos) b = parse_dec(line, Token{std::string(item.substr(dash + 1)), t.col, false});
        if (a > b) line.fail(t, fmt::format("descending range {}", item));
        if (b > 0xffffffffu) line.fail(t, "list value exceeds 32 bits");
        if (b - a > 1'000'000) line.fail(t, "list range too large");
        for (std::uint64_t v = a; v <= b; ++v) out.insert(static_cast<std::uint32_t>(v));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

std::string format_list(const std::set<std::uint32_t>& values) {
    std::string out;
    auto it = values.begin();
    while (it != values.end()) {
        std::uint32_t lo = *it;
        std::uint32_t hi = lo;
        ++it;
        while (it != values.end() && *it == hi + 1) hi = *it++;
        if (!out.empty()) out += ',';
        out += hi == lo ? fmt::format("{}", lo) : fmt::format("{}-{}", lo, hi);
    }
    return out;
}

std::pair<std::string, Token> split_kv(const Line& line, const Token& t) {
    std::size_t eq = t.text.find('=');
    if (t.quoted || eq == std::string::npos || eq == 0) line.fail(t, fmt::format("expected key=value, got \"{}\"", t.text));
    return {t.text.substr(0, eq), Token{t.text.substr(eq + 1), t.col + static_cast<int>(eq) + 1, false}};
}

std::string quote(std::string_view s) { return fmt::format("\"{}\"", s); }

}  // namespace cellsim::lex
