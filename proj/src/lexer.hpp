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
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cellsim/error.hpp"

namespace cellsim::lex {

struct Token {
    std::string text;
    int col = 1;
    bool quoted = false;
};

struct Line {
    int number = 0;
    std::vector<Token> tokens;

    [[noreturn]] void fail(const Token& at, const std::string& msg) const { throw SyntaxError(number, at.col, msg); }
    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(number, tokens.empty() ? 1 : tokens.front().col, msg);
    }
    void expect_args(std::size_t min, std::size_t max) const;
};

/// Whitespace-separated tokens; `#` starts a comment outside double quotes;
/// quoted tokens have no escapes. Blank lines are dropped.
std::vector<Line> tokenize(std::string_view text);

/// Hex with optional 0x prefix.
std::uint64_t parse_hex(const Line& line, const Token& t);
std::uint64_t parse_dec(const Line& line, const Token& t);
/// "0x10" or "16"
std::uint64_t parse_int(const Line& line, const Token& t);
double parse_double(const Line& line, const Token& t);

/// "2,3", "0-3", "32-40,45"
std::set<std::uint32_t> parse_list(const Line& line, const Token& t);
std::string format_list(const std::set<std::uint32_t>& values);

/// Splits "key=value"; fails if no '='.
std::pair<std::string, Token> split_kv(const Line& line, const Token& t);

std::string quote(std::string_view s);

}  // namespace cellsim::lex
