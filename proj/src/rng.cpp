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

#include "cellsim/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "cellsim/error.hpp"

namespace cellsim {

std::uint64_t Rng::below(std::uint64_t n) {
    // rejection keeps the result unbiased and platform independent
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

double Rng::normal() {
    double u1;
    do {
        u1 = uniform01();
    } while (u1 == 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::lognormal(double mu_log, double sigma_log) { return std::exp(mu_log + sigma_log * normal()); }

std::uint64_t Rng::stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = index + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return seed ^ z;
}

std::string Rng::describe() const { return fmt::format("{} seed={}", kAlgorithm, seed_); }

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

Rng Rng::restore_state(std::uint64_t seed, const std::string& state) {
    Rng r(seed);
    std::istringstream is(state);
    is >> r.engine_;
    if (!is) throw Error(Errc::InvariantViolation, "corrupt random engine state");
    return r;
}

}  // namespace cellsim
