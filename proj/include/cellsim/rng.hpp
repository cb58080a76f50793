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
#include <random>
#include <string>

namespace cellsim {

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed
/// by the C++ standard) plus hand-written transforms, because the standard
/// distributions are implementation-defined. Same seed, same numbers, on
/// every platform.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    /// [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Box-Muller, one normal per call (the partner value is discarded so the
    /// stream position depends only on the number of calls).
    double normal();
    double lognormal(double mu_log, double sigma_log);

    /// Independent stream for scenario `index` of a run seeded with `seed`:
    /// seed XOR splitmix64(index).
    static std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

    std::string describe() const;

    /// Engine state as text (the standard's operator<< form) for snapshots.
    std::string save_state() const;
    static Rng restore_state(std::uint64_t seed, const std::string& state);

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace cellsim
