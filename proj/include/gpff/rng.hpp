/*
 * Copyright 2026 the gpff authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GPFF_RNG_HPP
#define GPFF_RNG_HPP

#include <cstdint>
#include <random>

namespace gpff {

/// splitmix64 finalizer. Used to derive independent child seeds from a root
/// seed; the mixing makes nearby (root, tag, index) triples uncorrelated.
std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of purpose `tag` under `root`.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag, std::uint64_t index);

/// Purpose tags for seed derivation. Every random stream in the library is
/// keyed by (root seed, tag, index) so runs are reproducible bit for bit.
namespace seed_tag {
constexpr std::uint64_t training = 1;
constexpr std::uint64_t evaluation = 2;
constexpr std::uint64_t optimizer = 3;
constexpr std::uint64_t convergence = 4;
}  // namespace seed_tag

/// Deterministic RNG. mt19937_64 with explicit output transforms: the
/// standard distributions are implementation-defined, so uniform and normal
/// draws are realized by hand (53-bit mantissa map, Box-Muller) to keep
/// sequences identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1).
    double uniform();

    /// Uniform draw in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal draw.
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gpff

#endif
