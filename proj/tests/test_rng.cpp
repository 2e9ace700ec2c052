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

#include "gpff/rng.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

namespace gpff {
namespace {

TEST(DeriveSeed, DeterministicAndDistinct) {
    EXPECT_EQ(derive_seed(1, seed_tag::training, 0), derive_seed(1, seed_tag::training, 0));

    std::set<std::uint64_t> seen;
    for (std::uint64_t root : {0ull, 1ull, 42ull}) {
        for (std::uint64_t tag :
             {seed_tag::training, seed_tag::evaluation, seed_tag::optimizer, seed_tag::convergence}) {
            for (std::uint64_t index : {0ull, 1ull, 2ull, 999ull}) {
                seen.insert(derive_seed(root, tag, index));
            }
        }
    }
    EXPECT_EQ(seen.size(), 3u * 4u * 4u);
}

TEST(DeriveSeed, NearbyInputsDecorrelated) {
    // Consecutive indices must not give consecutive seeds.
    const std::uint64_t a = derive_seed(7, seed_tag::training, 0);
    const std::uint64_t b = derive_seed(7, seed_tag::training, 1);
    EXPECT_GT((a > b ? a - b : b - a), 1000ull);
}

TEST(Rng, SameSeedSameSequence) {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
    Rng c(123), d(124);
    int diffs = 0;
    for (int i = 0; i < 100; ++i) diffs += (c.uniform() != d.uniform());
    EXPECT_GT(diffs, 90);
}

TEST(Rng, UniformStaysInRange) {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double x = rng.uniform();
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-3.0, 7.0);
        EXPECT_GE(x, -3.0);
        EXPECT_LT(x, 7.0);
    }
}

TEST(Rng, NormalHasUnitMoments) {
    Rng rng(99);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(Rng, ScaledNormal) {
    Rng a(7), b(7);
    const double x = a.normal();
    EXPECT_DOUBLE_EQ(b.normal(2.0, 3.0), 2.0 + 3.0 * x);
}

}  // namespace
}  // namespace gpff
