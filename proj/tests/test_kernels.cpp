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

#include "gpff/kernels.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "gpff/rng.hpp"

namespace gpff {
namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Matrix random_windows(Rng& rng, Eigen::Index n, Eigen::Index dim, double scale = 1.0) {
    Matrix out(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) out(i, j) = rng.uniform(-scale, scale);
    }
    return out;
}

KernelSpec random_leaf(Rng& rng, KernelVariant variant, Eigen::Index dim) {
    const double sigma_f = std::exp(rng.uniform(-1.0, 1.0));
    Vector ls(dim);
    for (Eigen::Index i = 0; i < dim; ++i) ls[i] = std::exp(rng.uniform(-1.0, 1.0));
    switch (variant) {
        case KernelVariant::squared_exponential:
            return KernelSpec::squared_exponential(sigma_f, ls);
        case KernelVariant::matern32:
            return KernelSpec::matern32(sigma_f, ls);
        case KernelVariant::periodic: {
            Vector periods(dim);
            for (Eigen::Index i = 0; i < dim; ++i) periods[i] = std::exp(rng.uniform(-0.5, 1.0));
            return KernelSpec::periodic(sigma_f, ls, periods);
        }
        case KernelVariant::sum:
            break;
    }
    return KernelSpec::sum({random_leaf(rng, KernelVariant::squared_exponential, dim),
                            random_leaf(rng, KernelVariant::matern32, dim)});
}

const KernelVariant kAllVariants[] = {KernelVariant::squared_exponential,
                                      KernelVariant::matern32, KernelVariant::periodic,
                                      KernelVariant::sum};

TEST(SquaredExponential, MatchesClosedForm) {
    const KernelSpec k = KernelSpec::squared_exponential(1.0, vec({1.0}));
    EXPECT_DOUBLE_EQ(eval(k, vec({0.0}), vec({1.0})), std::exp(-0.5));
    EXPECT_DOUBLE_EQ(eval(k, vec({0.0}), vec({2.0})), std::exp(-2.0));

    const KernelSpec k2 = KernelSpec::squared_exponential(2.0, vec({0.5, 2.0}));
    const double rho = std::pow(1.0 / 0.5, 2) + std::pow(3.0 / 2.0, 2);
    EXPECT_DOUBLE_EQ(eval(k2, vec({1.0, 4.0}), vec({0.0, 1.0})), 4.0 * std::exp(-rho / 2.0));
}

TEST(Matern32, MatchesClosedForm) {
    const KernelSpec k = KernelSpec::matern32(1.0, vec({1.0}));
    const double s3 = std::sqrt(3.0);
    EXPECT_DOUBLE_EQ(eval(k, vec({0.0}), vec({1.0})), (1.0 + s3) * std::exp(-s3));

    const KernelSpec k2 = KernelSpec::matern32(0.7, vec({0.25}));
    const double tau = std::sqrt(std::pow(0.5 / 0.25, 2));
    EXPECT_DOUBLE_EQ(eval(k2, vec({0.5}), vec({0.0})),
                     0.49 * (1.0 + s3 * tau) * std::exp(-s3 * tau));
}

TEST(Periodic, MatchesClosedForm) {
    const KernelSpec k = KernelSpec::periodic(1.0, vec({1.0}), vec({1.0}));
    const double s = std::sin(M_PI * 0.25);
    EXPECT_DOUBLE_EQ(eval(k, vec({0.25}), vec({0.0})), std::exp(-0.5 * s * s));

    // One full period apart is indistinguishable from zero distance.
    EXPECT_NEAR(eval(k, vec({1.0}), vec({0.0})), 1.0, 1e-15);
}

TEST(Kernels, ValueAtZeroDistanceIsPriorVariance) {
    Rng rng(11);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 3);
        const Vector a = vec({0.3, -0.2, 0.9});
        EXPECT_DOUBLE_EQ(eval(k, a, a), k.prior_variance()) << to_string(variant);
    }
}

TEST(Kernels, SymmetricInArguments) {
    Rng rng(12);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 4);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix w = random_windows(rng, 2, 4);
            // Exact: (a - b)^2 and (b - a)^2 are the same doubles.
            EXPECT_EQ(eval(k, w.row(0), w.row(1)), eval(k, w.row(1), w.row(0)))
                << to_string(variant);
        }
    }
}

TEST(Kernels, StationaryUnderCommonShift) {
    Rng rng(13);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 3);
        const Matrix w = random_windows(rng, 2, 3);
        const Vector shift = random_windows(rng, 1, 3).row(0);
        const double base = eval(k, w.row(0), w.row(1));
        const double shifted = eval(k, w.row(0) + shift.transpose(), w.row(1) + shift.transpose());
        EXPECT_NEAR(shifted, base, 1e-9 * std::abs(base) + 1e-12) << to_string(variant);
    }
}

TEST(Kernels, DecaysWithDistance) {
    const KernelSpec se = KernelSpec::squared_exponential(1.0, vec({1.0}));
    const KernelSpec m32 = KernelSpec::matern32(1.0, vec({1.0}));
    EXPECT_LT(eval(se, vec({0.0}), vec({50.0})), 1e-100);
    EXPECT_LT(eval(m32, vec({0.0}), vec({50.0})), 1e-30);
    EXPECT_GT(eval(m32, vec({0.0}), vec({50.0})), 0.0);
}

TEST(Kernels, GramMatchesEvalBitForBit) {
    Rng rng(14);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 5);
        const Matrix A = random_windows(rng, 7, 5);
        const Matrix B = random_windows(rng, 4, 5);
        const Matrix G = gram(k, A, B);
        ASSERT_EQ(G.rows(), 7);
        ASSERT_EQ(G.cols(), 4);
        for (Eigen::Index i = 0; i < 7; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                EXPECT_EQ(G(i, j), eval(k, A.row(i), B.row(j))) << to_string(variant);
            }
        }
    }
}

TEST(Kernels, SymmetricGramIsExactlySymmetric) {
    Rng rng(15);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 4);
        const Matrix A = random_windows(rng, 9, 4);
        const Matrix G = gram(k, A, A);
        for (Eigen::Index i = 0; i < 9; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                EXPECT_EQ(G(i, j), G(j, i)) << to_string(variant);
            }
            EXPECT_DOUBLE_EQ(G(i, i), k.prior_variance());
        }
    }
}

TEST(Kernels, GramPositiveSemidefinite) {
    Rng rng(16);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 6);
        const Matrix A = random_windows(rng, 30, 6);
        const Matrix G = gram(k, A, A);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * 30 * k.prior_variance())
            << to_string(variant);
    }
}

/// Central finite differences of the kernel value in each hyperparameter.
Vector fd_gradient(const KernelSpec& k, const Vector& a, const Vector& b) {
    const Vector theta = k.params_vector();
    Vector grad(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double h = 1e-6 * std::abs(theta[j]);
        Vector up = theta, dn = theta;
        up[j] += h;
        dn[j] -= h;
        grad[j] = (eval(k.with_params_vector(up), a, b) - eval(k.with_params_vector(dn), a, b)) /
                  (2.0 * h);
    }
    return grad;
}

TEST(Kernels, HyperparameterGradientsMatchFiniteDifferences) {
    Rng rng(17);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 3);
        const Matrix A = random_windows(rng, 6, 3);
        const std::vector<Matrix> grads = grad_hyper(k, A);
        ASSERT_EQ(static_cast<Eigen::Index>(grads.size()), k.num_params());
        for (int trial = 0; trial < 5; ++trial) {
            const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform(0.0, 6.0));
            const Eigen::Index j = static_cast<Eigen::Index>(rng.uniform(0.0, 6.0));
            const Vector fd = fd_gradient(k, A.row(i), A.row(j));
            for (Eigen::Index p = 0; p < k.num_params(); ++p) {
                const double scale = std::max({std::abs(fd[p]), std::abs(grads[p](i, j)), 1e-8});
                EXPECT_NEAR(grads[p](i, j), fd[p], 1e-5 * scale)
                    << to_string(variant) << " param " << p;
            }
        }
    }
}

TEST(Kernels, GradientMatrixSymmetric) {
    Rng rng(18);
    const KernelSpec k = random_leaf(rng, KernelVariant::matern32, 3);
    const Matrix A = random_windows(rng, 8, 3);
    for (const Matrix& g : grad_hyper(k, A)) {
        EXPECT_EQ(g, Matrix(g.transpose()));
    }
}

TEST(Kernels, WeightedGradSumMatchesMaterializedGradients) {
    Rng rng(19);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 4);
        const Matrix A = random_windows(rng, 10, 4);
        Matrix W = random_windows(rng, 10, 10);  // not symmetric on purpose
        const Vector fused = weighted_grad_sum(k, A, W);
        const std::vector<Matrix> grads = grad_hyper(k, A);
        ASSERT_EQ(static_cast<Eigen::Index>(grads.size()), fused.size());
        for (Eigen::Index p = 0; p < fused.size(); ++p) {
            const double direct = (W.array() * grads[static_cast<std::size_t>(p)].array()).sum();
            EXPECT_NEAR(fused[p], direct, 1e-12 * std::max(1.0, std::abs(direct)))
                << to_string(variant);
        }
    }
}

TEST(SumKernel, AddsLeafValues) {
    const KernelSpec se = KernelSpec::squared_exponential(1.2, vec({0.7, 1.1}));
    const KernelSpec m32 = KernelSpec::matern32(0.4, vec({2.0, 0.3}));
    const KernelSpec both = KernelSpec::sum({se, m32});
    const Vector a = vec({0.1, -0.5});
    const Vector b = vec({1.0, 0.25});
    EXPECT_DOUBLE_EQ(eval(both, a, b), eval(se, a, b) + eval(m32, a, b));
    EXPECT_DOUBLE_EQ(both.prior_variance(), se.prior_variance() + m32.prior_variance());
}

TEST(SumKernel, RequiresTwoLeavesOfSameDimension) {
    const KernelSpec se1 = KernelSpec::squared_exponential(1.0, vec({1.0}));
    const KernelSpec se2 = KernelSpec::squared_exponential(1.0, vec({1.0, 1.0}));
    EXPECT_THROW(KernelSpec::sum({se1}), Error);
    EXPECT_THROW(KernelSpec::sum({}), Error);
    EXPECT_THROW(KernelSpec::sum({se1, se2}), Error);
    // Nested sums are rejected: terms must be leaves.
    const KernelSpec flat = KernelSpec::sum({se1, KernelSpec::matern32(1.0, vec({1.0}))});
    EXPECT_THROW(KernelSpec::sum({flat, se1}), Error);
}

TEST(KernelSpec, ParamsVectorRoundTrip) {
    Rng rng(20);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 3);
        const Vector theta = k.params_vector();
        ASSERT_EQ(theta.size(), k.num_params());
        const KernelSpec k2 = k.with_params_vector(theta);
        EXPECT_EQ(k2.params_vector(), theta);
        const Matrix w = random_windows(rng, 2, 3);
        EXPECT_EQ(eval(k, w.row(0), w.row(1)), eval(k2, w.row(0), w.row(1)));
    }
}

TEST(KernelSpec, ParamNamesMatchLayout) {
    const KernelSpec per = KernelSpec::periodic(1.0, vec({1.0, 1.0}), vec({2.0, 2.0}));
    const auto names = per.param_names();
    ASSERT_EQ(names.size(), 5u);
    EXPECT_EQ(names[0], "sigma_f");
    EXPECT_EQ(names[1], "l_0");
    EXPECT_EQ(names[2], "l_1");
    EXPECT_EQ(names[3], "p_0");
    EXPECT_EQ(names[4], "p_1");

    const KernelSpec both = KernelSpec::sum(
        {KernelSpec::squared_exponential(1.0, vec({1.0})), KernelSpec::matern32(1.0, vec({1.0}))});
    const auto sum_names = both.param_names();
    ASSERT_EQ(sum_names.size(), 4u);
    EXPECT_EQ(sum_names[0], "t0.sigma_f");
    EXPECT_EQ(sum_names[3], "t1.l_0");
}

TEST(KernelSpec, JsonRoundTrip) {
    Rng rng(21);
    for (KernelVariant variant : kAllVariants) {
        const KernelSpec k = random_leaf(rng, variant, 3);
        const KernelSpec k2 = KernelSpec::from_json(k.to_json());
        EXPECT_EQ(k2.variant(), k.variant());
        EXPECT_EQ(k2.dim(), k.dim());
        EXPECT_EQ(k2.params_vector(), k.params_vector());
    }
}

TEST(KernelSpec, JsonRejectsUnknownKeys) {
    nlohmann::json j = KernelSpec::squared_exponential(1.0, vec({1.0})).to_json();
    j["bogus"] = 1;
    EXPECT_THROW(KernelSpec::from_json(j), Error);
}

TEST(KernelSpec, RejectsInvalidHyperparameters) {
    EXPECT_THROW(KernelSpec::squared_exponential(0.0, vec({1.0})), Error);
    EXPECT_THROW(KernelSpec::squared_exponential(-1.0, vec({1.0})), Error);
    EXPECT_THROW(KernelSpec::squared_exponential(1.0, vec({0.0})), Error);
    EXPECT_THROW(KernelSpec::squared_exponential(1.0, Vector()), Error);
    EXPECT_THROW(KernelSpec::periodic(1.0, vec({1.0}), vec({0.0})), Error);
    EXPECT_THROW(KernelSpec::periodic(1.0, vec({1.0}), vec({1.0, 1.0})), Error);
    try {
        KernelSpec::matern32(1.0, vec({-2.0}));
        FAIL() << "expected invalid-input error";
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::invalid_input);
    }
}

TEST(KernelSpec, EvalRejectsBadWindows) {
    const KernelSpec k = KernelSpec::squared_exponential(1.0, vec({1.0, 1.0}));
    EXPECT_THROW(eval(k, vec({1.0}), vec({1.0, 2.0})), Error);
    EXPECT_THROW(eval(k, vec({1.0, std::nan("")}), vec({1.0, 2.0})), Error);
    const Matrix a = Matrix::Zero(2, 3);
    EXPECT_THROW(gram(k, a, a), Error);
}

TEST(KernelSpec, LeafAccessorsThrowOnWrongKind) {
    const KernelSpec leaf = KernelSpec::squared_exponential(1.0, vec({1.0}));
    const KernelSpec both = KernelSpec::sum({leaf, KernelSpec::matern32(1.0, vec({1.0}))});
    EXPECT_THROW(leaf.terms(), Error);
    EXPECT_THROW(both.params(), Error);
    EXPECT_EQ(both.terms().size(), 2u);
    EXPECT_DOUBLE_EQ(leaf.params().sigma_f, 1.0);
}

TEST(KernelVariants, StringsRoundTrip) {
    for (KernelVariant variant : kAllVariants) {
        EXPECT_EQ(kernel_variant_from_string(to_string(variant)), variant);
    }
    EXPECT_EQ(kernel_variant_from_string("se"), KernelVariant::squared_exponential);
    EXPECT_THROW(kernel_variant_from_string("rbf"), Error);
}

}  // namespace
}  // namespace gpff
