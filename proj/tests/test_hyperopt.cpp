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

#include "gpff/hyperopt.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "gpff/rng.hpp"

namespace gpff {
namespace {

/// Smooth 1-d function sampled with known observation noise; the optimizer
/// should recover a noise level of the right magnitude.
Dataset make_sine_dataset(std::uint64_t seed, Eigen::Index M, double noise_std) {
    Rng rng(seed);
    Dataset data;
    data.Y = Matrix(M, 1);
    data.u = Vector(M);
    for (Eigen::Index i = 0; i < M; ++i) {
        data.Y(i, 0) = 6.0 * static_cast<double>(i) / static_cast<double>(M - 1);
        data.u[i] = std::sin(data.Y(i, 0)) + noise_std * rng.normal();
    }
    data.window.n_c = 0;
    data.window.n_ac = 0;
    return data;
}

OptimizerConfig quick_config() {
    OptimizerConfig cfg;
    cfg.max_iterations = 60;
    cfg.gradient_tolerance = 1e-3;
    cfg.restarts = 2;
    cfg.log_lower = -5.0;
    cfg.log_upper = 3.0;
    cfg.initial_sigma_n = 0.05;
    cfg.seed = 42;
    return cfg;
}

TEST(Hyperopt, ImprovesOnInitialPoint) {
    const Dataset data = make_sine_dataset(1, 40, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(0.5, Vector::Constant(1, 0.3));
    const OptimizerConfig cfg = quick_config();
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);

    const double initial = log_marginal_value(data, tmpl, cfg.initial_sigma_n);
    EXPECT_GE(res.lml, initial);
    EXPECT_NEAR(res.lml, log_marginal_value(data, res.kernel, res.sigma_n), 1e-9);
}

TEST(Hyperopt, RecoversNoiseScale) {
    const double noise = 0.1;
    const Dataset data = make_sine_dataset(2, 80, noise);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    cfg.max_iterations = 120;
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);
    // Maximum likelihood is a consistent but noisy estimator at M = 80;
    // a factor-of-three bracket is the meaningful check.
    EXPECT_GT(res.sigma_n, noise / 3.0);
    EXPECT_LT(res.sigma_n, noise * 3.0);
}

TEST(Hyperopt, DeterministicAcrossRuns) {
    const Dataset data = make_sine_dataset(3, 30, 0.05);
    const KernelSpec tmpl = KernelSpec::matern32(0.8, Vector::Constant(1, 0.5));
    const OptimizerConfig cfg = quick_config();
    const OptimizeResult a = optimize_hyperparameters(data, tmpl, cfg);
    const OptimizeResult b = optimize_hyperparameters(data, tmpl, cfg);

    EXPECT_EQ(a.kernel.params_vector(), b.kernel.params_vector());
    EXPECT_EQ(a.sigma_n, b.sigma_n);
    EXPECT_EQ(a.lml, b.lml);
    EXPECT_EQ(a.best_restart, b.best_restart);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].lml, b.trace[i].lml);
        EXPECT_EQ(a.trace[i].params, b.trace[i].params);
    }
}

TEST(Hyperopt, SeedChangesRestartPoints) {
    const Dataset data = make_sine_dataset(4, 30, 0.05);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    cfg.restarts = 3;
    const OptimizeResult a = optimize_hyperparameters(data, tmpl, cfg);
    cfg.seed = 43;
    const OptimizeResult b = optimize_hyperparameters(data, tmpl, cfg);

    // Restart 0 starts from the template either way; the random restarts'
    // initial points (iteration 0) must differ between seeds.
    auto initial_point = [](const OptimizeResult& r, int restart) {
        for (const TraceEntry& e : r.trace) {
            if (e.restart == restart && e.iteration == 0) return e.params;
        }
        return Vector();
    };
    EXPECT_EQ(initial_point(a, 0), initial_point(b, 0));
    bool any_different = false;
    for (int restart = 1; restart < cfg.restarts; ++restart) {
        if (initial_point(a, restart) != initial_point(b, restart)) any_different = true;
    }
    EXPECT_TRUE(any_different);
}

TEST(Hyperopt, RespectsBounds) {
    const Dataset data = make_sine_dataset(5, 25, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    cfg.log_lower = -1.0;
    cfg.log_upper = 1.0;
    cfg.restarts = 3;
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);

    const double lo = std::exp(cfg.log_lower) * (1.0 - 1e-12);
    const double hi = std::exp(cfg.log_upper) * (1.0 + 1e-12);
    for (const TraceEntry& e : res.trace) {
        for (Eigen::Index p = 0; p < e.params.size(); ++p) {
            EXPECT_GE(e.params[p], lo);
            EXPECT_LE(e.params[p], hi);
        }
    }
}

TEST(Hyperopt, PerParameterBoundOverrides) {
    const Dataset data = make_sine_dataset(6, 25, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    // Pin sigma_n (last coordinate) into [0.2, 0.3] while the kernel
    // parameters keep a wide box.
    cfg.lower_override = Vector(3);
    cfg.lower_override << -5.0, -5.0, std::log(0.2);
    cfg.upper_override = Vector(3);
    cfg.upper_override << 3.0, 3.0, std::log(0.3);
    cfg.initial_sigma_n = 0.25;
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);
    EXPECT_GE(res.sigma_n, 0.2 * (1.0 - 1e-12));
    EXPECT_LE(res.sigma_n, 0.3 * (1.0 + 1e-12));
}

TEST(Hyperopt, WrongSizeOverrideRejected) {
    OptimizerConfig cfg = quick_config();
    cfg.lower_override = Vector::Zero(2);  // needs num_params + 1 = 3
    cfg.upper_override = Vector::Zero(2);
    const Dataset data = make_sine_dataset(7, 10, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    try {
        optimize_hyperparameters(data, tmpl, cfg);
        FAIL() << "expected invalid-input error";
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::invalid_input);
    }
}

TEST(Hyperopt, BestRestartHasMaximalValue) {
    const Dataset data = make_sine_dataset(8, 30, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    cfg.restarts = 4;
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);
    ASSERT_EQ(res.restart_lml.size(), 4u);
    for (double v : res.restart_lml) {
        EXPECT_LE(v, res.restart_lml[static_cast<std::size_t>(res.best_restart)]);
    }
    EXPECT_EQ(res.lml, res.restart_lml[static_cast<std::size_t>(res.best_restart)]);
}

TEST(Hyperopt, AllRestartsFailingThrows) {
    const Dataset data = make_sine_dataset(9, 10, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    // sigma_f^2 = exp(2 * 359) overflows in the Gram matrix, so every
    // restart's initial evaluation fails its factorization.
    cfg.lower_override = Vector::Constant(3, 359.0);
    cfg.upper_override = Vector::Constant(3, 360.0);
    cfg.initial_sigma_n = 1e100;
    try {
        optimize_hyperparameters(data, tmpl, cfg);
        FAIL() << "expected optimization-failed error";
    } catch (const OptimizationFailedError& e) {
        EXPECT_EQ(e.category(), ErrorCategory::optimization_failed);
    }
}

TEST(Hyperopt, TraceStartsEachRestartAtIterationZero) {
    const Dataset data = make_sine_dataset(10, 20, 0.1);
    const KernelSpec tmpl = KernelSpec::squared_exponential(1.0, Vector::Constant(1, 1.0));
    OptimizerConfig cfg = quick_config();
    cfg.restarts = 2;
    const OptimizeResult res = optimize_hyperparameters(data, tmpl, cfg);

    std::vector<int> seen_restarts;
    for (const TraceEntry& e : res.trace) {
        if (seen_restarts.empty() || seen_restarts.back() != e.restart) {
            seen_restarts.push_back(e.restart);
            EXPECT_EQ(e.iteration, 0);
        }
        EXPECT_EQ(e.params.size(), tmpl.num_params() + 1);
    }
    ASSERT_EQ(seen_restarts.size(), 2u);
    EXPECT_EQ(seen_restarts[0], 0);
    EXPECT_EQ(seen_restarts[1], 1);
}

TEST(Hyperopt, TraceCsvFormat) {
    std::vector<TraceEntry> trace(2);
    trace[0].restart = 0;
    trace[0].iteration = 0;
    trace[0].lml = -12.5;
    trace[0].grad_norm = 3.0;
    trace[0].params = Vector::Constant(3, 0.5);
    trace[1] = trace[0];
    trace[1].iteration = 1;
    trace[1].lml = -10.0;

    std::ostringstream os;
    write_trace_csv(os, trace, {"sigma_f", "l_0", "sigma_n"});
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "restart,iteration,lml,grad_norm,sigma_f,l_0,sigma_n");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 4), "0,0,");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 4), "0,1,");
}

TEST(Hyperopt, ConfigValidation) {
    OptimizerConfig cfg = quick_config();
    cfg.max_iterations = -1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick_config();
    cfg.log_lower = 2.0;
    cfg.log_upper = -2.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick_config();
    cfg.restarts = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = quick_config();
    cfg.initial_sigma_n = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace gpff
