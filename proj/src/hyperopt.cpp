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

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gpff/csv.hpp"
#include "gpff/rng.hpp"

namespace gpff {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Objective in log space: h(z) = -LML(exp(z)), minimized.
struct Objective {
    const Dataset& data;
    const KernelSpec& kernel_template;
    Eigen::Index P;  // kernel parameter count; z has P + 1 entries

    double value(const Vector& z) const {
        const Vector theta = z.array().exp();
        const KernelSpec k = kernel_template.with_params_vector(theta.head(P));
        return -log_marginal_value(data, k, theta[P]);
    }

    /// Value and gradient; d h / d z = -theta .* d LML / d theta.
    double value_grad(const Vector& z, Vector& grad) const {
        const Vector theta = z.array().exp();
        const KernelSpec k = kernel_template.with_params_vector(theta.head(P));
        const LmlResult lml = log_marginal_likelihood(data, k, theta[P]);
        grad = -(theta.array() * lml.gradient.array()).matrix();
        return -lml.value;
    }
};

Vector clip(const Vector& z, const Vector& lo, const Vector& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

/// Gradient with bound-blocked components zeroed; its norm is the
/// stationarity measure on the box.
Vector projected_gradient(const Vector& z, const Vector& grad, const Vector& lo,
                          const Vector& hi) {
    Vector pg = grad;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if ((z[i] <= lo[i] && grad[i] > 0.0) || (z[i] >= hi[i] && grad[i] < 0.0)) pg[i] = 0.0;
    }
    return pg;
}

struct RestartOutcome {
    bool initial_failed = false;
    bool converged = false;
    double value = kInf;  // objective (negated LML)
    Vector z;
};

/// Projected L-BFGS descent with Armijo backtracking. Candidate evaluations
/// that throw (Cholesky failure even with jitter) are treated as rejected
/// steps; a throwing initial point fails the restart.
RestartOutcome minimize(const Objective& f, Vector z, const Vector& lo, const Vector& hi,
                        int max_iterations, double tolerance, int restart_index,
                        std::vector<TraceEntry>& trace) {
    constexpr int kMemory = 8;
    constexpr double kArmijo = 1e-4;

    RestartOutcome out;
    out.z = clip(z, lo, hi);

    const auto record = [&](int iteration, double value, double grad_norm) {
        TraceEntry e;
        e.restart = restart_index;
        e.iteration = iteration;
        e.lml = -value;
        e.grad_norm = grad_norm;
        e.params = out.z.array().exp();
        trace.push_back(std::move(e));
    };

    Vector grad(out.z.size());
    try {
        out.value = f.value_grad(out.z, grad);
        if (!std::isfinite(out.value)) throw Error(ErrorCategory::ill_conditioned, "non-finite");
    } catch (const Error&) {
        out.initial_failed = true;
        return out;
    }
    double pg_norm = projected_gradient(out.z, grad, lo, hi).norm();
    record(0, out.value, pg_norm);

    std::deque<std::pair<Vector, Vector>> memory;  // (s, y) pairs
    for (int it = 1; it <= max_iterations; ++it) {
        if (pg_norm <= tolerance) {
            out.converged = true;
            break;
        }

        // Two-loop recursion for the L-BFGS direction.
        Vector d = -grad;
        if (!memory.empty()) {
            std::vector<double> alpha(memory.size());
            for (std::size_t i = memory.size(); i-- > 0;) {
                const auto& [s, y] = memory[i];
                alpha[i] = s.dot(d) / y.dot(s);
                d -= alpha[i] * y;
            }
            const auto& [s_last, y_last] = memory.back();
            d *= s_last.dot(y_last) / y_last.dot(y_last);
            for (std::size_t i = 0; i < memory.size(); ++i) {
                const auto& [s, y] = memory[i];
                d += (alpha[i] - y.dot(d) / y.dot(s)) * s;
            }
        }
        if (!d.allFinite() || d.dot(grad) >= 0.0) {
            memory.clear();
            d = -grad;
        }
        if (memory.empty()) {
            // Steepest descent has no curvature scaling; cap the trial step
            // at unit log-space length so one move cannot cross the box.
            const double n = d.norm();
            if (n > 1.0) d /= n;
        }

        // Backtracking on the projected step.
        double step = 1.0;
        Vector z_next;
        double value_next = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            z_next = clip(out.z + step * d, lo, hi);
            const Vector dz = z_next - out.z;
            if (dz.norm() == 0.0) break;
            try {
                value_next = f.value(z_next);
            } catch (const Error&) {
                value_next = kInf;
            }
            if (std::isfinite(value_next) &&
                value_next <= out.value + kArmijo * grad.dot(dz)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (memory.empty()) break;  // stuck even on steepest descent
            memory.clear();
            continue;
        }

        Vector grad_next(out.z.size());
        try {
            const double check = f.value_grad(z_next, grad_next);
            value_next = check;
        } catch (const Error&) {
            break;  // accepted value exists but the gradient does not; stop here
        }

        const Vector s = z_next - out.z;
        const Vector y = grad_next - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            memory.emplace_back(s, y);
            if (memory.size() > kMemory) memory.pop_front();
        }

        out.z = z_next;
        out.value = value_next;
        grad = grad_next;
        pg_norm = projected_gradient(out.z, grad, lo, hi).norm();
        record(it, out.value, pg_norm);
        if (pg_norm <= tolerance) {
            out.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

void OptimizerConfig::validate() const {
    if (max_iterations < 1) {
        throw Error(ErrorCategory::invalid_input, "optimizer needs at least one iteration");
    }
    if (!(gradient_tolerance > 0.0) || !std::isfinite(gradient_tolerance)) {
        throw Error(ErrorCategory::invalid_input, "gradient tolerance must be positive");
    }
    if (restarts < 1) {
        throw Error(ErrorCategory::invalid_input, "optimizer needs at least one restart");
    }
    if (!(log_lower < log_upper) || !std::isfinite(log_lower) || !std::isfinite(log_upper)) {
        throw Error(ErrorCategory::invalid_input, "log bounds must be finite with lower < upper");
    }
    if (lower_override.size() != upper_override.size()) {
        throw Error(ErrorCategory::invalid_input, "bound overrides must have matching sizes");
    }
    for (Eigen::Index i = 0; i < lower_override.size(); ++i) {
        if (!(lower_override[i] < upper_override[i])) {
            throw Error(ErrorCategory::invalid_input,
                        "bound override " + std::to_string(i) + " has lower >= upper");
        }
    }
    if (!(initial_sigma_n > 0.0) || !std::isfinite(initial_sigma_n)) {
        throw Error(ErrorCategory::invalid_input, "initial sigma_n must be positive");
    }
}

OptimizeResult optimize_hyperparameters(const Dataset& data, const KernelSpec& kernel_template,
                                        const OptimizerConfig& config) {
    config.validate();
    data.validate();
    const Eigen::Index P = kernel_template.num_params();
    const Eigen::Index n = P + 1;

    Vector lo, hi;
    if (config.lower_override.size() > 0) {
        if (config.lower_override.size() != n) {
            throw Error(ErrorCategory::invalid_input,
                        "bound overrides must cover all " + std::to_string(n) + " parameters");
        }
        lo = config.lower_override;
        hi = config.upper_override;
    } else {
        lo = Vector::Constant(n, config.log_lower);
        hi = Vector::Constant(n, config.log_upper);
    }

    Vector z0(n);
    z0.head(P) = kernel_template.params_vector().array().log();
    z0[P] = std::log(config.initial_sigma_n);
    z0 = clip(z0, lo, hi);

    const Objective objective{data, kernel_template, P};
    OptimizeResult result;
    result.restart_lml.assign(static_cast<std::size_t>(config.restarts), -kInf);
    double best_value = kInf;
    Vector best_z;
    bool best_converged = false;
    int best_restart = -1;

    for (int r = 0; r < config.restarts; ++r) {
        Vector z_init = z0;
        if (r > 0) {
            Rng rng(derive_seed(config.seed, seed_tag::optimizer, static_cast<std::uint64_t>(r)));
            for (Eigen::Index i = 0; i < n; ++i) z_init[i] = rng.uniform(lo[i], hi[i]);
        }
        RestartOutcome out = minimize(objective, z_init, lo, hi, config.max_iterations,
                                      config.gradient_tolerance, r, result.trace);
        if (out.initial_failed) continue;
        result.restart_lml[static_cast<std::size_t>(r)] = -out.value;
        if (out.value < best_value) {
            best_value = out.value;
            best_z = out.z;
            best_converged = out.converged;
            best_restart = r;
        }
    }

    if (best_restart < 0) {
        throw OptimizationFailedError(
            "hyperparameter selection failed: every restart's initial point is unusable",
            std::move(result.trace));
    }

    const Vector theta = best_z.array().exp();
    result.kernel = kernel_template.with_params_vector(theta.head(P));
    result.sigma_n = theta[P];
    result.lml = -best_value;
    result.converged = best_converged;
    result.best_restart = best_restart;
    return result;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace,
                     const std::vector<std::string>& param_names) {
    os << "restart,iteration,lml,grad_norm";
    for (const std::string& name : param_names) os << "," << name;
    os << "\n";
    for (const TraceEntry& e : trace) {
        os << e.restart << "," << e.iteration << "," << csv::format_double(e.lml) << ","
           << csv::format_double(e.grad_norm);
        for (Eigen::Index i = 0; i < e.params.size(); ++i) {
            os << "," << csv::format_double(e.params[i]);
        }
        os << "\n";
    }
}

}  // namespace gpff
