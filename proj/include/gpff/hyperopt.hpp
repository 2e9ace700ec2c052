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

#ifndef GPFF_HYPEROPT_HPP
#define GPFF_HYPEROPT_HPP

#include <cstdint>
#include <ostream>
#include <vector>

#include "gpff/gp.hpp"

namespace gpff {

/// Settings for maximum-likelihood hyperparameter selection. Optimization
/// runs in log-parameter space (positivity for free) over the box
/// [log_lower, log_upper] per coordinate; the override vectors replace the
/// scalar box per-parameter when non-empty (size num_params + 1, sigma_n
/// last). Restart 0 starts from the kernel template's own parameters and
/// `initial_sigma_n`; restart r > 0 draws a log-uniform point from the box.
struct OptimizerConfig {
    int max_iterations = 100;
    double gradient_tolerance = 1e-5;
    int restarts = 4;
    double log_lower = -6.0;
    double log_upper = 6.0;
    Vector lower_override;  ///< optional per-parameter log lower bounds
    Vector upper_override;  ///< optional per-parameter log upper bounds
    double initial_sigma_n = 1e-2;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One line of the optimization trace: objective and gradient norm at each
/// accepted iterate. iteration 0 is the restart's initial point.
struct TraceEntry {
    int restart = 0;
    int iteration = 0;
    double lml = 0.0;
    double grad_norm = 0.0;
    Vector params;  ///< natural (not log) parameters, sigma_n last
};

struct OptimizeResult {
    /// Template with the best parameters applied.
    KernelSpec kernel = KernelSpec::squared_exponential(1.0, Vector::Ones(1));
    double sigma_n = 0.0;
    double lml = 0.0;
    bool converged = false;  ///< gradient tolerance reached on the best restart
    int best_restart = 0;
    std::vector<double> restart_lml;  ///< best value per restart (-inf = failed)
    std::vector<TraceEntry> trace;
};

/// Thrown when every restart fails its initial evaluation; carries the
/// trace gathered so far.
class OptimizationFailedError : public Error {
  public:
    OptimizationFailedError(const std::string& msg, std::vector<TraceEntry> trace)
        : Error(ErrorCategory::optimization_failed, msg), trace_(std::move(trace)) {}

    const std::vector<TraceEntry>& trace() const { return trace_; }

  private:
    std::vector<TraceEntry> trace_;
};

/// Maximizes the log marginal likelihood over kernel parameters and sigma_n
/// by projected L-BFGS with Armijo backtracking in log space. Deterministic
/// under a fixed seed: restart r's initial point depends only on
/// (config.seed, r). Returns the best restart; its final value is never
/// below any restart's initial value. Evaluations whose Cholesky fails even
/// with jitter are treated as rejected steps; a restart whose initial point
/// fails is skipped, and OptimizationFailedError is thrown when all are.
OptimizeResult optimize_hyperparameters(const Dataset& data, const KernelSpec& kernel_template,
                                        const OptimizerConfig& config);

/// Writes the trace as CSV: restart,iteration,lml,grad_norm,<param names>.
void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace,
                     const std::vector<std::string>& param_names);

}  // namespace gpff

#endif
