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

#ifndef GPFF_PIPELINE_HPP
#define GPFF_PIPELINE_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gpff/gp.hpp"
#include "gpff/hyperopt.hpp"
#include "gpff/trajectory.hpp"

namespace gpff {

/// The fixed closed loop: plant, feedback controller and the linear
/// feedforward filter the learned one is compared against.
struct LoopSetup {
    FrictionPlant plant;
    DiscreteTF controller;
    DiscreteTF baseline_ff;
};

/// Everything the training campaign needs: the base reference, the scaled
/// copies to run, window geometry, the kernel template and optimizer
/// settings. Training runs use the baseline feedforward, matching normal
/// operation of the loop the model is learned from.
struct ExperimentPlan {
    Trajectory base_reference;
    std::vector<double> scale_factors;
    int repetitions = 1;
    double noise_std = 0.0;
    WindowConfig window;
    KernelSpec kernel = KernelSpec::squared_exponential(1.0, Vector::Ones(1));
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EvalRow {
    std::string reference_id;
    std::string controller_id;  ///< "baseline" or "gp"
    double l2_error = 0.0;
    double linf_error = 0.0;
};

/// Error norms of one log: (||e||_2, ||e||_inf).
std::pair<double, double> evaluate_log(const ClosedLoopLog& log);

/// Deterministic record of one campaign. Serializations contain no wall
/// clock: timings live in `runtimes_s`, which to_csv/to_table never print,
/// so identical seeds give byte-identical reports.
struct EvaluationReport {
    std::vector<EvalRow> rows;
    Eigen::Index M = 0;
    int n_theta = 0;
    double lml = 0.0;
    double sigma_n = 0.0;
    std::vector<std::string> hyper_names;
    Vector hyper_values;
    std::vector<std::string> steps;     ///< executed pipeline steps, in order
    std::vector<std::string> warnings;
    std::uint64_t seed = 0;
    std::map<std::string, double> runtimes_s;

    std::string to_csv() const;
    std::string to_table() const;  ///< metric x controller grid, references as columns
};

struct ProcedureResult {
    TrainedGP gp;
    EvaluationReport report;
    std::vector<TraceEntry> trace;
    std::vector<ClosedLoopLog> training_logs;
    std::vector<ClosedLoopLog> eval_logs;  ///< baseline then gp, per reference
    std::map<std::string, Vector> feedforward;  ///< GP feedforward per reference id
};

/// Runs the full campaign: simulate the scaled references under the
/// baseline feedforward, window and decimate the logs, select
/// hyperparameters by marginal likelihood (falling back to the initial
/// parameters with a warning when every restart fails), condition the GP,
/// then for each evaluation reference generate the feedforward and run the
/// loop once with the baseline filter and once with the GP signal. Both
/// arms of one reference share the disturbance realization, so the
/// comparison is paired. eval_references may be empty (train only).
ProcedureResult run_procedure(const LoopSetup& loop, const ExperimentPlan& plan,
                              const std::vector<std::pair<std::string, Trajectory>>& eval_references);

/// One training-data density level of the convergence study.
struct DensityLevel {
    int stride = 1;
    std::vector<double> scale_factors;
};

struct ConvergenceRow {
    int level = 0;
    int stride = 0;
    int num_scales = 0;
    Eigen::Index M = 0;
    double density = 0.0;    ///< kept observations per second of recorded data
    double rms_error = 0.0;  ///< prediction RMS against the exact inverse
};

/// Convergence of the learned inverse toward the analytic one as training
/// density grows. Data are collected with the exact-inverse feedforward and
/// zero noise, so observations lie on the true inverse and the densest
/// level is pure interpolation; exactly duplicated windows (dwell samples)
/// are dropped before fitting. The kernel's own parameters are used as
/// given, sigma_n = 0. Evaluated on the plan's base reference.
std::vector<ConvergenceRow> convergence_study(const LoopSetup& loop, const ExperimentPlan& plan,
                                              const std::vector<DensityLevel>& levels);

std::string convergence_to_csv(const std::vector<ConvergenceRow>& rows);

}  // namespace gpff

#endif
