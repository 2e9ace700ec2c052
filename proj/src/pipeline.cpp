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

#include "gpff/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "gpff/csv.hpp"
#include "gpff/rng.hpp"

namespace gpff {
namespace {

class StepTimer {
  public:
    explicit StepTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    void finish(const std::string& step) {
        const auto now = std::chrono::steady_clock::now();
        sink_[step] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }

  private:
    std::map<std::string, double>& sink_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string short_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

/// Keeps the first of every set of exactly identical window rows. Identical
/// windows carry identical noiseless targets, so the drop loses nothing and
/// keeps the zero-noise Gram matrix nonsingular.
void drop_duplicate_rows(Matrix& Y, Vector& u) {
    const Eigen::Index M = Y.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto less = [&Y](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            if (Y(a, j) != Y(b, j)) return Y(a, j) < Y(b, j);
        }
        return a < b;  // stable within duplicates: keep the earliest
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<bool> keep(static_cast<std::size_t>(M), true);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (Y.row(order[i - 1]) == Y.row(order[i])) keep[static_cast<std::size_t>(order[i])] = false;
    }
    const Eigen::Index kept = static_cast<Eigen::Index>(
        std::count(keep.begin(), keep.end(), true));
    if (kept == M) return;
    Matrix Y2(kept, Y.cols());
    Vector u2(kept);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < M; ++i) {
        if (!keep[static_cast<std::size_t>(i)]) continue;
        Y2.row(row) = Y.row(i);
        u2[row] = u[i];
        ++row;
    }
    Y = std::move(Y2);
    u = std::move(u2);
}

}  // namespace

void ExperimentPlan::validate() const {
    base_reference.validate();
    if (base_reference.samples.size() == 0) {
        throw Error(ErrorCategory::invalid_input, "plan needs a non-empty base reference");
    }
    if (scale_factors.empty()) {
        throw Error(ErrorCategory::invalid_input, "plan needs at least one scale factor");
    }
    for (double s : scale_factors) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw Error(ErrorCategory::invalid_input, "scale factors must be positive");
        }
    }
    if (repetitions < 1) {
        throw Error(ErrorCategory::invalid_input, "plan needs at least one repetition");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw Error(ErrorCategory::invalid_input, "noise_std must be non-negative");
    }
    window.validate();
    if (kernel.dim() != window.n_theta()) {
        throw Error(ErrorCategory::invalid_input,
                    "kernel dimension " + std::to_string(kernel.dim()) +
                        " does not match window length " + std::to_string(window.n_theta()));
    }
    optimizer.validate();
}

std::pair<double, double> evaluate_log(const ClosedLoopLog& log) {
    log.validate();
    return {log.e.norm(), log.e.cwiseAbs().maxCoeff()};
}

std::string EvaluationReport::to_csv() const {
    std::ostringstream os;
    os << "# schema_version,1\n";
    os << "# seed," << seed << "\n";
    os << "# M," << M << "\n";
    os << "# n_theta," << n_theta << "\n";
    os << "# lml," << csv::format_double(lml) << "\n";
    os << "# sigma_n," << csv::format_double(sigma_n) << "\n";
    for (const std::string& s : steps) os << "# step," << s << "\n";
    for (std::size_t i = 0; i < hyper_names.size(); ++i) {
        os << "# hyper," << hyper_names[i] << ","
           << csv::format_double(hyper_values[static_cast<Eigen::Index>(i)]) << "\n";
    }
    for (const std::string& w : warnings) os << "# warning," << w << "\n";
    os << "reference_id,controller,l2_error,linf_error\n";
    for (const EvalRow& row : rows) {
        os << row.reference_id << "," << row.controller_id << ","
           << csv::format_double(row.l2_error) << "," << csv::format_double(row.linf_error)
           << "\n";
    }
    return os.str();
}

std::string EvaluationReport::to_table() const {
    // Reference ids become columns, in first appearance order.
    std::vector<std::string> refs;
    for (const EvalRow& row : rows) {
        if (std::find(refs.begin(), refs.end(), row.reference_id) == refs.end()) {
            refs.push_back(row.reference_id);
        }
    }
    const auto find_row = [this](const std::string& ref, const std::string& ctrl) {
        for (const EvalRow& row : rows) {
            if (row.reference_id == ref && row.controller_id == ctrl) return &row;
        }
        return static_cast<const EvalRow*>(nullptr);
    };

    constexpr int kColWidth = 16;
    std::ostringstream os;
    os << "tracking error by controller and reference\n\n";
    os << std::left;
    os.width(12);
    os << "metric";
    os.width(12);
    os << "controller";
    for (const std::string& ref : refs) {
        os.width(kColWidth);
        os << ref;
    }
    os << "\n";
    for (const char* metric : {"l2", "linf"}) {
        for (const char* ctrl : {"baseline", "gp"}) {
            os.width(12);
            os << (std::string(ctrl) == "baseline" ? metric : "");
            os.width(12);
            os << ctrl;
            for (const std::string& ref : refs) {
                const EvalRow* row = find_row(ref, ctrl);
                os.width(kColWidth);
                if (!row) {
                    os << "-";
                } else {
                    os << short_number(std::string(metric) == "l2" ? row->l2_error
                                                                   : row->linf_error);
                }
            }
            os << "\n";
        }
    }
    if (rows.empty()) os << "(no evaluation runs)\n";
    return os.str();
}

ProcedureResult run_procedure(const LoopSetup& loop, const ExperimentPlan& plan,
                              const std::vector<std::pair<std::string, Trajectory>>& eval_references) {
    loop.plant.validate();
    plan.validate();

    EvaluationReport report;
    report.seed = plan.seed;
    StepTimer timer(report.runtimes_s);

    // Step 1: the kernel structure is fixed first; everything else is sized
    // off it.
    report.steps.emplace_back("kernel");
    timer.finish("kernel");

    // Step 2: window geometry.
    plan.window.validate();
    report.n_theta = plan.window.n_theta();
    report.steps.emplace_back("windows");
    timer.finish("windows");

    // Step 3: training experiments under the baseline feedforward.
    std::vector<ClosedLoopLog> training_logs;
    for (std::size_t j = 0; j < plan.scale_factors.size(); ++j) {
        const Trajectory traj = plan.base_reference.scaled(plan.scale_factors[j]);
        for (int rep = 0; rep < plan.repetitions; ++rep) {
            SimOptions opt;
            opt.noise_std = plan.noise_std;
            opt.seed = derive_seed(plan.seed, seed_tag::training,
                                   static_cast<std::uint64_t>(j) * 1000 +
                                       static_cast<std::uint64_t>(rep));
            opt.reference_id = "train_" + std::to_string(j);
            opt.repetition = rep;
            training_logs.push_back(
                simulate_closed_loop(loop.plant, loop.controller, loop.baseline_ff,
                                     traj.samples, opt));
        }
    }
    report.steps.emplace_back("experiments");
    timer.finish("experiments");

    // Step 4: windowing and decimation into the training set; repeated runs
    // are averaged first when requested.
    const std::vector<ClosedLoopLog>& for_assembly = training_logs;
    std::vector<ClosedLoopLog> averaged;
    if (plan.repetitions > 1) averaged = average_repetitions(training_logs);
    const Dataset data = assemble_dataset(plan.repetitions > 1 ? averaged : for_assembly,
                                          plan.window);
    report.M = data.size();
    report.steps.emplace_back("dataset");
    timer.finish("dataset");

    // Step 5: marginal-likelihood hyperparameter selection.
    KernelSpec kernel = plan.kernel;
    double sigma_n = plan.optimizer.initial_sigma_n;
    std::vector<TraceEntry> trace;
    OptimizerConfig opt_config = plan.optimizer;
    opt_config.seed = derive_seed(plan.seed, seed_tag::optimizer, 0);
    try {
        OptimizeResult opt = optimize_hyperparameters(data, plan.kernel, opt_config);
        kernel = opt.kernel;
        sigma_n = opt.sigma_n;
        report.lml = opt.lml;
        trace = std::move(opt.trace);
        if (!opt.converged) {
            report.warnings.emplace_back(
                "hyperparameter selection stopped before reaching the gradient tolerance");
        }
    } catch (const OptimizationFailedError& e) {
        report.warnings.emplace_back(std::string("hyperparameter selection failed (") +
                                     e.what() + "); using initial parameters");
        trace = e.trace();
        report.lml = std::numeric_limits<double>::quiet_NaN();
    }
    report.hyper_names = kernel.param_names();
    report.hyper_names.emplace_back("sigma_n");
    report.hyper_values = Vector(kernel.num_params() + 1);
    report.hyper_values.head(kernel.num_params()) = kernel.params_vector();
    report.hyper_values[kernel.num_params()] = sigma_n;
    report.sigma_n = sigma_n;
    report.steps.emplace_back("hyperopt");
    timer.finish("hyperopt");

    // Step 6: condition the GP and predict the feedforward for each
    // evaluation reference, then run the loop with both controllers under a
    // shared disturbance realization.
    TrainedGP gp = TrainedGP::fit(data, kernel, sigma_n);
    std::map<std::string, Vector> feedforward;
    std::vector<ClosedLoopLog> eval_logs;
    for (std::size_t i = 0; i < eval_references.size(); ++i) {
        const auto& [id, traj] = eval_references[i];
        traj.validate();
        const Matrix R = reference_to_query_windows(traj.samples, plan.window);
        const Vector ff = gp.predict(R).mean;
        feedforward[id] = ff;

        SimOptions opt;
        opt.noise_std = plan.noise_std;
        opt.seed = derive_seed(plan.seed, seed_tag::evaluation, static_cast<std::uint64_t>(i));
        opt.reference_id = id;

        const ClosedLoopLog log_base =
            simulate_closed_loop(loop.plant, loop.controller, loop.baseline_ff, traj.samples, opt);
        const ClosedLoopLog log_gp =
            simulate_closed_loop(loop.plant, loop.controller, ff, traj.samples, opt);
        const auto [base_l2, base_linf] = evaluate_log(log_base);
        const auto [gp_l2, gp_linf] = evaluate_log(log_gp);
        report.rows.push_back({id, "baseline", base_l2, base_linf});
        report.rows.push_back({id, "gp", gp_l2, gp_linf});
        eval_logs.push_back(log_base);
        eval_logs.push_back(log_gp);
    }
    report.steps.emplace_back("prediction");
    timer.finish("prediction");

    return ProcedureResult{std::move(gp),      std::move(report), std::move(trace),
                           std::move(training_logs), std::move(eval_logs),
                           std::move(feedforward)};
}

std::vector<ConvergenceRow> convergence_study(const LoopSetup& loop, const ExperimentPlan& plan,
                                              const std::vector<DensityLevel>& levels) {
    loop.plant.validate();
    plan.base_reference.validate();
    plan.window.validate();
    if (levels.empty()) {
        throw Error(ErrorCategory::invalid_input, "convergence study needs density levels");
    }

    // Fixed evaluation reference and its analytic ground truth.
    const Vector& r_eval = plan.base_reference.samples;
    const Matrix R_eval = reference_to_query_windows(r_eval, plan.window);
    const Vector u_eval = exact_inverse_feedforward(loop.plant, r_eval);

    std::vector<ConvergenceRow> out;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const DensityLevel& level = levels[li];
        if (level.stride < 1 || level.scale_factors.empty()) {
            throw Error(ErrorCategory::invalid_input,
                        "density level " + std::to_string(li) + " is malformed");
        }

        // Sample the analytic inverse along each scaled reference path.
        std::vector<Matrix> window_blocks;
        std::vector<Vector> target_blocks;
        Eigen::Index total = 0;
        double recorded_seconds = 0.0;
        for (double scale : level.scale_factors) {
            const Trajectory traj = plan.base_reference.scaled(scale);
            const Matrix W = build_windows(traj.samples, plan.window);
            const Vector u_true = exact_inverse_feedforward(loop.plant, traj.samples);
            const Eigen::Index kept = (W.rows() + level.stride - 1) / level.stride;
            Matrix Wk(kept, W.cols());
            Vector uk(kept);
            Eigen::Index row = 0;
            for (Eigen::Index t = 0; t < W.rows(); t += level.stride) {
                Wk.row(row) = W.row(t);
                uk[row] = u_true[t];
                ++row;
            }
            window_blocks.push_back(std::move(Wk));
            target_blocks.push_back(std::move(uk));
            total += kept;
            recorded_seconds += static_cast<double>(traj.samples.size()) * traj.Ts;
        }
        Matrix Y(total, plan.window.n_theta());
        Vector u(total);
        Eigen::Index at = 0;
        for (std::size_t b = 0; b < window_blocks.size(); ++b) {
            Y.middleRows(at, window_blocks[b].rows()) = window_blocks[b];
            u.segment(at, target_blocks[b].size()) = target_blocks[b];
            at += window_blocks[b].rows();
        }
        drop_duplicate_rows(Y, u);

        Dataset data;
        data.Y = std::move(Y);
        data.u = std::move(u);
        data.window = plan.window;
        data.window.stride = level.stride;

        const TrainedGP gp = TrainedGP::fit(std::move(data), plan.kernel, 0.0);
        const Vector pred = gp.predict(R_eval).mean;
        const double rms = std::sqrt((pred - u_eval).squaredNorm() /
                                     static_cast<double>(u_eval.size()));

        ConvergenceRow row;
        row.level = static_cast<int>(li) + 1;
        row.stride = level.stride;
        row.num_scales = static_cast<int>(level.scale_factors.size());
        row.M = gp.data().size();
        row.density = static_cast<double>(row.M) / recorded_seconds;
        row.rms_error = rms;
        out.push_back(row);
    }
    return out;
}

std::string convergence_to_csv(const std::vector<ConvergenceRow>& rows) {
    std::ostringstream os;
    os << "level,stride,num_scales,M,density_per_s,rms_error\n";
    for (const ConvergenceRow& r : rows) {
        os << r.level << "," << r.stride << "," << r.num_scales << "," << r.M << ","
           << csv::format_double(r.density) << "," << csv::format_double(r.rms_error) << "\n";
    }
    return os.str();
}

}  // namespace gpff
