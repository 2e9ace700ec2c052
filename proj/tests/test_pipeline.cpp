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

#include <cmath>

#include <gtest/gtest.h>

namespace gpff {
namespace {

/// Small desk-size setup: same bench plant, short move, coarse windows.
/// Fast enough to run the full campaign inside a unit test.
LoopSetup desk_loop() {
    LoopSetup loop;
    loop.plant.mass = 0.083;
    loop.plant.coulomb_level = 0.25;
    loop.plant.viscous_coeff = 2.8531;
    loop.plant.Ts = 0.001;
    loop.controller = make_pd_controller(300.0, 4.0, loop.plant.Ts);
    loop.baseline_ff = make_baseline_feedforward(2.8531, 0.083, loop.plant.Ts);
    return loop;
}

ExperimentPlan desk_plan() {
    ExperimentPlan plan;
    TrajectoryOptions opt;
    opt.lead_in_time = 0.01;
    opt.dwell_time = 0.02;
    opt.include_return = true;
    plan.base_reference = gen_third_order_reference(0.01, 0.05, 1.0, 50.0, 0.001, opt);
    plan.scale_factors = {0.9, 1.0, 1.1};
    plan.repetitions = 1;
    plan.noise_std = 0.001;
    plan.window.n_c = 4;
    plan.window.n_ac = 8;
    plan.window.stride = 10;
    plan.kernel = KernelSpec::matern32(0.3, Vector::Constant(13, 0.05));
    plan.optimizer.max_iterations = 15;
    plan.optimizer.gradient_tolerance = 0.01;
    plan.optimizer.restarts = 1;
    plan.optimizer.log_lower = -7.0;
    plan.optimizer.log_upper = 3.0;
    plan.optimizer.initial_sigma_n = 0.01;
    plan.seed = 7;
    return plan;
}

TEST(EvaluateLog, ComputesBothNorms) {
    ClosedLoopLog log;
    log.r = Vector::Zero(2);
    log.y = Vector(2);
    log.y << -3.0, 4.0;
    log.u = Vector::Zero(2);
    log.e = log.r - log.y;
    const auto [l2, linf] = evaluate_log(log);
    EXPECT_EQ(l2, 5.0);
    EXPECT_EQ(linf, 4.0);
}

TEST(ExperimentPlanStruct, Validation) {
    ExperimentPlan plan = desk_plan();
    EXPECT_NO_THROW(plan.validate());
    plan.scale_factors = {};
    EXPECT_THROW(plan.validate(), Error);
    plan = desk_plan();
    plan.scale_factors[1] = -0.5;
    EXPECT_THROW(plan.validate(), Error);
    plan = desk_plan();
    plan.repetitions = 0;
    EXPECT_THROW(plan.validate(), Error);
    plan = desk_plan();
    plan.noise_std = -1.0;
    EXPECT_THROW(plan.validate(), Error);
    plan = desk_plan();
    plan.kernel = KernelSpec::matern32(0.3, Vector::Constant(5, 0.05));  // dim != n_theta
    EXPECT_THROW(plan.validate(), Error);
}

TEST(RunProcedure, LearnedFeedforwardBeatsBaseline) {
    const LoopSetup loop = desk_loop();
    const ExperimentPlan plan = desk_plan();
    std::vector<std::pair<std::string, Trajectory>> evals;
    evals.emplace_back("r1", plan.base_reference);
    const ProcedureResult res = run_procedure(loop, plan, evals);

    ASSERT_EQ(res.report.rows.size(), 2u);
    EXPECT_EQ(res.report.rows[0].controller_id, "baseline");
    EXPECT_EQ(res.report.rows[1].controller_id, "gp");
    EXPECT_LT(res.report.rows[1].l2_error, res.report.rows[0].l2_error);

    // Bookkeeping: eleven -> three training logs, paired eval logs, the
    // feedforward for the one evaluation reference, step order.
    EXPECT_EQ(res.training_logs.size(), 3u);
    ASSERT_EQ(res.eval_logs.size(), 2u);
    EXPECT_EQ(res.eval_logs[0].meta.reference_id, "r1");
    ASSERT_EQ(res.feedforward.size(), 1u);
    EXPECT_EQ(res.feedforward.begin()->first, "r1");
    EXPECT_EQ(res.feedforward.begin()->second.size(), plan.base_reference.samples.size());
    const std::vector<std::string> expected_steps = {"kernel",     "windows",  "experiments",
                                                     "dataset",    "hyperopt", "prediction"};
    EXPECT_EQ(res.report.steps, expected_steps);
    EXPECT_EQ(res.report.n_theta, 13);
    EXPECT_GT(res.report.M, 0);
    EXPECT_EQ(res.report.seed, plan.seed);
    // Runtimes are measured but never serialized.
    EXPECT_FALSE(res.report.runtimes_s.empty());
    EXPECT_EQ(res.report.to_csv().find("runtime"), std::string::npos);
}

TEST(RunProcedure, PairedArmsShareDisturbance) {
    // With a zero-variance disturbance the arms differ only through the
    // feedforward; with noise they still see the same realization. Check
    // the baseline arm of two runs with the same seed is bit-identical.
    const LoopSetup loop = desk_loop();
    const ExperimentPlan plan = desk_plan();
    std::vector<std::pair<std::string, Trajectory>> evals;
    evals.emplace_back("r1", plan.base_reference);
    const ProcedureResult a = run_procedure(loop, plan, evals);
    const ProcedureResult b = run_procedure(loop, plan, evals);
    EXPECT_EQ(a.eval_logs[0].y, b.eval_logs[0].y);
    EXPECT_EQ(a.eval_logs[1].y, b.eval_logs[1].y);
}

TEST(RunProcedure, ReportSerializationIsByteDeterministic) {
    const LoopSetup loop = desk_loop();
    const ExperimentPlan plan = desk_plan();
    std::vector<std::pair<std::string, Trajectory>> evals;
    evals.emplace_back("r1", plan.base_reference);
    evals.emplace_back("r2", plan.base_reference.scaled(1.05));
    const ProcedureResult a = run_procedure(loop, plan, evals);
    const ProcedureResult b = run_procedure(loop, plan, evals);
    EXPECT_EQ(a.report.to_csv(), b.report.to_csv());
    EXPECT_EQ(a.report.to_table(), b.report.to_table());
}

TEST(RunProcedure, TrainOnlyWhenNoEvalReferences) {
    const LoopSetup loop = desk_loop();
    const ExperimentPlan plan = desk_plan();
    const ProcedureResult res = run_procedure(loop, plan, {});
    EXPECT_TRUE(res.report.rows.empty());
    EXPECT_TRUE(res.eval_logs.empty());
    EXPECT_TRUE(res.feedforward.empty());
    EXPECT_GT(res.gp.data().size(), 0);
    EXPECT_NE(res.report.to_table().find("no evaluation runs"), std::string::npos);
}

TEST(RunProcedure, InterpolatesTrainingWindowsWithoutNoise) {
    // Zero disturbance and sigma_n boxed to ~1e-7: the model must replay
    // the training inputs at the training windows. Needs data free of
    // duplicated windows, so no friction (no stiction freeze) and a
    // trajectory without rest phases.
    LoopSetup loop = desk_loop();
    loop.plant.coulomb_level = 0.0;
    ExperimentPlan plan = desk_plan();
    plan.base_reference = gen_third_order_reference(0.01, 0.05, 1.0, 50.0, 0.001);
    plan.noise_std = 0.0;
    plan.repetitions = 1;
    plan.scale_factors = {1.0};
    plan.optimizer.max_iterations = 1;
    plan.optimizer.restarts = 1;
    const Eigen::Index n = plan.kernel.num_params() + 1;
    // Box the kernel next to its template values and sigma_n to ~1e-7.
    const Vector theta = plan.kernel.params_vector();
    plan.optimizer.lower_override = Vector(n);
    plan.optimizer.upper_override = Vector(n);
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        plan.optimizer.lower_override[i] = std::log(theta[i]) - 0.01;
        plan.optimizer.upper_override[i] = std::log(theta[i]) + 0.01;
    }
    plan.optimizer.lower_override[n - 1] = std::log(1e-8);
    plan.optimizer.upper_override[n - 1] = std::log(1e-7);
    plan.optimizer.initial_sigma_n = 5e-8;
    const ProcedureResult res = run_procedure(loop, plan, {});

    const Dataset& data = res.gp.data();
    const Posterior post = res.gp.predict(data.Y);
    const double scale = data.u.cwiseAbs().maxCoeff();
    const double rms = std::sqrt((post.mean - data.u).squaredNorm() /
                                 static_cast<double>(data.u.size()));
    EXPECT_LE(rms, 1e-6 * scale);
}

TEST(RunProcedure, OptimizerFailureFallsBackWithWarning) {
    const LoopSetup loop = desk_loop();
    ExperimentPlan plan = desk_plan();
    const Eigen::Index n = plan.kernel.num_params() + 1;
    // Unworkable box: every restart overflows and fails (see hyperopt
    // tests); the pipeline keeps the template parameters and warns.
    plan.optimizer.lower_override = Vector::Constant(n, 359.0);
    plan.optimizer.upper_override = Vector::Constant(n, 360.0);
    plan.optimizer.initial_sigma_n = 1e100;
    std::vector<std::pair<std::string, Trajectory>> evals;
    evals.emplace_back("r1", plan.base_reference);
    const ProcedureResult res = run_procedure(loop, plan, evals);
    ASSERT_FALSE(res.report.warnings.empty());
    EXPECT_NE(res.report.warnings[0].find("initial parameters"), std::string::npos);
    EXPECT_TRUE(std::isnan(res.report.lml));
    EXPECT_EQ(res.gp.kernel().params_vector(), plan.kernel.params_vector());
    // The campaign still evaluates; the report carries both arms.
    EXPECT_EQ(res.report.rows.size(), 2u);
}

TEST(EvaluationReportStruct, CsvLayout) {
    EvaluationReport report;
    report.seed = 42;
    report.M = 10;
    report.n_theta = 3;
    report.lml = -1.5;
    report.sigma_n = 0.01;
    report.hyper_names = {"sigma_f", "l_0"};
    report.hyper_values = Vector(2);
    report.hyper_values << 0.5, 0.25;
    report.steps = {"kernel", "windows"};
    report.warnings = {"something odd"};
    report.rows.push_back({"r1", "baseline", 1.0, 0.5});
    report.rows.push_back({"r1", "gp", 0.1, 0.05});
    report.runtimes_s["total"] = 123.0;  // must not appear anywhere

    const std::string csv = report.to_csv();
    EXPECT_NE(csv.find("# schema_version,1"), std::string::npos);
    EXPECT_NE(csv.find("# seed,42"), std::string::npos);
    EXPECT_NE(csv.find("# step,kernel"), std::string::npos);
    EXPECT_NE(csv.find("# hyper,sigma_f,0.5"), std::string::npos);
    EXPECT_NE(csv.find("# warning,something odd"), std::string::npos);
    EXPECT_NE(csv.find("reference_id,controller,l2_error,linf_error"), std::string::npos);
    EXPECT_NE(csv.find("r1,baseline,1,0.5"), std::string::npos);
    EXPECT_NE(csv.find("r1,gp,0.1,0.05"), std::string::npos);
    EXPECT_EQ(csv.find("123"), std::string::npos);
    EXPECT_EQ(csv.find("total"), std::string::npos);

    const std::string table = report.to_table();
    EXPECT_NE(table.find("r1"), std::string::npos);
    EXPECT_NE(table.find("baseline"), std::string::npos);
    EXPECT_NE(table.find("gp"), std::string::npos);
    EXPECT_EQ(table.find("123"), std::string::npos);
}

TEST(ConvergenceStudy, ErrorShrinksWithDensityAndDropsDuplicates) {
    const LoopSetup loop = desk_loop();
    ExperimentPlan plan = desk_plan();
    TrajectoryOptions opt;
    opt.lead_in_time = 0.02;
    opt.dwell_time = 0.05;
    opt.include_return = true;
    plan.base_reference = gen_third_order_reference(0.04, 0.08, 1.5, 40.0, 0.001, opt);
    plan.kernel = KernelSpec::matern32(0.5, Vector::Constant(13, 0.002));

    std::vector<DensityLevel> levels;
    levels.push_back({8, {1.0}});
    levels.push_back({2, {0.96, 1.0, 1.04}});
    levels.push_back({1, {0.96, 1.0, 1.04}});
    const std::vector<ConvergenceRow> rows = convergence_study(loop, plan, levels);

    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LT(rows[1].rms_error, rows[0].rms_error);
    EXPECT_LE(rows[2].rms_error, rows[1].rms_error);
    EXPECT_GT(rows[1].density, rows[0].density);
    EXPECT_GT(rows[2].density, rows[1].density);
    // The dwell produces identical windows across scales and within each
    // log; dedup keeps M below the raw row count.
    const Eigen::Index raw_rows = 3 * plan.base_reference.samples.size();
    EXPECT_LT(rows[2].M, raw_rows);
    EXPECT_EQ(rows[0].stride, 8);
    EXPECT_EQ(rows[0].num_scales, 1);
    EXPECT_EQ(rows[2].num_scales, 3);

    const std::string csv = convergence_to_csv(rows);
    EXPECT_NE(csv.find("level,stride,num_scales,M,density_per_s,rms_error"), std::string::npos);
    EXPECT_NE(csv.find("\n1,8,1,"), std::string::npos);
}

}  // namespace
}  // namespace gpff
