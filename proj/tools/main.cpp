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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gpff/config.hpp"
#include "gpff/csv.hpp"
#include "gpff/gp.hpp"
#include "gpff/pipeline.hpp"
#include "gpff/rng.hpp"

namespace fs = std::filesystem;
using namespace gpff;

namespace {

/// Options shared by all subcommands that start from a config file.
struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> stride;
    std::optional<std::string> kernel_variant;
    std::optional<std::string> friction_on;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "experiment configuration (JSON)")
        ->required();
    cmd->add_option("--seed", opt.seed, "override the config seed");
    cmd->add_option("--stride", opt.stride, "override the training decimation stride");
    cmd->add_option("--kernel", opt.kernel_variant,
                    "override the kernel variant (se, matern32, periodic)");
    cmd->add_option("--friction-on", opt.friction_on,
                    "override the friction sign source (velocity_sign, output_sign)");
}

/// Command-line flags win over the config file.
ExperimentConfig load_config(const CommonOptions& opt) {
    ExperimentConfig cfg = ExperimentConfig::load(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.stride) cfg.plan.window.stride = *opt.stride;
    if (opt.kernel_variant) {
        if (cfg.plan.kernel.is_null()) cfg.plan.kernel = nlohmann::json::object();
        cfg.plan.kernel["variant"] = *opt.kernel_variant;
    }
    if (opt.friction_on) cfg.plant.friction_on = friction_on_from_string(*opt.friction_on);
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCategory::io, "write failed: " + path);
}

std::vector<std::pair<std::string, Trajectory>> evaluation_references(
    const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, Trajectory>> refs;
    const Trajectory base = cfg.make_base_reference();
    for (std::size_t i = 0; i < cfg.evaluation.scales.size(); ++i) {
        refs.emplace_back("r" + std::to_string(i + 1), base.scaled(cfg.evaluation.scales[i]));
    }
    return refs;
}

void write_procedure_outputs(const fs::path& dir, const ExperimentConfig& cfg,
                             const ProcedureResult& result) {
    fs::create_directories(dir);
    write_text((dir / "report.csv").string(), result.report.to_csv());
    write_text((dir / "report.txt").string(), result.report.to_table());
    result.gp.save((dir / "model.json").string());

    std::ofstream trace((dir / "trace.csv").string(), std::ios::binary);
    if (!trace) throw Error(ErrorCategory::io, "cannot write " + (dir / "trace.csv").string());
    std::vector<std::string> names = result.gp.kernel().param_names();
    names.emplace_back("sigma_n");
    write_trace_csv(trace, result.trace, names);
    trace.close();

    fs::create_directories(dir / "training_logs");
    for (const ClosedLoopLog& log : result.training_logs) {
        const std::string name =
            log.meta.reference_id + "_rep" + std::to_string(log.meta.repetition) + ".csv";
        csv::write_log((dir / "training_logs" / name).string(), log);
    }
    fs::create_directories(dir / "eval_logs");
    for (std::size_t i = 0; i < result.eval_logs.size(); ++i) {
        const ClosedLoopLog& log = result.eval_logs[i];
        const std::string arm = (i % 2 == 0) ? "baseline" : "gp";
        csv::write_log((dir / "eval_logs" / (log.meta.reference_id + "_" + arm + ".csv")).string(),
                       log);
    }
    fs::create_directories(dir / "feedforward");
    for (const auto& [id, ff] : result.feedforward) {
        csv::write_vector((dir / "feedforward" / (id + "_ff.csv")).string(), "ff", ff);
    }
    (void)cfg;
}

int run_gen_ref(const CommonOptions& common, double scale, const std::string& out) {
    const ExperimentConfig cfg = load_config(common);
    const Trajectory traj = cfg.make_base_reference().scaled(scale);
    csv::write_reference(out, traj.samples, traj.Ts);
    std::cout << "wrote " << traj.samples.size() << " samples to " << out << "\n";
    return 0;
}

int run_simulate(const CommonOptions& common, const std::string& reference_path,
                 const std::string& ff_mode, std::optional<double> noise_std,
                 const std::string& out) {
    const ExperimentConfig cfg = load_config(common);
    const LoopSetup loop = cfg.make_loop_setup();
    const Vector r = reference_path.empty() ? cfg.make_base_reference().samples
                                            : csv::read_reference(reference_path);
    SimOptions opt;
    opt.noise_std = noise_std ? *noise_std : cfg.plan.noise_std;
    opt.seed = derive_seed(cfg.seed, seed_tag::training, 0);
    opt.reference_id = "cli";

    ClosedLoopLog log;
    if (ff_mode == "baseline") {
        log = simulate_closed_loop(loop.plant, loop.controller, loop.baseline_ff, r, opt);
    } else if (ff_mode == "zero") {
        log = simulate_closed_loop(loop.plant, loop.controller, Vector::Zero(r.size()), r, opt);
    } else if (ff_mode == "exact-inverse") {
        log = simulate_closed_loop(loop.plant, loop.controller,
                                   exact_inverse_feedforward(loop.plant, r), r, opt);
    } else {
        const Vector ff = csv::read_vector(ff_mode, "ff");
        if (ff.size() != r.size()) {
            throw Error(ErrorCategory::invalid_input,
                        "feedforward length " + std::to_string(ff.size()) +
                            " does not match reference length " + std::to_string(r.size()));
        }
        log = simulate_closed_loop(loop.plant, loop.controller, ff, r, opt);
    }
    csv::write_log(out, log);
    const auto [l2, linf] = evaluate_log(log);
    std::cout << "wrote " << log.size() << " samples to " << out << " (l2 error "
              << csv::format_double(l2) << ", linf error " << csv::format_double(linf) << ")\n";
    return 0;
}

int run_train(const CommonOptions& common, const std::string& model_out,
              const std::string& trace_out) {
    const ExperimentConfig cfg = load_config(common);
    const ProcedureResult result = run_procedure(cfg.make_loop_setup(), cfg.make_plan(), {});
    result.gp.save(model_out);
    if (!trace_out.empty()) {
        std::ofstream os(trace_out, std::ios::binary);
        if (!os) throw Error(ErrorCategory::io, "cannot write " + trace_out);
        std::vector<std::string> names = result.gp.kernel().param_names();
        names.emplace_back("sigma_n");
        write_trace_csv(os, result.trace, names);
    }
    std::cout << "trained on M=" << result.report.M << " windows (n_theta="
              << result.report.n_theta << "), lml=" << csv::format_double(result.report.lml)
              << ", sigma_n=" << csv::format_double(result.report.sigma_n) << "\n";
    for (const std::string& w : result.report.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "model saved to " << model_out << "\n";
    return 0;
}

int run_predict(const CommonOptions& common, const std::string& model_path,
                const std::string& reference_path, double scale, const std::string& out) {
    const ExperimentConfig cfg = load_config(common);
    const TrainedGP gp = TrainedGP::load(model_path);
    const Vector r = reference_path.empty() ? cfg.make_base_reference().scaled(scale).samples
                                            : csv::read_reference(reference_path);
    const Matrix R = reference_to_query_windows(r, gp.data().window);
    const Vector ff = gp.predict(R).mean;
    csv::write_vector(out, "ff", ff);
    std::cout << "wrote " << ff.size() << " feedforward samples to " << out << "\n";
    return 0;
}

int run_evaluate(const CommonOptions& common, const std::string& model_path,
                 const std::string& out_dir) {
    const ExperimentConfig cfg = load_config(common);
    const LoopSetup loop = cfg.make_loop_setup();
    const TrainedGP gp = TrainedGP::load(model_path);

    EvaluationReport report;
    report.seed = cfg.seed;
    report.M = gp.data().size();
    report.n_theta = gp.data().window.n_theta();
    report.sigma_n = gp.sigma_n();
    report.hyper_names = gp.kernel().param_names();
    report.hyper_names.emplace_back("sigma_n");
    report.hyper_values = Vector(gp.kernel().num_params() + 1);
    report.hyper_values.head(gp.kernel().num_params()) = gp.kernel().params_vector();
    report.hyper_values[gp.kernel().num_params()] = gp.sigma_n();
    report.lml = std::numeric_limits<double>::quiet_NaN();
    report.steps = {"prediction"};

    const fs::path dir(out_dir);
    fs::create_directories(dir / "eval_logs");
    const auto refs = evaluation_references(cfg);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& [id, traj] = refs[i];
        const Matrix R = reference_to_query_windows(traj.samples, gp.data().window);
        const Vector ff = gp.predict(R).mean;

        SimOptions opt;
        opt.noise_std = cfg.plan.noise_std;
        opt.seed = derive_seed(cfg.seed, seed_tag::evaluation, static_cast<std::uint64_t>(i));
        opt.reference_id = id;
        const ClosedLoopLog log_base =
            simulate_closed_loop(loop.plant, loop.controller, loop.baseline_ff, traj.samples, opt);
        const ClosedLoopLog log_gp =
            simulate_closed_loop(loop.plant, loop.controller, ff, traj.samples, opt);
        const auto [base_l2, base_linf] = evaluate_log(log_base);
        const auto [gp_l2, gp_linf] = evaluate_log(log_gp);
        report.rows.push_back({id, "baseline", base_l2, base_linf});
        report.rows.push_back({id, "gp", gp_l2, gp_linf});
        csv::write_log((dir / "eval_logs" / (id + "_baseline.csv")).string(), log_base);
        csv::write_log((dir / "eval_logs" / (id + "_gp.csv")).string(), log_gp);
    }
    write_text((dir / "report.csv").string(), report.to_csv());
    write_text((dir / "report.txt").string(), report.to_table());
    std::cout << report.to_table();
    return 0;
}

int run_reproduce(const CommonOptions& common, const std::string& out_dir_flag) {
    const ExperimentConfig cfg = load_config(common);
    const fs::path dir(out_dir_flag.empty() ? cfg.output_dir : out_dir_flag);
    const ProcedureResult result =
        run_procedure(cfg.make_loop_setup(), cfg.make_plan(), evaluation_references(cfg));
    write_procedure_outputs(dir, cfg, result);
    std::cout << result.report.to_table();
    for (const std::string& w : result.report.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "outputs written to " << dir.string() << "\n";
    return 0;
}

int run_convergence(const CommonOptions& common, const std::string& out) {
    const ExperimentConfig cfg = load_config(common);
    if (cfg.convergence.levels.empty()) {
        throw Error(ErrorCategory::config, "convergence.levels is empty");
    }
    ExperimentPlan plan = cfg.make_plan();
    plan.base_reference = cfg.make_convergence_reference();
    plan.kernel = cfg.make_kernel(cfg.convergence.kernel.is_null() ? cfg.plan.kernel
                                                                   : cfg.convergence.kernel);
    const std::vector<ConvergenceRow> rows =
        convergence_study(cfg.make_loop_setup(), plan, cfg.convergence.levels);
    const std::string text = convergence_to_csv(rows);
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
        std::cout << "wrote " << rows.size() << " levels to " << out << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process feedforward learning for motion systems"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* gen_ref = app.add_subcommand("gen-ref", "generate the configured reference trajectory");
    double gen_scale = 1.0;
    std::string gen_out = "reference.csv";
    add_common(gen_ref, common);
    gen_ref->add_option("--scale", gen_scale, "scale factor applied to the trajectory");
    gen_ref->add_option("--out", gen_out, "output CSV path");

    auto* simulate = app.add_subcommand("simulate", "run the closed loop once");
    std::string sim_reference, sim_out = "log.csv", sim_ff = "baseline";
    std::optional<double> sim_noise;
    add_common(simulate, common);
    simulate->add_option("--reference", sim_reference,
                         "reference CSV (default: the configured trajectory)");
    simulate->add_option("--feedforward", sim_ff,
                         "baseline, zero, exact-inverse, or a feedforward CSV path");
    simulate->add_option("--noise-std", sim_noise, "override the input disturbance level");
    simulate->add_option("--out", sim_out, "output log CSV path");

    auto* train = app.add_subcommand("train", "learn the inverse model from simulated data");
    std::string train_out = "model.json", train_trace;
    add_common(train, common);
    train->add_option("--out", train_out, "model output path (JSON + CSV payloads)");
    train->add_option("--trace", train_trace, "optimizer trace CSV path");

    auto* predict = app.add_subcommand("predict", "feedforward for a reference from a model");
    std::string pred_model, pred_reference, pred_out = "feedforward.csv";
    double pred_scale = 1.0;
    add_common(predict, common);
    predict->add_option("--model", pred_model, "trained model path")->required();
    predict->add_option("--reference", pred_reference,
                        "reference CSV (default: the configured trajectory)");
    predict->add_option("--scale", pred_scale, "scale for the configured trajectory");
    predict->add_option("--out", pred_out, "output CSV path");

    auto* evaluate = app.add_subcommand("evaluate", "paired baseline/GP runs from a model");
    std::string eval_model, eval_out_dir = "out";
    add_common(evaluate, common);
    evaluate->add_option("--model", eval_model, "trained model path")->required();
    evaluate->add_option("--out-dir", eval_out_dir, "output directory");

    auto* reproduce = app.add_subcommand(
        "reproduce-paper", "full campaign: train, evaluate and write all artifacts");
    std::string rep_out_dir;
    add_common(reproduce, common);
    reproduce->add_option("--out-dir", rep_out_dir, "output directory (default: config output_dir)");

    auto* convergence = app.add_subcommand("convergence-study",
                                           "model error versus training data density");
    std::string conv_out;
    add_common(convergence, common);
    convergence->add_option("--out", conv_out, "output CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_ref->parsed()) return run_gen_ref(common, gen_scale, gen_out);
        if (simulate->parsed()) return run_simulate(common, sim_reference, sim_ff, sim_noise, sim_out);
        if (train->parsed()) return run_train(common, train_out, train_trace);
        if (predict->parsed()) return run_predict(common, pred_model, pred_reference, pred_scale, pred_out);
        if (evaluate->parsed()) return run_evaluate(common, eval_model, eval_out_dir);
        if (reproduce->parsed()) return run_reproduce(common, rep_out_dir);
        if (convergence->parsed()) return run_convergence(common, conv_out);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.category()) << "): " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
