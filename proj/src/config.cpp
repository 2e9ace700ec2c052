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

#include "gpff/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace gpff {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorCategory::config, where.empty() ? what : where + ": " + what);
}

/// Rejects keys outside the allowed set, naming the key and section.
void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) fail(where, "unknown key '" + key + "'");
    }
}

std::string sub(const std::string& where, const char* key) {
    return where.empty() ? key : where + "." + key;
}

double as_double(const json& j, const std::string& where, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) fail(sub(where, key), "expected a number");
    return v.get<double>();
}

int as_int(const json& j, const std::string& where, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(sub(where, key), "expected an integer");
    return v.get<int>();
}

std::uint64_t as_u64(const json& j, const std::string& where, const char* key,
                     std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0)) {
        fail(sub(where, key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& where, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) fail(sub(where, key), "expected a boolean");
    return v.get<bool>();
}

std::string as_string(const json& j, const std::string& where, const char* key,
                      const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) fail(sub(where, key), "expected a string");
    return v.get<std::string>();
}

std::vector<double> as_double_array(const json& j, const std::string& where, const char* key,
                                    std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_array()) fail(sub(where, key), "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) fail(sub(where, key), "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

/// Scalar broadcasts to `dim` entries; an array must have exactly `dim`.
Vector as_broadcast_vector(const json& v, const std::string& where, Eigen::Index dim) {
    if (v.is_number()) return Vector::Constant(dim, v.get<double>());
    if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != dim) {
            fail(where, "expected " + std::to_string(dim) + " entries, got " +
                            std::to_string(v.size()));
        }
        Vector out(dim);
        Eigen::Index i = 0;
        for (const json& e : v) {
            if (!e.is_number()) fail(where, "expected numbers");
            out[i++] = e.get<double>();
        }
        return out;
    }
    fail(where, "expected a number or an array of numbers");
}

KernelSpec kernel_from_json_impl(const json& j, Eigen::Index dim, const std::string& where) {
    if (!j.is_object()) fail(where, "expected a kernel object");
    const std::string variant_name = as_string(j, where, "variant", "");
    if (variant_name.empty()) fail(where, "kernel needs a 'variant'");
    KernelVariant variant;
    try {
        variant = kernel_variant_from_string(variant_name);
    } catch (const Error& e) {
        fail(sub(where, "variant"), e.what());
    }
    if (variant == KernelVariant::sum) {
        check_keys(j, where, {"variant", "terms"});
        if (!j.contains("terms") || !j.at("terms").is_array()) {
            fail(where, "sum kernel needs a 'terms' array");
        }
        std::vector<KernelSpec> terms;
        int i = 0;
        for (const json& t : j.at("terms")) {
            terms.push_back(
                kernel_from_json_impl(t, dim, sub(where, "terms") + "[" + std::to_string(i) + "]"));
            ++i;
        }
        return KernelSpec::sum(std::move(terms));
    }
    check_keys(j, where, {"variant", "sigma_f", "lengthscales", "periods"});
    const double sigma_f = as_double(j, where, "sigma_f", 1.0);
    Vector ls = Vector::Ones(dim);
    if (j.contains("lengthscales")) {
        ls = as_broadcast_vector(j.at("lengthscales"), sub(where, "lengthscales"), dim);
    }
    switch (variant) {
        case KernelVariant::squared_exponential:
            return KernelSpec::squared_exponential(sigma_f, std::move(ls));
        case KernelVariant::matern32:
            return KernelSpec::matern32(sigma_f, std::move(ls));
        case KernelVariant::periodic: {
            if (!j.contains("periods")) fail(where, "periodic kernel needs 'periods'");
            Vector periods = as_broadcast_vector(j.at("periods"), sub(where, "periods"), dim);
            return KernelSpec::periodic(sigma_f, std::move(ls), std::move(periods));
        }
        case KernelVariant::sum:
            break;  // handled above
    }
    fail(where, "unsupported kernel variant");
}

ExperimentConfig::TrajectorySection trajectory_from_json(const json& j,
                                                         const std::string& where) {
    check_keys(j, where,
               {"displacement", "v_max", "a_max", "j_max", "lead_in_time", "dwell_time",
                "include_return", "length"});
    ExperimentConfig::TrajectorySection t;
    t.displacement = as_double(j, where, "displacement", 0.0);
    t.v_max = as_double(j, where, "v_max", 0.0);
    t.a_max = as_double(j, where, "a_max", 0.0);
    t.j_max = as_double(j, where, "j_max", 0.0);
    t.lead_in_time = as_double(j, where, "lead_in_time", 0.0);
    t.dwell_time = as_double(j, where, "dwell_time", 0.0);
    t.include_return = as_bool(j, where, "include_return", false);
    t.length = as_int(j, where, "length", 0);
    return t;
}

Trajectory build_trajectory(const ExperimentConfig::TrajectorySection& t, double Ts) {
    TrajectoryOptions opt;
    opt.lead_in_time = t.lead_in_time;
    opt.dwell_time = t.dwell_time;
    opt.include_return = t.include_return;
    opt.pad_to_length = t.length;
    return gen_third_order_reference(t.displacement, t.v_max, t.a_max, t.j_max, Ts, opt);
}

}  // namespace

KernelSpec kernel_from_config_json(const nlohmann::json& j, Eigen::Index dim) {
    return kernel_from_json_impl(j, dim, "kernel");
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCategory::io, "cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    json j;
    try {
        j = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCategory::parse, path + ": " + e.what());
    }
    try {
        return from_json(j);
    } catch (const Error& e) {
        if (e.category() == ErrorCategory::config) {
            throw Error(ErrorCategory::config, path + ": " + e.what());
        }
        throw;
    }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    check_keys(j, "",
               {"schema_version", "seed", "output_dir", "plant", "controller", "baseline",
                "trajectory", "plan", "evaluation", "convergence"});
    ExperimentConfig cfg;
    cfg.schema_version = as_int(j, "", "schema_version", supported_schema_version);
    if (cfg.schema_version != supported_schema_version) {
        fail("schema_version", "unsupported version " + std::to_string(cfg.schema_version) +
                                   " (supported: " + std::to_string(supported_schema_version) +
                                   ")");
    }
    cfg.seed = as_u64(j, "", "seed", 0);
    cfg.output_dir = as_string(j, "", "output_dir", "out");

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        check_keys(p, "plant", {"mass", "coulomb_level", "viscous_coeff", "Ts", "friction_on"});
        cfg.plant.mass = as_double(p, "plant", "mass", 0.0);
        cfg.plant.coulomb_level = as_double(p, "plant", "coulomb_level", 0.0);
        cfg.plant.viscous_coeff = as_double(p, "plant", "viscous_coeff", 0.0);
        cfg.plant.Ts = as_double(p, "plant", "Ts", 0.0);
        const std::string fo = as_string(p, "plant", "friction_on", "velocity_sign");
        try {
            cfg.plant.friction_on = friction_on_from_string(fo);
        } catch (const Error& e) {
            fail("plant.friction_on", e.what());
        }
    }
    if (j.contains("controller")) {
        const json& c = j.at("controller");
        check_keys(c, "controller", {"kp", "kd"});
        cfg.controller.kp = as_double(c, "controller", "kp", 0.0);
        cfg.controller.kd = as_double(c, "controller", "kd", 0.0);
    }
    if (j.contains("baseline")) {
        const json& b = j.at("baseline");
        check_keys(b, "baseline", {"velocity_gain", "acceleration_gain"});
        cfg.baseline.velocity_gain = as_double(b, "baseline", "velocity_gain", 0.0);
        cfg.baseline.acceleration_gain = as_double(b, "baseline", "acceleration_gain", 0.0);
    }
    if (j.contains("trajectory")) {
        cfg.trajectory = trajectory_from_json(j.at("trajectory"), "trajectory");
    }
    if (j.contains("plan")) {
        const json& p = j.at("plan");
        check_keys(p, "plan",
                   {"scale_factors", "repetitions", "noise_std", "window", "kernel", "optimizer"});
        cfg.plan.scale_factors = as_double_array(p, "plan", "scale_factors", {1.0});
        cfg.plan.repetitions = as_int(p, "plan", "repetitions", 1);
        cfg.plan.noise_std = as_double(p, "plan", "noise_std", 0.0);
        if (p.contains("window")) {
            try {
                cfg.plan.window = WindowConfig::from_json(p.at("window"));
            } catch (const Error& e) {
                fail("plan.window", e.what());
            }
        }
        if (p.contains("kernel")) cfg.plan.kernel = p.at("kernel");
        if (p.contains("optimizer")) {
            const json& o = p.at("optimizer");
            check_keys(o, "plan.optimizer",
                       {"max_iterations", "gradient_tolerance", "restarts", "log_lower",
                        "log_upper", "initial_sigma_n"});
            auto& opt = cfg.plan.optimizer;
            opt.max_iterations = as_int(o, "plan.optimizer", "max_iterations", opt.max_iterations);
            opt.gradient_tolerance =
                as_double(o, "plan.optimizer", "gradient_tolerance", opt.gradient_tolerance);
            opt.restarts = as_int(o, "plan.optimizer", "restarts", opt.restarts);
            opt.log_lower = as_double(o, "plan.optimizer", "log_lower", opt.log_lower);
            opt.log_upper = as_double(o, "plan.optimizer", "log_upper", opt.log_upper);
            opt.initial_sigma_n =
                as_double(o, "plan.optimizer", "initial_sigma_n", opt.initial_sigma_n);
        }
    }
    if (j.contains("evaluation")) {
        const json& e = j.at("evaluation");
        check_keys(e, "evaluation", {"scales"});
        cfg.evaluation.scales = as_double_array(e, "evaluation", "scales", {1.0});
    }
    if (j.contains("convergence")) {
        const json& c = j.at("convergence");
        check_keys(c, "convergence", {"trajectory", "kernel", "levels"});
        if (c.contains("trajectory")) {
            cfg.convergence.trajectory =
                trajectory_from_json(c.at("trajectory"), "convergence.trajectory");
        }
        if (c.contains("kernel")) cfg.convergence.kernel = c.at("kernel");
        if (c.contains("levels")) {
            const json& levels = c.at("levels");
            if (!levels.is_array()) fail("convergence.levels", "expected an array");
            int i = 0;
            for (const json& l : levels) {
                const std::string where = "convergence.levels[" + std::to_string(i) + "]";
                check_keys(l, where, {"stride", "scales"});
                DensityLevel level;
                level.stride = as_int(l, where, "stride", 1);
                level.scale_factors = as_double_array(l, where, "scales", {1.0});
                cfg.convergence.levels.push_back(std::move(level));
                ++i;
            }
        }
    }
    return cfg;
}

LoopSetup ExperimentConfig::make_loop_setup() const {
    LoopSetup loop;
    loop.plant = plant;
    loop.controller = make_pd_controller(controller.kp, controller.kd, plant.Ts);
    loop.baseline_ff =
        make_baseline_feedforward(baseline.velocity_gain, baseline.acceleration_gain, plant.Ts);
    return loop;
}

Trajectory ExperimentConfig::make_base_reference() const {
    return build_trajectory(trajectory, plant.Ts);
}

Trajectory ExperimentConfig::make_convergence_reference() const {
    return build_trajectory(convergence.trajectory ? *convergence.trajectory : trajectory,
                            plant.Ts);
}

KernelSpec ExperimentConfig::make_kernel(const nlohmann::json& kernel_json) const {
    if (kernel_json.is_null()) fail("kernel", "no kernel configured");
    return kernel_from_config_json(kernel_json, plan.window.n_theta());
}

ExperimentPlan ExperimentConfig::make_plan() const {
    ExperimentPlan p;
    p.base_reference = make_base_reference();
    p.scale_factors = plan.scale_factors;
    p.repetitions = plan.repetitions;
    p.noise_std = plan.noise_std;
    p.window = plan.window;
    p.kernel = make_kernel(plan.kernel);
    p.optimizer.max_iterations = plan.optimizer.max_iterations;
    p.optimizer.gradient_tolerance = plan.optimizer.gradient_tolerance;
    p.optimizer.restarts = plan.optimizer.restarts;
    p.optimizer.log_lower = plan.optimizer.log_lower;
    p.optimizer.log_upper = plan.optimizer.log_upper;
    p.optimizer.initial_sigma_n = plan.optimizer.initial_sigma_n;
    p.seed = seed;
    return p;
}

}  // namespace gpff
