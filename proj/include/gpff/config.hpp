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

#ifndef GPFF_CONFIG_HPP
#define GPFF_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpff/pipeline.hpp"

namespace gpff {

/// Experiment configuration file (JSON). Parsing is strict: unknown keys
/// anywhere in the document are rejected with the offending key and section
/// named, and schema_version must match the supported version.
struct ExperimentConfig {
    static constexpr int supported_schema_version = 1;

    int schema_version = supported_schema_version;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    FrictionPlant plant;

    struct Controller {
        double kp = 0.0;
        double kd = 0.0;
    } controller;

    struct BaselineFeedforward {
        double velocity_gain = 0.0;
        double acceleration_gain = 0.0;
    } baseline;

    struct TrajectorySection {
        double displacement = 0.0;
        double v_max = 0.0;
        double a_max = 0.0;
        double j_max = 0.0;
        double lead_in_time = 0.0;
        double dwell_time = 0.0;
        bool include_return = false;
        Eigen::Index length = 0;  ///< pad to this many samples; 0 = natural
    } trajectory;

    struct PlanSection {
        std::vector<double> scale_factors{1.0};
        int repetitions = 1;
        double noise_std = 0.0;
        WindowConfig window;
        nlohmann::json kernel;  ///< parsed lazily; dimension comes from window
        struct Optimizer {
            int max_iterations = 60;
            double gradient_tolerance = 1e-3;
            int restarts = 2;
            double log_lower = -6.0;
            double log_upper = 6.0;
            double initial_sigma_n = 1e-2;
        } optimizer;
    } plan;

    struct EvaluationSection {
        std::vector<double> scales{1.0};
    } evaluation;

    struct ConvergenceSection {
        std::optional<TrajectorySection> trajectory;  ///< defaults to the main one
        nlohmann::json kernel;                        ///< defaults to plan.kernel
        std::vector<DensityLevel> levels;
    } convergence;

    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig from_json(const nlohmann::json& j);

    /// Plant + controller + baseline filter assembled for simulation.
    LoopSetup make_loop_setup() const;
    Trajectory make_base_reference() const;
    Trajectory make_convergence_reference() const;
    /// Kernel template sized to the window; `which` picks the plan or
    /// convergence section's kernel JSON.
    KernelSpec make_kernel(const nlohmann::json& kernel_json) const;
    ExperimentPlan make_plan() const;
};

/// Parses a kernel description: {"variant": ..., "sigma_f": ...,
/// "lengthscales": scalar-or-array, "periods": ..., "terms": [...]}.
/// Scalars broadcast to `dim` entries.
KernelSpec kernel_from_config_json(const nlohmann::json& j, Eigen::Index dim);

}  // namespace gpff

#endif
