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

#ifndef GPFF_TRAJECTORY_HPP
#define GPFF_TRAJECTORY_HPP

#include <Eigen/Dense>

#include "gpff/errors.hpp"
#include "gpff/kernels.hpp"  // Vector alias

namespace gpff {

/// Sampled position setpoint with the kinematic bounds it was built under.
struct Trajectory {
    Vector samples;
    double Ts = 0.0;
    double v_max = 0.0;
    double a_max = 0.0;
    double j_max = 0.0;

    /// Scaled copy: positions and bounds multiplied by `factor`, so the
    /// scaled trajectory still validates against its own bounds.
    Trajectory scaled(double factor) const;

    /// Checks finiteness and that the discrete derivative chain
    /// (diff/Ts, diff^2/Ts^2, diff^3/Ts^3) respects the declared bounds up
    /// to rounding slack.
    void validate() const;
};

struct TrajectoryOptions {
    double lead_in_time = 0.0;   ///< rest samples before the move
    double dwell_time = 0.0;     ///< hold at the far position
    bool include_return = false; ///< mirror move back to the origin
    Eigen::Index pad_to_length = 0;  ///< extend with final value; 0 = natural length
};

/// Third-order point-to-point reference: jerk-limited S-curve from 0 to
/// `displacement`, optional dwell and mirrored return, starting and ending
/// at rest. Sample counts are integer, the profile is triple-integrated
/// from a discrete jerk sequence, and a final scaling <= 1 lands the end
/// position on `displacement` exactly while keeping every bound.
/// Throws infeasible for non-positive bounds with nonzero displacement or
/// when the natural profile exceeds pad_to_length.
Trajectory gen_third_order_reference(double displacement, double v_max, double a_max,
                                     double j_max, double Ts,
                                     const TrajectoryOptions& opt = {});

}  // namespace gpff

#endif
