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

#ifndef GPFF_PLANTSIM_HPP
#define GPFF_PLANTSIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gpff/errors.hpp"
#include "gpff/kernels.hpp"  // Vector/Matrix aliases

namespace gpff {

/// Rational discrete-time transfer function in powers of q^-1:
///   y(t) = (num[0] x(t) + num[1] x(t-1) + ...
///           - den[1] y(t-1) - ...) / den[0]
/// Causal by construction; den[0] must be nonzero.
struct DiscreteTF {
    Vector num;
    Vector den;
    double Ts = 0.0;

    void validate() const;
};

/// True when all roots of the denominator polynomial (in z) lie strictly
/// inside the unit circle. A first-order den of size 1 is trivially stable.
bool denominator_stable(const DiscreteTF& tf);

struct FilterResult {
    Vector y;
    bool stable = true;  ///< denominator_stable of the filter that produced y
};

/// Filters x through tf with zero initial conditions. Unstable denominators
/// are flagged, not rejected; output may grow without bound.
FilterResult filter(const DiscreteTF& tf, const Vector& x);

/// Incremental direct-form II transposed realization for sample-by-sample
/// filtering inside the closed-loop simulator.
class TFState {
  public:
    explicit TFState(const DiscreteTF& tf);
    double step(double x);

  private:
    Vector b_, a_;   // normalized so a_[0] == 1
    Vector state_;   // length max(len(b), len(a)) - 1
};

/// Which signal's sign drives the Coulomb friction force.
enum class FrictionOn {
    velocity_sign,  ///< force opposes velocity; breakaway uses sign of input
    output_sign,    ///< force follows sign of the position output
};

const char* to_string(FrictionOn f);
FrictionOn friction_on_from_string(const std::string& name);

/// Mass with viscous and Coulomb friction, discretized at Ts by a
/// semi-implicit Euler step:
///   v+ = v + (Ts/m) (u - Fc s - c v),  y+ = y + Ts v+
/// where s is the friction sign (see FrictionOn). A stiction dead zone holds
/// the mass at rest: when |v| < Ts Fc / m and |u| <= Fc the velocity snaps
/// to exactly zero, so dwell phases freeze the state bit for bit.
struct FrictionPlant {
    double mass = 0.0;
    double coulomb_level = 0.0;
    double viscous_coeff = 0.0;
    double Ts = 0.0;
    FrictionOn friction_on = FrictionOn::velocity_sign;

    void validate() const;
};

struct PlantState {
    double position = 0.0;
    double velocity = 0.0;
};

PlantState plant_step(const FrictionPlant& plant, const PlantState& state, double input);

struct LogMeta {
    std::string reference_id;
    int repetition = 0;
};

/// One closed-loop run: reference, measured output, total plant input
/// (controller plus feedforward, before input noise) and servo error.
/// The identity e = r - y holds exactly by construction.
struct ClosedLoopLog {
    Vector r, y, u, e;
    std::uint64_t seed = 0;
    LogMeta meta;

    Eigen::Index size() const { return r.size(); }
    void validate() const;
};

struct SimOptions {
    double noise_std = 0.0;      ///< std of white input disturbance
    std::uint64_t seed = 0;      ///< RNG seed for the disturbance
    std::string reference_id;
    int repetition = 0;
};

/// Runs the loop of feedback controller plus additive feedforward:
///   e(t) = r(t) - y(t),  u(t) = C(e)(t) + ff(t),  plant input u(t) + eps(t).
/// y(t) is the plant position before the step driven by u(t), so u(t) first
/// affects y(t+1). Throws divergence when |y| exceeds 1e6 times the
/// reference scale.
ClosedLoopLog simulate_closed_loop(const FrictionPlant& plant, const DiscreteTF& controller,
                                   const Vector& feedforward, const Vector& r,
                                   const SimOptions& opt);

/// Same loop with the feedforward produced by filtering r through ff_filter.
ClosedLoopLog simulate_closed_loop(const FrictionPlant& plant, const DiscreteTF& controller,
                                   const DiscreteTF& ff_filter, const Vector& r,
                                   const SimOptions& opt);

/// Exact model inversion of the discretized plant: the input sequence that
/// reproduces r one step ahead through plant_step, including the Coulomb
/// term. Applying it open loop (or with any feedback on e) tracks r to
/// rounding error.
Vector exact_inverse_feedforward(const FrictionPlant& plant, const Vector& r);

/// velocity_gain * (q-1)/(q Ts) + acceleration_gain * ((q-1)/(q Ts))^2,
/// expanded in q^-1. The classical rigid-body feedforward; causal, so it
/// lags a noncausal inverse by construction.
DiscreteTF make_baseline_feedforward(double velocity_gain, double acceleration_gain, double Ts);

/// kp + kd (q-1)/(q Ts), expanded in q^-1.
DiscreteTF make_pd_controller(double kp, double kd, double Ts);

}  // namespace gpff

#endif
