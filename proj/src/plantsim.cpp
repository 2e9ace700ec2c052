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

#include "gpff/plantsim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "gpff/rng.hpp"

namespace gpff {
namespace {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_same_rate(const DiscreteTF& tf, double Ts, const char* what) {
    if (tf.Ts != Ts) {
        throw Error(ErrorCategory::invalid_input,
                    std::string(what) + " sample time does not match the plant's");
    }
}

}  // namespace

void DiscreteTF::validate() const {
    if (num.size() == 0 || den.size() == 0) {
        throw Error(ErrorCategory::invalid_input, "transfer function needs coefficients");
    }
    if (!num.allFinite() || !den.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "transfer function coefficients must be finite");
    }
    if (den[0] == 0.0) {
        throw Error(ErrorCategory::invalid_input,
                    "transfer function denominator leading coefficient must be nonzero");
    }
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw Error(ErrorCategory::invalid_input, "transfer function sample time must be positive");
    }
}

bool denominator_stable(const DiscreteTF& tf) {
    tf.validate();
    const Eigen::Index d = tf.den.size() - 1;
    if (d == 0) return true;
    // Poles are roots of den[0] z^d + den[1] z^(d-1) + ... + den[d];
    // companion-matrix eigenvalues of the monic form.
    Matrix companion = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) companion(0, i) = -tf.den[i + 1] / tf.den[0];
    companion.block(1, 0, d - 1, d - 1).setIdentity();
    const auto roots = companion.eigenvalues();
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(roots[i]) >= 1.0) return false;
    }
    return true;
}

TFState::TFState(const DiscreteTF& tf) {
    tf.validate();
    const Eigen::Index n = std::max(tf.num.size(), tf.den.size());
    b_ = Vector::Zero(n);
    a_ = Vector::Zero(n);
    b_.head(tf.num.size()) = tf.num / tf.den[0];
    a_.head(tf.den.size()) = tf.den / tf.den[0];
    state_ = Vector::Zero(std::max<Eigen::Index>(n - 1, 0));
}

double TFState::step(double x) {
    // Direct form II transposed.
    const Eigen::Index n = b_.size();
    const double y = n > 1 ? b_[0] * x + state_[0] : b_[0] * x;
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        state_[i] = b_[i + 1] * x + state_[i + 1] - a_[i + 1] * y;
    }
    if (n > 1) state_[n - 2] = b_[n - 1] * x - a_[n - 1] * y;
    return y;
}

FilterResult filter(const DiscreteTF& tf, const Vector& x) {
    if (!x.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "filter input contains non-finite values");
    }
    TFState state(tf);
    FilterResult r;
    r.y = Vector(x.size());
    for (Eigen::Index t = 0; t < x.size(); ++t) r.y[t] = state.step(x[t]);
    r.stable = denominator_stable(tf);
    return r;
}

const char* to_string(FrictionOn f) {
    return f == FrictionOn::velocity_sign ? "velocity_sign" : "output_sign";
}

FrictionOn friction_on_from_string(const std::string& name) {
    if (name == "velocity_sign") return FrictionOn::velocity_sign;
    if (name == "output_sign") return FrictionOn::output_sign;
    throw Error(ErrorCategory::invalid_input, "unknown friction_on value '" + name + "'");
}

void FrictionPlant::validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw Error(ErrorCategory::invalid_input, "plant mass must be positive");
    }
    if (!(coulomb_level >= 0.0) || !std::isfinite(coulomb_level)) {
        throw Error(ErrorCategory::invalid_input, "coulomb level must be non-negative");
    }
    if (!(viscous_coeff >= 0.0) || !std::isfinite(viscous_coeff)) {
        throw Error(ErrorCategory::invalid_input, "viscous coefficient must be non-negative");
    }
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw Error(ErrorCategory::invalid_input, "plant sample time must be positive");
    }
}

PlantState plant_step(const FrictionPlant& plant, const PlantState& state, double input) {
    if (!std::isfinite(input) || !std::isfinite(state.position) ||
        !std::isfinite(state.velocity)) {
        throw Error(ErrorCategory::invalid_input, "plant step needs finite state and input");
    }
    // Stiction dead zone: a slow mass under a sub-Coulomb input stays put.
    // The zone is one Euler step wide so a stopping mass snaps to exactly
    // zero velocity instead of chattering around it.
    const double dead_zone = plant.Ts * plant.coulomb_level / plant.mass;
    if (std::abs(state.velocity) < dead_zone && std::abs(input) <= plant.coulomb_level) {
        return {state.position, 0.0};
    }
    const double s = plant.friction_on == FrictionOn::output_sign
                         ? sign(state.position)
                         : (state.velocity != 0.0 ? sign(state.velocity) : sign(input));
    const double accel =
        (input - plant.coulomb_level * s - plant.viscous_coeff * state.velocity) / plant.mass;
    PlantState next;
    next.velocity = state.velocity + plant.Ts * accel;
    next.position = state.position + plant.Ts * next.velocity;
    return next;
}

void ClosedLoopLog::validate() const {
    if (r.size() == 0 || y.size() != r.size() || u.size() != r.size() || e.size() != r.size()) {
        throw Error(ErrorCategory::invalid_input, "log series must be non-empty and aligned");
    }
    if (!r.allFinite() || !y.allFinite() || !u.allFinite() || !e.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "log contains non-finite values");
    }
    for (Eigen::Index t = 0; t < r.size(); ++t) {
        if (e[t] != r[t] - y[t]) {
            throw Error(ErrorCategory::invalid_input,
                        "log error series does not equal r - y at sample " + std::to_string(t));
        }
    }
}

ClosedLoopLog simulate_closed_loop(const FrictionPlant& plant, const DiscreteTF& controller,
                                   const Vector& feedforward, const Vector& r,
                                   const SimOptions& opt) {
    plant.validate();
    check_same_rate(controller, plant.Ts, "controller");
    if (feedforward.size() != r.size()) {
        throw Error(ErrorCategory::invalid_input,
                    "feedforward length does not match the reference");
    }
    if (!r.allFinite() || !feedforward.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "reference or feedforward is non-finite");
    }
    if (!(opt.noise_std >= 0.0) || !std::isfinite(opt.noise_std)) {
        throw Error(ErrorCategory::invalid_input, "noise_std must be non-negative");
    }

    const Eigen::Index N = r.size();
    // Guard scale has a floor of one unit so an all-zero reference does not
    // turn the guard into "any motion aborts".
    const double guard = 1e6 * std::max(r.cwiseAbs().maxCoeff(), 1.0);

    ClosedLoopLog log;
    log.r = r;
    log.y = Vector(N);
    log.u = Vector(N);
    log.e = Vector(N);
    log.seed = opt.seed;
    log.meta.reference_id = opt.reference_id;
    log.meta.repetition = opt.repetition;

    TFState ctrl(controller);
    PlantState state;
    Rng rng(opt.seed);
    for (Eigen::Index t = 0; t < N; ++t) {
        log.y[t] = state.position;
        log.e[t] = r[t] - log.y[t];
        log.u[t] = ctrl.step(log.e[t]) + feedforward[t];
        const double eps = opt.noise_std > 0.0 ? rng.normal(0.0, opt.noise_std) : 0.0;
        state = plant_step(plant, state, log.u[t] + eps);
        if (!(std::abs(state.position) <= guard)) {
            throw Error(ErrorCategory::divergence,
                        "closed loop diverged at sample " + std::to_string(t) +
                            " (|y| > 1e6 x reference scale)");
        }
    }
    return log;
}

ClosedLoopLog simulate_closed_loop(const FrictionPlant& plant, const DiscreteTF& controller,
                                   const DiscreteTF& ff_filter, const Vector& r,
                                   const SimOptions& opt) {
    check_same_rate(ff_filter, plant.Ts, "feedforward filter");
    return simulate_closed_loop(plant, controller, filter(ff_filter, r).y, r, opt);
}

Vector exact_inverse_feedforward(const FrictionPlant& plant, const Vector& r) {
    plant.validate();
    if (!r.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "reference contains non-finite values");
    }
    const Eigen::Index N = r.size();
    // Desired velocity states: y(t+1) = y(t) + Ts v(t+1) inverted, with the
    // loop starting and ending at rest.
    Vector vd = Vector::Zero(N + 1);
    for (Eigen::Index t = 1; t < N; ++t) vd[t] = (r[t] - r[t - 1]) / plant.Ts;

    Vector u(N);
    for (Eigen::Index t = 0; t < N; ++t) {
        // Friction sign the plant will see: moving uses the current
        // velocity, breakaway the upcoming one; the output variant follows
        // the reference position.
        double s;
        if (plant.friction_on == FrictionOn::output_sign) {
            s = sign(r[t]);
        } else {
            s = vd[t] != 0.0 ? sign(vd[t]) : sign(vd[t + 1]);
        }
        u[t] = plant.mass * (vd[t + 1] - vd[t]) / plant.Ts + plant.viscous_coeff * vd[t] +
               plant.coulomb_level * s;
    }
    return u;
}

DiscreteTF make_baseline_feedforward(double velocity_gain, double acceleration_gain, double Ts) {
    // cv (q-1)/(q Ts) + ca ((q-1)/(q Ts))^2 in powers of q^-1.
    DiscreteTF tf;
    tf.Ts = Ts;
    tf.num = Vector(3);
    tf.num[0] = velocity_gain / Ts + acceleration_gain / (Ts * Ts);
    tf.num[1] = -(velocity_gain / Ts + 2.0 * acceleration_gain / (Ts * Ts));
    tf.num[2] = acceleration_gain / (Ts * Ts);
    tf.den = Vector::Ones(1);
    tf.validate();
    return tf;
}

DiscreteTF make_pd_controller(double kp, double kd, double Ts) {
    DiscreteTF tf;
    tf.Ts = Ts;
    tf.num = Vector(2);
    tf.num[0] = kp + kd / Ts;
    tf.num[1] = -kd / Ts;
    tf.den = Vector::Ones(1);
    tf.validate();
    return tf;
}

}  // namespace gpff
