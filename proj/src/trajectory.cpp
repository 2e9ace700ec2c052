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

#include "gpff/trajectory.hpp"

#include <cmath>
#include <vector>

namespace gpff {
namespace {

Eigen::Index time_to_samples(double seconds, double Ts) {
    if (seconds <= 0.0) return 0;
    return static_cast<Eigen::Index>(std::llround(seconds / Ts));
}

}  // namespace

Trajectory Trajectory::scaled(double factor) const {
    if (!std::isfinite(factor)) {
        throw Error(ErrorCategory::invalid_input, "scale factor must be finite");
    }
    Trajectory t = *this;
    t.samples *= factor;
    t.v_max *= std::abs(factor);
    t.a_max *= std::abs(factor);
    t.j_max *= std::abs(factor);
    return t;
}

void Trajectory::validate() const {
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw Error(ErrorCategory::invalid_input, "trajectory sample time must be positive");
    }
    if (!samples.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "trajectory contains non-finite samples");
    }
    // Discrete derivative chain against the declared bounds, with rounding
    // slack: one part in 1e9 relative plus an absolute floor.
    const auto within = [](double value, double bound) {
        return std::abs(value) <= bound * (1.0 + 1e-9) + 1e-12;
    };
    double prev_v = 0.0, prev_a = 0.0;
    double prev_r = samples.size() > 0 ? samples[0] : 0.0;
    for (Eigen::Index t = 0; t < samples.size(); ++t) {
        const double v = (samples[t] - prev_r) / Ts;
        const double a = (v - prev_v) / Ts;
        const double j = (a - prev_a) / Ts;
        if (!within(v, v_max) || !within(a, a_max) || (t >= 2 && !within(j, j_max))) {
            throw Error(ErrorCategory::invalid_input,
                        "trajectory violates its derivative bounds at sample " +
                            std::to_string(t));
        }
        prev_r = samples[t];
        prev_v = v;
        prev_a = a;
    }
}

Trajectory gen_third_order_reference(double displacement, double v_max, double a_max,
                                     double j_max, double Ts, const TrajectoryOptions& opt) {
    if (!(Ts > 0.0) || !std::isfinite(Ts)) {
        throw Error(ErrorCategory::infeasible, "sample time must be positive");
    }
    if (!std::isfinite(displacement)) {
        throw Error(ErrorCategory::infeasible, "displacement must be finite");
    }

    std::vector<double> move;  // positions along the move, starting after one step
    if (displacement != 0.0) {
        if (!(v_max > 0.0) || !(a_max > 0.0) || !(j_max > 0.0) || !std::isfinite(v_max) ||
            !std::isfinite(a_max) || !std::isfinite(j_max)) {
            throw Error(ErrorCategory::infeasible,
                        "nonzero displacement needs positive velocity, acceleration and jerk "
                        "bounds");
        }
        const double sgn = displacement > 0.0 ? 1.0 : -1.0;
        const double dist = std::abs(displacement);

        // Continuous-time peak velocity: the lower of the velocity bound and
        // the distance-limited peak of a triangular/trapezoidal profile.
        const double tj_full = a_max / j_max;
        const double v_trap =
            0.5 * (-tj_full * a_max + std::sqrt(tj_full * tj_full * a_max * a_max +
                                                4.0 * dist * a_max));
        const double v_dist = v_trap >= a_max * tj_full
                                  ? v_trap
                                  : std::cbrt(dist * dist * j_max / 4.0);
        const double v_peak = std::min(v_max, v_dist);

        double tj, ta;
        if (v_peak * j_max >= a_max * a_max) {
            tj = a_max / j_max;
            ta = v_peak / a_max - tj;
        } else {
            tj = std::sqrt(v_peak / j_max);
            ta = 0.0;
        }

        // Integer phase lengths; the jerk magnitude is then lowered so the
        // built acceleration and velocity peaks respect their bounds.
        const auto count = [Ts](double seconds) {
            return std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(
                                                 seconds / Ts - 1e-9)));
        };
        const Eigen::Index nj = std::max<Eigen::Index>(1, count(tj));
        const Eigen::Index na = count(ta);
        const double J = std::min(
            {j_max, a_max / (static_cast<double>(nj) * Ts),
             v_max / (Ts * Ts * static_cast<double>(nj) * static_cast<double>(nj + na))});
        const double v_built = J * Ts * Ts * static_cast<double>(nj) *
                               static_cast<double>(nj + na);

        const auto integrate = [&](Eigen::Index nv) {
            std::vector<double> p;
            p.reserve(static_cast<std::size_t>(4 * nj + 2 * na + nv));
            double acc = 0.0, vel = 0.0, pos = 0.0;
            const auto run = [&](Eigen::Index n, double jerk) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += Ts * jerk;
                    vel += Ts * acc;
                    pos += Ts * vel;
                    p.push_back(pos);
                }
            };
            run(nj, J);
            run(na, 0.0);
            run(nj, -J);
            run(nv, 0.0);
            run(nj, -J);
            run(na, 0.0);
            run(nj, J);
            return p;
        };

        std::vector<double> raw = integrate(0);
        Eigen::Index nv = 0;
        if (raw.back() < dist && v_built > 0.0) {
            nv = static_cast<Eigen::Index>(std::ceil((dist - raw.back()) / (Ts * v_built)));
            raw = integrate(nv);
        }
        while (raw.back() < dist) {  // fp safety; at most a step or two
            raw = integrate(++nv);
        }

        const double scale = sgn * (dist / raw.back());
        move.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) move[i] = scale * raw[i];
    }

    const Eigen::Index n_lead = time_to_samples(opt.lead_in_time, Ts);
    const Eigen::Index n_dwell = time_to_samples(opt.dwell_time, Ts);
    const Eigen::Index n_move = static_cast<Eigen::Index>(move.size());
    const double plateau = move.empty() ? 0.0 : move.back();

    const Eigen::Index natural =
        n_lead + n_move + n_dwell + (opt.include_return ? n_move : 0);
    if (opt.pad_to_length > 0 && natural > opt.pad_to_length) {
        throw Error(ErrorCategory::infeasible,
                    "natural profile length " + std::to_string(natural) +
                        " exceeds the requested " + std::to_string(opt.pad_to_length));
    }
    const Eigen::Index total = opt.pad_to_length > 0 ? opt.pad_to_length : natural;

    Trajectory traj;
    traj.Ts = Ts;
    traj.v_max = v_max;
    traj.a_max = a_max;
    traj.j_max = j_max;
    traj.samples = Vector::Zero(total);
    Eigen::Index at = n_lead;
    for (Eigen::Index i = 0; i < n_move; ++i) traj.samples[at++] = move[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n_dwell; ++i) traj.samples[at++] = plateau;
    if (opt.include_return) {
        // Mirrored descent reuses the move profile, so it lands on exactly 0.
        for (Eigen::Index i = 0; i < n_move; ++i) {
            traj.samples[at++] = plateau - move[static_cast<std::size_t>(i)];
        }
    } else {
        for (; at < total; ++at) traj.samples[at] = plateau;
    }
    // Remaining padding (after a return) is already zero.

    traj.validate();
    return traj;
}

}  // namespace gpff
