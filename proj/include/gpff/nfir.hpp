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

#ifndef GPFF_NFIR_HPP
#define GPFF_NFIR_HPP

#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gpff/errors.hpp"
#include "gpff/plantsim.hpp"

namespace gpff {

/// Window geometry for the noncausal regressor. The window at sample t is
///   [x(t + n_ac), x(t + n_ac - 1), ..., x(t), ..., x(t - n_c)]
/// (newest first): n_ac samples of preview, the current sample, n_c samples
/// of history; n_theta = n_c + n_ac + 1 entries total. Samples outside the
/// signal are taken as zero. `stride` keeps every stride-th window when
/// assembling training data.
struct WindowConfig {
    int n_c = 0;
    int n_ac = 0;
    int stride = 1;

    int n_theta() const { return n_c + n_ac + 1; }
    void validate() const;

    nlohmann::json to_json() const;
    static WindowConfig from_json(const nlohmann::json& j);
};

/// One regressor window (a row of the window matrix), newest sample first.
using RegressorWindow = Vector;

/// All N windows of a signal as rows: result(t, j) = signal[t + n_ac - j]
/// with zero padding outside [0, N). Ignores cfg.stride.
Matrix build_windows(const Vector& signal, const WindowConfig& cfg);

/// Query windows for a reference signal; identical construction to
/// build_windows (windows of r stand in for windows of y at prediction
/// time).
Matrix reference_to_query_windows(const Vector& r, const WindowConfig& cfg);

/// Training data for the inverse model: row i of Y is a regressor window of
/// the measured output, u(i) the plant input observed with it.
struct Dataset {
    Matrix Y;
    Vector u;
    WindowConfig window;

    Eigen::Index size() const { return Y.rows(); }
    void validate() const;
};

/// Builds the training set from closed-loop logs: windows of y paired with
/// u, decimated by cfg.stride (rows t = 0, stride, 2*stride, ... of each
/// log), logs concatenated in order.
Dataset assemble_dataset(const std::vector<ClosedLoopLog>& logs, const WindowConfig& cfg);

/// Averages repeated runs of the same reference sample-wise to suppress
/// noise. Logs are grouped by meta.reference_id (group order is first
/// appearance); within a group the references must match exactly. Returns
/// one log per group with repetition 0 and the first log's seed.
std::vector<ClosedLoopLog> average_repetitions(const std::vector<ClosedLoopLog>& logs);

}  // namespace gpff

#endif
