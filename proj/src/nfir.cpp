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

#include "gpff/nfir.hpp"

#include <cmath>
#include <map>

namespace gpff {

void WindowConfig::validate() const {
    if (n_c < 0 || n_ac < 0) {
        throw Error(ErrorCategory::invalid_input, "window taps n_c and n_ac must be non-negative");
    }
    if (stride < 1) {
        throw Error(ErrorCategory::invalid_input, "window stride must be at least 1");
    }
}

nlohmann::json WindowConfig::to_json() const {
    return {{"n_c", n_c}, {"n_ac", n_ac}, {"stride", stride}};
}

WindowConfig WindowConfig::from_json(const nlohmann::json& j) {
    WindowConfig cfg;
    for (const auto& item : j.items()) {
        if (item.key() != "n_c" && item.key() != "n_ac" && item.key() != "stride") {
            throw Error(ErrorCategory::parse, "unknown window key '" + item.key() + "'");
        }
    }
    cfg.n_c = j.at("n_c").get<int>();
    cfg.n_ac = j.at("n_ac").get<int>();
    cfg.stride = j.value("stride", 1);
    cfg.validate();
    return cfg;
}

Matrix build_windows(const Vector& signal, const WindowConfig& cfg) {
    cfg.validate();
    if (!signal.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "signal contains non-finite values");
    }
    const Eigen::Index N = signal.size();
    const Eigen::Index W = cfg.n_theta();
    Matrix out = Matrix::Zero(N, W);
    // Window row t, column j holds signal[t + n_ac - j]; j runs from the
    // newest (preview) sample down to the oldest, zero outside the record.
    for (Eigen::Index t = 0; t < N; ++t) {
        for (Eigen::Index j = 0; j < W; ++j) {
            const Eigen::Index src = t + cfg.n_ac - j;
            if (src >= 0 && src < N) out(t, j) = signal[src];
        }
    }
    return out;
}

Matrix reference_to_query_windows(const Vector& r, const WindowConfig& cfg) {
    return build_windows(r, cfg);
}

void Dataset::validate() const {
    window.validate();
    if (Y.rows() == 0) {
        throw Error(ErrorCategory::invalid_input, "dataset is empty");
    }
    if (Y.cols() != window.n_theta()) {
        throw Error(ErrorCategory::invalid_input,
                    "window matrix has " + std::to_string(Y.cols()) + " columns, expected " +
                        std::to_string(window.n_theta()));
    }
    if (u.size() != Y.rows()) {
        throw Error(ErrorCategory::invalid_input,
                    "observation count " + std::to_string(u.size()) +
                        " does not match window count " + std::to_string(Y.rows()));
    }
    if (!Y.allFinite() || !u.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "dataset contains non-finite values");
    }
}

Dataset assemble_dataset(const std::vector<ClosedLoopLog>& logs, const WindowConfig& cfg) {
    cfg.validate();
    if (logs.empty()) {
        throw Error(ErrorCategory::invalid_input, "no logs to assemble");
    }
    Eigen::Index total = 0;
    for (const ClosedLoopLog& log : logs) {
        log.validate();
        total += (log.size() + cfg.stride - 1) / cfg.stride;
    }

    Dataset data;
    data.window = cfg;
    data.Y = Matrix(total, cfg.n_theta());
    data.u = Vector(total);
    Eigen::Index row = 0;
    for (const ClosedLoopLog& log : logs) {
        const Matrix windows = build_windows(log.y, cfg);
        for (Eigen::Index t = 0; t < log.size(); t += cfg.stride) {
            data.Y.row(row) = windows.row(t);
            data.u[row] = log.u[t];
            ++row;
        }
    }
    data.validate();
    return data;
}

std::vector<ClosedLoopLog> average_repetitions(const std::vector<ClosedLoopLog>& logs) {
    std::vector<std::string> group_order;
    std::map<std::string, std::vector<const ClosedLoopLog*>> groups;
    for (const ClosedLoopLog& log : logs) {
        log.validate();
        auto [it, inserted] = groups.try_emplace(log.meta.reference_id);
        if (inserted) group_order.push_back(log.meta.reference_id);
        it->second.push_back(&log);
    }

    std::vector<ClosedLoopLog> out;
    for (const std::string& id : group_order) {
        const auto& members = groups[id];
        const ClosedLoopLog& first = *members.front();
        for (const ClosedLoopLog* log : members) {
            if (log->size() != first.size()) {
                throw Error(ErrorCategory::invalid_input,
                            "repetitions of '" + id + "' have different lengths");
            }
            if (log->r != first.r) {
                throw Error(ErrorCategory::invalid_input,
                            "repetitions of '" + id + "' follow different references");
            }
        }
        ClosedLoopLog avg;
        avg.r = first.r;
        avg.y = Vector::Zero(first.size());
        avg.u = Vector::Zero(first.size());
        for (const ClosedLoopLog* log : members) {
            avg.y += log->y;
            avg.u += log->u;
        }
        avg.y /= static_cast<double>(members.size());
        avg.u /= static_cast<double>(members.size());
        avg.e = avg.r - avg.y;
        avg.seed = first.seed;
        avg.meta.reference_id = id;
        avg.meta.repetition = 0;
        out.push_back(std::move(avg));
    }
    return out;
}

}  // namespace gpff
