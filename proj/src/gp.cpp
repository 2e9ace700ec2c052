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

#include "gpff/gp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gpff/csv.hpp"

namespace gpff {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// True when some pair of rows of Y is exactly identical (sorted adjacent
/// comparison, O(M log M) row comparisons).
bool has_duplicate_rows(const Matrix& Y) {
    const Eigen::Index M = Y.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto less = [&Y](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            if (Y(a, j) != Y(b, j)) return Y(a, j) < Y(b, j);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (Y.row(order[i - 1]) == Y.row(order[i])) return true;
    }
    return false;
}

struct LmlCore {
    detail::CholResult chol;
    Vector alpha;
    double value = 0.0;
};

LmlCore lml_core(const Dataset& data, const KernelSpec& kernel, double sigma_n) {
    Matrix Kn = gram(kernel, data.Y, data.Y);
    Kn.diagonal().array() += sigma_n * sigma_n;
    LmlCore core;
    core.chol = detail::chol_with_jitter(Kn);
    core.alpha = core.chol.llt.solve(data.u);
    const double quad = data.u.dot(core.alpha);
    const double logdet =
        2.0 * core.chol.llt.matrixLLT().diagonal().array().log().sum();
    core.value = -0.5 * quad - 0.5 * logdet -
                 0.5 * static_cast<double>(data.size()) * kLog2Pi;
    return core;
}

void check_model_params(const KernelSpec& kernel, const Dataset& data, double sigma_n) {
    if (kernel.dim() != data.window.n_theta()) {
        throw Error(ErrorCategory::invalid_input,
                    "kernel dimension " + std::to_string(kernel.dim()) +
                        " does not match window length " +
                        std::to_string(data.window.n_theta()));
    }
    if (!std::isfinite(sigma_n) || sigma_n < 0.0) {
        throw Error(ErrorCategory::invalid_input, "sigma_n must be finite and non-negative");
    }
}

}  // namespace

namespace detail {

CholResult chol_with_jitter(const Matrix& K) {
    if (!K.allFinite()) {
        throw Error(ErrorCategory::ill_conditioned,
                    "Cholesky failed: matrix contains non-finite entries");
    }
    const double mean_diag = K.diagonal().mean();
    CholResult r;
    r.llt.compute(K);
    if (r.llt.info() == Eigen::Success) return r;

    // Escalate a relative diagonal jitter tenfold per attempt.
    for (double level = 1e-10; level <= 1e-4 * 1.0000001; level *= 10.0) {
        Matrix Kj = K;
        const double jitter = level * mean_diag;
        Kj.diagonal().array() += jitter;
        r.llt.compute(Kj);
        if (r.llt.info() == Eigen::Success) {
            r.applied_jitter = jitter;
            return r;
        }
    }
    throw Error(ErrorCategory::ill_conditioned,
                "Cholesky failed after jitter levels 1e-10 through 1e-4 of the mean "
                "diagonal (" +
                    std::to_string(mean_diag) + ")");
}

}  // namespace detail

TrainedGP TrainedGP::fit(Dataset data, KernelSpec kernel, double sigma_n) {
    data.validate();
    check_model_params(kernel, data, sigma_n);
    if (sigma_n == 0.0 && has_duplicate_rows(data.Y)) {
        throw Error(ErrorCategory::ill_conditioned,
                    "duplicate regressor windows with sigma_n = 0 make the model singular");
    }
    TrainedGP gp;
    gp.data_ = std::move(data);
    gp.kernel_ = std::move(kernel);
    gp.sigma_n_ = sigma_n;
    gp.factorize();
    return gp;
}

void TrainedGP::factorize() {
    Matrix Kn = gram(kernel_, data_.Y, data_.Y);
    Kn.diagonal().array() += sigma_n_ * sigma_n_;
    detail::CholResult chol = detail::chol_with_jitter(Kn);
    jitter_ = chol.applied_jitter;
    llt_ = std::move(chol.llt);
    alpha_ = llt_.solve(data_.u);

    // Iterative refinement against the factored (jittered) system recovers
    // most of the accuracy a badly conditioned solve loses; the check after
    // it rejects models whose training-point predictions would still be off
    // by more than the interpolation budget.
    Kn.diagonal().array() += jitter_;
    const double scale = std::max(data_.u.norm(), 1e-300);
    double residual = (Kn * alpha_ - data_.u).norm();
    for (int pass = 0; pass < 3 && residual / scale > 1e-12; ++pass) {
        alpha_ += llt_.solve(data_.u - Kn * alpha_);
        const double refined = (Kn * alpha_ - data_.u).norm();
        if (!(refined < residual)) break;
        residual = refined;
    }
    if (!(residual / scale <= 1e-6)) {
        std::ostringstream msg;
        msg << "weight solve residual " << residual / scale
            << " exceeds 1e-6; the model is numerically unusable";
        throw Error(ErrorCategory::ill_conditioned, msg.str());
    }
}

Posterior TrainedGP::predict(const Matrix& R, bool with_variance, bool with_full_cov) const {
    const Matrix Kru = gram(kernel_, R, data_.Y);  // N x M
    Posterior post;
    post.mean = Kru * alpha_;
    if (!with_variance && !with_full_cov) return post;

    // V = L^-1 K(Y, R); posterior covariance is K(R, R) - V' V.
    const Matrix V = llt_.matrixL().solve(Kru.transpose());
    const double prior = kernel_.prior_variance();
    if (with_full_cov) {
        Matrix cov = gram(kernel_, R, R) - V.transpose() * V;
        cov = ((cov + cov.transpose()) * 0.5).eval();  // exact symmetry
        post.variance = cov.diagonal().cwiseMax(0.0);
        cov.diagonal() = post.variance;
        post.cov = std::move(cov);
        post.has_full_cov = true;
        post.has_variance = true;
        return post;
    }
    post.variance = Vector(R.rows());
    for (Eigen::Index i = 0; i < R.rows(); ++i) {
        post.variance[i] = std::max(0.0, prior - V.col(i).squaredNorm());
    }
    post.has_variance = true;
    return post;
}

double TrainedGP::predict_scalar(const RegressorWindow& r) const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < data_.size(); ++i) {
        s += alpha_[i] * eval(kernel_, data_.Y.row(i), r);
    }
    return s;
}

void TrainedGP::save(const std::string& path) const {
    namespace fs = std::filesystem;
    const fs::path model_path(path);
    const std::string stem = model_path.stem().string();
    const fs::path dir = model_path.parent_path();

    nlohmann::json j;
    j["schema_version"] = 1;
    j["kernel"] = kernel_.to_json();
    j["window"] = data_.window.to_json();
    j["sigma_n"] = sigma_n_;
    j["M"] = data_.size();
    j["n_theta"] = data_.window.n_theta();
    j["applied_jitter"] = jitter_;
    j["payload"] = {{"Y", stem + ".Y.csv"},
                    {"u", stem + ".u.csv"},
                    {"alpha", stem + ".alpha.csv"}};

    std::ofstream os(model_path);
    if (!os) throw Error(ErrorCategory::io, "cannot write '" + path + "'");
    os << j.dump(2) << "\n";
    os.close();
    csv::write_matrix((dir / (stem + ".Y.csv")).string(), data_.Y);
    csv::write_vector((dir / (stem + ".u.csv")).string(), "u", data_.u);
    csv::write_vector((dir / (stem + ".alpha.csv")).string(), "alpha", alpha_);
}

TrainedGP TrainedGP::load(const std::string& path) {
    namespace fs = std::filesystem;
    std::ifstream is(path);
    if (!is) throw Error(ErrorCategory::io, "cannot read '" + path + "'");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::parse, "'" + path + "': " + e.what());
    }

    const std::set<std::string> allowed{"schema_version", "kernel", "window", "sigma_n",
                                        "M", "n_theta", "applied_jitter", "payload"};
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw Error(ErrorCategory::parse, "'" + path + "': unknown key '" + item.key() + "'");
        }
    }
    try {
        if (j.at("schema_version").get<int>() != 1) {
            throw Error(ErrorCategory::parse,
                        "'" + path + "': unsupported schema_version");
        }
        const fs::path dir = fs::path(path).parent_path();
        const auto payload = j.at("payload");
        TrainedGP gp;
        gp.kernel_ = KernelSpec::from_json(j.at("kernel"));
        gp.data_.window = WindowConfig::from_json(j.at("window"));
        gp.data_.Y = csv::read_matrix((dir / payload.at("Y").get<std::string>()).string());
        gp.data_.u = csv::read_vector((dir / payload.at("u").get<std::string>()).string(), "u");
        gp.sigma_n_ = j.at("sigma_n").get<double>();
        const Vector alpha =
            csv::read_vector((dir / payload.at("alpha").get<std::string>()).string(), "alpha");

        gp.data_.validate();
        check_model_params(gp.kernel_, gp.data_, gp.sigma_n_);
        if (j.at("M").get<Eigen::Index>() != gp.data_.size() ||
            j.at("n_theta").get<int>() != gp.data_.window.n_theta() ||
            alpha.size() != gp.data_.size()) {
            throw Error(ErrorCategory::parse, "'" + path + "': payload sizes disagree");
        }
        // Refactorize deterministically, then keep the stored weights so a
        // round trip reproduces predictions bit for bit.
        gp.factorize();
        gp.alpha_ = alpha;
        return gp;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCategory::parse, "'" + path + "': " + e.what());
    }
}

LmlResult log_marginal_likelihood(const Dataset& data, const KernelSpec& kernel,
                                  double sigma_n) {
    data.validate();
    check_model_params(kernel, data, sigma_n);
    const LmlCore core = lml_core(data, kernel, sigma_n);
    const Eigen::Index M = data.size();

    // d LML / d theta = 1/2 tr((alpha alpha' - Kn^-1) dK/d theta).
    Matrix W = core.chol.llt.solve(Matrix::Identity(M, M));
    W = (-W + core.alpha * core.alpha.transpose()).eval();

    LmlResult r;
    r.value = core.value;
    r.gradient = Vector(kernel.num_params() + 1);
    r.gradient.head(kernel.num_params()) = 0.5 * weighted_grad_sum(kernel, data.Y, W);
    // dKn/d sigma_n = 2 sigma_n I.
    r.gradient[kernel.num_params()] = sigma_n * W.trace();
    return r;
}

double log_marginal_value(const Dataset& data, const KernelSpec& kernel, double sigma_n) {
    data.validate();
    check_model_params(kernel, data, sigma_n);
    return lml_core(data, kernel, sigma_n).value;
}

}  // namespace gpff
