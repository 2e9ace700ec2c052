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

#include "gpff/kernels.hpp"

#include <cmath>
#include <set>
#include <utility>

namespace gpff {
namespace {

constexpr double kSqrt3 = 1.7320508075688772935274463415059;

void check_finite_positive(const Vector& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] <= 0.0) {
            throw Error(ErrorCategory::invalid_input,
                        std::string(what) + " must be finite and positive");
        }
    }
}

/// Flat view of one leaf with precomputed reciprocals. All kernel values,
/// in eval() and gram() alike, go through leaf_value() on such a view, so
/// the two paths agree bit for bit.
struct LeafView {
    KernelVariant variant;
    Eigen::Index dim;
    double sigma_f;
    double sigma_f2;
    Vector inv_l;       // 1 / l_i
    Vector pi_over_p;   // pi / p_i (periodic only)
};

LeafView make_view(const KernelSpec& leaf) {
    const HyperParams& hp = leaf.params();
    LeafView v;
    v.variant = leaf.variant();
    v.dim = leaf.dim();
    v.sigma_f = hp.sigma_f;
    v.sigma_f2 = hp.sigma_f * hp.sigma_f;
    v.inv_l = hp.lengthscales.cwiseInverse();
    if (v.variant == KernelVariant::periodic) {
        v.pi_over_p = (M_PI * hp.periods.cwiseInverse().array()).matrix();
    }
    return v;
}

std::vector<LeafView> make_views(const KernelSpec& spec) {
    std::vector<LeafView> views;
    if (spec.is_leaf()) {
        views.push_back(make_view(spec));
    } else {
        for (const KernelSpec& t : spec.terms()) views.push_back(make_view(t));
    }
    return views;
}

/// Scaled squared distance sum_i ((a_i - b_i) * inv_l_i)^2.
inline double scaled_sqdist(const LeafView& v, const double* a, const double* b) {
    double rho = 0.0;
    for (Eigen::Index i = 0; i < v.dim; ++i) {
        const double d = (a[i] - b[i]) * v.inv_l[i];
        rho += d * d;
    }
    return rho;
}

inline double periodic_exponent(const LeafView& v, const double* a, const double* b) {
    double s2 = 0.0;
    for (Eigen::Index i = 0; i < v.dim; ++i) {
        const double s = std::sin((a[i] - b[i]) * v.pi_over_p[i]) * v.inv_l[i];
        s2 += s * s;
    }
    return s2;
}

inline double leaf_value(const LeafView& v, const double* a, const double* b) {
    switch (v.variant) {
        case KernelVariant::squared_exponential:
            return v.sigma_f2 * std::exp(-0.5 * scaled_sqdist(v, a, b));
        case KernelVariant::matern32: {
            const double tau = std::sqrt(scaled_sqdist(v, a, b));
            const double x = kSqrt3 * tau;
            return v.sigma_f2 * (1.0 + x) * std::exp(-x);
        }
        case KernelVariant::periodic:
            return v.sigma_f2 * std::exp(-0.5 * periodic_exponent(v, a, b));
        case KernelVariant::sum:
            break;
    }
    throw Error(ErrorCategory::invalid_input, "leaf_value on non-leaf kernel");
}

inline double views_value(const std::vector<LeafView>& views, const double* a, const double* b) {
    double k = 0.0;
    for (const LeafView& v : views) k += leaf_value(v, a, b);
    return k;
}

/// Per-pair hyperparameter gradient of one leaf, written into grad[0..n).
/// Layout matches params_vector: sigma_f, lengthscales, then periods.
inline void leaf_grad(const LeafView& v, const double* a, const double* b, double* grad) {
    switch (v.variant) {
        case KernelVariant::squared_exponential: {
            const double k = v.sigma_f2 * std::exp(-0.5 * scaled_sqdist(v, a, b));
            grad[0] = 2.0 * k / v.sigma_f;
            for (Eigen::Index i = 0; i < v.dim; ++i) {
                const double d = a[i] - b[i];
                // d k / d l_i = k * d_i^2 / l_i^3
                grad[1 + i] = k * d * d * v.inv_l[i] * v.inv_l[i] * v.inv_l[i];
            }
            return;
        }
        case KernelVariant::matern32: {
            const double rho = scaled_sqdist(v, a, b);
            const double x = kSqrt3 * std::sqrt(rho);
            const double e = std::exp(-x);
            grad[0] = 2.0 * v.sigma_f * (1.0 + x) * e;
            // d k / d l_i = 3 sigma_f^2 exp(-sqrt(3) tau) d_i^2 / l_i^3;
            // the tau in the product rule cancels, so the limit at tau = 0
            // is smooth.
            const double c = 3.0 * v.sigma_f2 * e;
            for (Eigen::Index i = 0; i < v.dim; ++i) {
                const double d = a[i] - b[i];
                grad[1 + i] = c * d * d * v.inv_l[i] * v.inv_l[i] * v.inv_l[i];
            }
            return;
        }
        case KernelVariant::periodic: {
            const double k = v.sigma_f2 * std::exp(-0.5 * periodic_exponent(v, a, b));
            grad[0] = 2.0 * k / v.sigma_f;
            for (Eigen::Index i = 0; i < v.dim; ++i) {
                const double d = a[i] - b[i];
                const double phi = d * v.pi_over_p[i];
                const double s = std::sin(phi);
                // d k / d l_i = k sin^2(phi) / l_i^3
                grad[1 + i] = k * s * s * v.inv_l[i] * v.inv_l[i] * v.inv_l[i];
                // d k / d p_i = k * pi d_i sin(2 phi) / (2 p_i^2 l_i^2);
                // pi / p_i^2 = pi_over_p_i^2 / pi.
                grad[1 + v.dim + i] = k * d * std::sin(2.0 * phi) *
                                      v.pi_over_p[i] * v.pi_over_p[i] / M_PI *
                                      0.5 * v.inv_l[i] * v.inv_l[i];
            }
            return;
        }
        case KernelVariant::sum:
            break;
    }
    throw Error(ErrorCategory::invalid_input, "leaf_grad on non-leaf kernel");
}

Eigen::Index leaf_num_params(const LeafView& v) {
    return 1 + v.dim + (v.variant == KernelVariant::periodic ? v.dim : 0);
}

void check_windows(const KernelSpec& spec, const Matrix& A, const char* what) {
    if (A.cols() != spec.dim()) {
        throw Error(ErrorCategory::invalid_input,
                    std::string(what) + ": window dimension " + std::to_string(A.cols()) +
                        " does not match kernel dimension " + std::to_string(spec.dim()));
    }
    if (!A.allFinite()) {
        throw Error(ErrorCategory::invalid_input,
                    std::string(what) + ": windows contain non-finite values");
    }
}

}  // namespace

void HyperParams::validate(Eigen::Index dim, bool needs_periods) const {
    if (!std::isfinite(sigma_f) || sigma_f <= 0.0) {
        throw Error(ErrorCategory::invalid_input, "sigma_f must be finite and positive");
    }
    if (!std::isfinite(sigma_n) || sigma_n < 0.0) {
        throw Error(ErrorCategory::invalid_input, "sigma_n must be finite and non-negative");
    }
    if (lengthscales.size() != dim) {
        throw Error(ErrorCategory::invalid_input,
                    "expected " + std::to_string(dim) + " lengthscales, got " +
                        std::to_string(lengthscales.size()));
    }
    check_finite_positive(lengthscales, "lengthscales");
    if (needs_periods) {
        if (periods.size() != dim) {
            throw Error(ErrorCategory::invalid_input,
                        "periodic kernel needs " + std::to_string(dim) + " periods, got " +
                            std::to_string(periods.size()));
        }
        check_finite_positive(periods, "periods");
    } else if (periods.size() != 0) {
        throw Error(ErrorCategory::invalid_input, "periods given for a non-periodic kernel");
    }
}

const char* to_string(KernelVariant v) {
    switch (v) {
        case KernelVariant::squared_exponential: return "SquaredExponential";
        case KernelVariant::matern32: return "Matern32";
        case KernelVariant::periodic: return "Periodic";
        case KernelVariant::sum: return "Sum";
    }
    return "unknown";
}

KernelVariant kernel_variant_from_string(const std::string& name) {
    if (name == "SquaredExponential" || name == "squared_exponential" || name == "se") {
        return KernelVariant::squared_exponential;
    }
    if (name == "Matern32" || name == "matern32") return KernelVariant::matern32;
    if (name == "Periodic" || name == "periodic") return KernelVariant::periodic;
    if (name == "Sum" || name == "sum") return KernelVariant::sum;
    throw Error(ErrorCategory::invalid_input, "unknown kernel variant '" + name + "'");
}

KernelSpec KernelSpec::squared_exponential(double sigma_f, Vector lengthscales) {
    KernelSpec s;
    s.variant_ = KernelVariant::squared_exponential;
    s.dim_ = lengthscales.size();
    s.params_.sigma_f = sigma_f;
    s.params_.lengthscales = std::move(lengthscales);
    s.params_.validate(s.dim_, false);
    if (s.dim_ == 0) throw Error(ErrorCategory::invalid_input, "kernel dimension must be positive");
    return s;
}

KernelSpec KernelSpec::matern32(double sigma_f, Vector lengthscales) {
    KernelSpec s = squared_exponential(sigma_f, std::move(lengthscales));
    s.variant_ = KernelVariant::matern32;
    return s;
}

KernelSpec KernelSpec::periodic(double sigma_f, Vector lengthscales, Vector periods) {
    KernelSpec s;
    s.variant_ = KernelVariant::periodic;
    s.dim_ = lengthscales.size();
    s.params_.sigma_f = sigma_f;
    s.params_.lengthscales = std::move(lengthscales);
    s.params_.periods = std::move(periods);
    s.params_.validate(s.dim_, true);
    if (s.dim_ == 0) throw Error(ErrorCategory::invalid_input, "kernel dimension must be positive");
    return s;
}

KernelSpec KernelSpec::sum(std::vector<KernelSpec> terms) {
    if (terms.size() < 2) {
        throw Error(ErrorCategory::invalid_input, "sum kernel needs at least two terms");
    }
    for (const KernelSpec& t : terms) {
        if (!t.is_leaf()) {
            throw Error(ErrorCategory::invalid_input, "sum kernel terms must be leaf kernels");
        }
        if (t.dim() != terms.front().dim()) {
            throw Error(ErrorCategory::invalid_input,
                        "sum kernel terms must share the input dimension");
        }
    }
    KernelSpec s;
    s.variant_ = KernelVariant::sum;
    s.dim_ = terms.front().dim();
    s.terms_ = std::move(terms);
    return s;
}

const HyperParams& KernelSpec::params() const {
    if (!is_leaf()) throw Error(ErrorCategory::invalid_input, "params() on a sum kernel");
    return params_;
}

const std::vector<KernelSpec>& KernelSpec::terms() const {
    if (is_leaf()) throw Error(ErrorCategory::invalid_input, "terms() on a leaf kernel");
    return terms_;
}

double KernelSpec::prior_variance() const {
    if (is_leaf()) return params_.sigma_f * params_.sigma_f;
    double v = 0.0;
    for (const KernelSpec& t : terms_) v += t.prior_variance();
    return v;
}

Eigen::Index KernelSpec::num_params() const {
    if (is_leaf()) {
        return 1 + dim_ + (variant_ == KernelVariant::periodic ? dim_ : 0);
    }
    Eigen::Index n = 0;
    for (const KernelSpec& t : terms_) n += t.num_params();
    return n;
}

Vector KernelSpec::params_vector() const {
    Vector p(num_params());
    if (is_leaf()) {
        p[0] = params_.sigma_f;
        p.segment(1, dim_) = params_.lengthscales;
        if (variant_ == KernelVariant::periodic) p.segment(1 + dim_, dim_) = params_.periods;
        return p;
    }
    Eigen::Index off = 0;
    for (const KernelSpec& t : terms_) {
        p.segment(off, t.num_params()) = t.params_vector();
        off += t.num_params();
    }
    return p;
}

KernelSpec KernelSpec::with_params_vector(const Vector& p) const {
    if (p.size() != num_params()) {
        throw Error(ErrorCategory::invalid_input,
                    "expected " + std::to_string(num_params()) + " kernel parameters, got " +
                        std::to_string(p.size()));
    }
    if (is_leaf()) {
        switch (variant_) {
            case KernelVariant::squared_exponential:
                return squared_exponential(p[0], p.segment(1, dim_));
            case KernelVariant::matern32:
                return matern32(p[0], p.segment(1, dim_));
            case KernelVariant::periodic:
                return periodic(p[0], p.segment(1, dim_), p.segment(1 + dim_, dim_));
            case KernelVariant::sum:
                break;
        }
        throw Error(ErrorCategory::invalid_input, "corrupt kernel variant");
    }
    std::vector<KernelSpec> terms;
    Eigen::Index off = 0;
    for (const KernelSpec& t : terms_) {
        terms.push_back(t.with_params_vector(p.segment(off, t.num_params())));
        off += t.num_params();
    }
    return sum(std::move(terms));
}

std::vector<std::string> KernelSpec::param_names() const {
    std::vector<std::string> names;
    if (is_leaf()) {
        names.emplace_back("sigma_f");
        for (Eigen::Index i = 0; i < dim_; ++i) names.push_back("l_" + std::to_string(i));
        if (variant_ == KernelVariant::periodic) {
            for (Eigen::Index i = 0; i < dim_; ++i) names.push_back("p_" + std::to_string(i));
        }
        return names;
    }
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        for (const std::string& n : terms_[t].param_names()) {
            names.push_back("t" + std::to_string(t) + "." + n);
        }
    }
    return names;
}

nlohmann::json KernelSpec::to_json() const {
    nlohmann::json j;
    j["variant"] = to_string(variant_);
    if (is_leaf()) {
        j["sigma_f"] = params_.sigma_f;
        j["lengthscales"] = std::vector<double>(params_.lengthscales.begin(),
                                                params_.lengthscales.end());
        if (variant_ == KernelVariant::periodic) {
            j["periods"] = std::vector<double>(params_.periods.begin(), params_.periods.end());
        }
    } else {
        nlohmann::json terms = nlohmann::json::array();
        for (const KernelSpec& t : terms_) terms.push_back(t.to_json());
        j["terms"] = terms;
    }
    return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("variant")) {
        throw Error(ErrorCategory::parse, "kernel JSON must be an object with a 'variant'");
    }
    const KernelVariant variant = kernel_variant_from_string(j.at("variant").get<std::string>());
    const std::set<std::string> allowed = variant == KernelVariant::sum
                                              ? std::set<std::string>{"variant", "terms"}
                                              : std::set<std::string>{"variant", "sigma_f",
                                                                      "lengthscales", "periods"};
    for (const auto& item : j.items()) {
        if (!allowed.count(item.key())) {
            throw Error(ErrorCategory::parse, "unknown kernel key '" + item.key() + "'");
        }
    }
    if (variant == KernelVariant::sum) {
        std::vector<KernelSpec> terms;
        for (const nlohmann::json& t : j.at("terms")) terms.push_back(from_json(t));
        return sum(std::move(terms));
    }
    const auto to_vector = [](const nlohmann::json& a) {
        Vector v(a.size());
        Eigen::Index i = 0;
        for (const nlohmann::json& x : a) v[i++] = x.get<double>();
        return v;
    };
    const double sigma_f = j.at("sigma_f").get<double>();
    const Vector ls = to_vector(j.at("lengthscales"));
    switch (variant) {
        case KernelVariant::squared_exponential: return squared_exponential(sigma_f, ls);
        case KernelVariant::matern32: return matern32(sigma_f, ls);
        case KernelVariant::periodic: return periodic(sigma_f, ls, to_vector(j.at("periods")));
        case KernelVariant::sum: break;
    }
    throw Error(ErrorCategory::parse, "corrupt kernel JSON");
}

double eval(const KernelSpec& spec, const Vector& a, const Vector& b) {
    if (a.size() != spec.dim() || b.size() != spec.dim()) {
        throw Error(ErrorCategory::invalid_input,
                    "eval: window dimensions (" + std::to_string(a.size()) + ", " +
                        std::to_string(b.size()) + ") do not match kernel dimension " +
                        std::to_string(spec.dim()));
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw Error(ErrorCategory::invalid_input, "eval: windows contain non-finite values");
    }
    return views_value(make_views(spec), a.data(), b.data());
}

Matrix gram(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
    check_windows(spec, A, "gram");
    check_windows(spec, B, "gram");
    const std::vector<LeafView> views = make_views(spec);
    // Transposed copies make each window a contiguous column.
    const Matrix At = A.transpose();
    const bool symmetric = &A == &B;
    const Matrix Bt = symmetric ? Matrix() : Matrix(B.transpose());
    const Matrix& Qt = symmetric ? At : Bt;

    Matrix K(A.rows(), B.rows());
    if (symmetric) {
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            const double* a = At.col(i).data();
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double k = views_value(views, a, At.col(j).data());
                K(i, j) = k;
                K(j, i) = k;
            }
        }
        return K;
    }
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double* a = At.col(i).data();
        for (Eigen::Index j = 0; j < B.rows(); ++j) {
            K(i, j) = views_value(views, a, Qt.col(j).data());
        }
    }
    return K;
}

std::vector<Matrix> grad_hyper(const KernelSpec& spec, const Matrix& A) {
    check_windows(spec, A, "grad_hyper");
    const std::vector<LeafView> views = make_views(spec);
    const Matrix At = A.transpose();
    const Eigen::Index M = A.rows();

    std::vector<Matrix> out(spec.num_params(), Matrix(M, M));
    std::vector<double> buf(static_cast<std::size_t>(spec.num_params()));
    for (Eigen::Index i = 0; i < M; ++i) {
        const double* a = At.col(i).data();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double* b = At.col(j).data();
            std::size_t off = 0;
            for (const LeafView& v : views) {
                leaf_grad(v, a, b, buf.data() + off);
                off += static_cast<std::size_t>(leaf_num_params(v));
            }
            for (std::size_t p = 0; p < buf.size(); ++p) {
                out[p](i, j) = buf[p];
                out[p](j, i) = buf[p];
            }
        }
    }
    return out;
}

Vector weighted_grad_sum(const KernelSpec& spec, const Matrix& A, const Matrix& W) {
    check_windows(spec, A, "weighted_grad_sum");
    if (W.rows() != A.rows() || W.cols() != A.rows()) {
        throw Error(ErrorCategory::invalid_input,
                    "weighted_grad_sum: weight matrix must be square of size " +
                        std::to_string(A.rows()));
    }
    const std::vector<LeafView> views = make_views(spec);
    const Matrix At = A.transpose();
    const Eigen::Index M = A.rows();
    const Eigen::Index P = spec.num_params();

    Vector grad = Vector::Zero(P);
    std::vector<double> buf(static_cast<std::size_t>(P));
    for (Eigen::Index i = 0; i < M; ++i) {
        const double* a = At.col(i).data();
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double* b = At.col(j).data();
            std::size_t off = 0;
            for (const LeafView& v : views) {
                leaf_grad(v, a, b, buf.data() + off);
                off += static_cast<std::size_t>(leaf_num_params(v));
            }
            // The derivative matrices are symmetric, so the pair (i, j)
            // carries weight W_ij + W_ji off the diagonal.
            const double w = i == j ? W(i, i) : W(i, j) + W(j, i);
            for (Eigen::Index p = 0; p < P; ++p) {
                grad[p] += w * buf[static_cast<std::size_t>(p)];
            }
        }
    }
    return grad;
}

}  // namespace gpff
