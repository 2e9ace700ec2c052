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

#ifndef GPFF_KERNELS_HPP
#define GPFF_KERNELS_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gpff/errors.hpp"

namespace gpff {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Kernel hyperparameters. All entries are strictly positive; `lengthscales`
/// has one entry per regressor dimension (anisotropic), `periods` is used by
/// the periodic kernel only and is empty otherwise. `sigma_n` is the
/// observation noise standard deviation; it lives outside the kernel proper
/// and is carried here so one struct can describe a full model.
struct HyperParams {
    double sigma_f = 1.0;
    double sigma_n = 0.0;
    Vector lengthscales;
    Vector periods;

    /// Throws invalid-input unless sigma_f > 0, sigma_n >= 0, lengthscales
    /// has `dim` strictly positive finite entries and periods is empty or of
    /// length `dim` (required when `needs_periods`).
    void validate(Eigen::Index dim, bool needs_periods) const;
};

enum class KernelVariant {
    squared_exponential,
    matern32,
    periodic,
    sum,
};

const char* to_string(KernelVariant v);
KernelVariant kernel_variant_from_string(const std::string& name);

/// A covariance function over regressor windows, fixed to one input
/// dimension. Leaves are squared-exponential, Matern-3/2 or periodic;
/// `sum` combines two or more leaves of the same dimension, each with its
/// own output scale.
///
/// With scaled squared distance rho = sum_i ((a_i - b_i) / l_i)^2 and
/// tau = sqrt(rho):
///   squared_exponential: k = sigma_f^2 exp(-rho / 2)
///   matern32:            k = sigma_f^2 (1 + sqrt(3) tau) exp(-sqrt(3) tau)
///   periodic:            k = sigma_f^2 exp(-1/2 sum_i (sin(pi d_i / p_i) / l_i)^2)
///
/// The flattened hyperparameter vector used by the optimizer lists leaves in
/// order, each as [sigma_f, lengthscales..., periods...]; the noise level
/// sigma_n is appended by the caller, never stored here.
class KernelSpec {
  public:
    static KernelSpec squared_exponential(double sigma_f, Vector lengthscales);
    static KernelSpec matern32(double sigma_f, Vector lengthscales);
    static KernelSpec periodic(double sigma_f, Vector lengthscales, Vector periods);
    static KernelSpec sum(std::vector<KernelSpec> terms);

    KernelVariant variant() const { return variant_; }
    Eigen::Index dim() const { return dim_; }
    bool is_leaf() const { return variant_ != KernelVariant::sum; }

    /// Leaf parameters; throws on a sum kernel.
    const HyperParams& params() const;
    /// Sum terms; throws on a leaf.
    const std::vector<KernelSpec>& terms() const;

    /// Prior variance k(y, y): sigma_f^2 summed over leaves.
    double prior_variance() const;

    Eigen::Index num_params() const;
    Vector params_vector() const;
    KernelSpec with_params_vector(const Vector& p) const;
    std::vector<std::string> param_names() const;

    nlohmann::json to_json() const;
    static KernelSpec from_json(const nlohmann::json& j);

  private:
    KernelSpec() = default;

    KernelVariant variant_ = KernelVariant::squared_exponential;
    Eigen::Index dim_ = 0;
    HyperParams params_;
    std::vector<KernelSpec> terms_;
};

/// k(a, b). Validates dimensions and finiteness of both windows.
double eval(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Gram matrix between row-window sets: result(i, j) = eval(spec, A.row(i),
/// B.row(j)), computed with the same per-pair arithmetic as `eval` so the
/// identity holds bit for bit. gram(A, A) is exactly symmetric.
Matrix gram(const KernelSpec& spec, const Matrix& A, const Matrix& B);

/// Derivative Gram matrices d K / d theta_j for the symmetric gram(A, A),
/// ordered like params_vector().
std::vector<Matrix> grad_hyper(const KernelSpec& spec, const Matrix& A);

/// sum_{a,b} W(a,b) * dK(a,b)/d theta_j for each hyperparameter, without
/// materializing the derivative matrices. Same ordering as grad_hyper; W
/// must be square of size A.rows().
Vector weighted_grad_sum(const KernelSpec& spec, const Matrix& A, const Matrix& W);

}  // namespace gpff

#endif
