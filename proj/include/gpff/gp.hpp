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

#ifndef GPFF_GP_HPP
#define GPFF_GP_HPP

#include <string>

#include <Eigen/Dense>

#include "gpff/kernels.hpp"
#include "gpff/nfir.hpp"

namespace gpff {

/// Gaussian posterior over function values at a set of query windows.
/// `variance` is the clamped-to-zero diagonal and `cov` the full matrix;
/// either is empty unless requested.
struct Posterior {
    Vector mean;
    Vector variance;
    Matrix cov;
    bool has_variance = false;
    bool has_full_cov = false;
};

namespace detail {

/// Cholesky of a symmetric PSD matrix with an escalating diagonal jitter:
/// on failure adds 1e-10 * mean(diag), escalating tenfold up to
/// 1e-4 * mean(diag). Throws ill-conditioned naming the attempted levels.
struct CholResult {
    Eigen::LLT<Matrix> llt;
    double applied_jitter = 0.0;
};

CholResult chol_with_jitter(const Matrix& K);

}  // namespace detail

/// Exact GP regression of u on regressor windows. Zero prior mean; the
/// posterior over f at queries R given data (Y, u) is
///   mean = K(R,Y) (K(Y,Y) + sigma_n^2 I)^-1 u
///   cov  = K(R,R) - K(R,Y) (K(Y,Y) + sigma_n^2 I)^-1 K(Y,R)
/// computed through one Cholesky factor of the noisy Gram matrix.
class TrainedGP {
  public:
    /// Throws ill-conditioned when the noisy Gram cannot be factored after
    /// the full jitter schedule, or immediately when sigma_n == 0 and Y has
    /// exactly duplicated rows (the model is singular by construction).
    static TrainedGP fit(Dataset data, KernelSpec kernel, double sigma_n);

    const Dataset& data() const { return data_; }
    const KernelSpec& kernel() const { return kernel_; }
    double sigma_n() const { return sigma_n_; }
    double applied_jitter() const { return jitter_; }
    const Vector& alpha() const { return alpha_; }

    /// Posterior at query windows (rows of R). The mean always; the
    /// diagonal variance and the full covariance only on request (the
    /// variance solve is the expensive part at scale).
    Posterior predict(const Matrix& R, bool with_variance = false,
                      bool with_full_cov = false) const;

    /// Posterior mean at a single window: sum_i alpha_i k(y_i, r).
    double predict_scalar(const RegressorWindow& r) const;

    /// Persists the model as a JSON header plus CSV payloads (Y, u, alpha)
    /// next to it, full double precision. load() reproduces predictions bit
    /// for bit.
    void save(const std::string& path) const;
    static TrainedGP load(const std::string& path);

  private:
    TrainedGP() = default;
    void factorize();

    Dataset data_;
    KernelSpec kernel_ = KernelSpec::squared_exponential(1.0, Vector::Ones(1));
    double sigma_n_ = 0.0;
    double jitter_ = 0.0;
    Eigen::LLT<Matrix> llt_;
    Vector alpha_;
};

/// Log marginal likelihood of the data under the kernel,
///   -1/2 u' Kn^-1 u - 1/2 log|Kn| - M/2 log 2 pi,  Kn = K + sigma_n^2 I,
/// with its gradient in the order params_vector() + [sigma_n].
struct LmlResult {
    double value = 0.0;
    Vector gradient;
};

LmlResult log_marginal_likelihood(const Dataset& data, const KernelSpec& kernel,
                                  double sigma_n);

/// Value-only evaluation; used by line searches.
double log_marginal_value(const Dataset& data, const KernelSpec& kernel, double sigma_n);

}  // namespace gpff

#endif
