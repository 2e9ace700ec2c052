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

#ifndef GPFF_ERRORS_HPP
#define GPFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gpff {

/// Error categories, one per failure class the CLI reports.
enum class ErrorCategory {
    invalid_input,         ///< rejected arguments (dimension mismatch, non-finite values)
    config,                ///< malformed or inconsistent configuration
    parse,                 ///< unreadable input file (CSV/JSON)
    ill_conditioned,       ///< Cholesky failure after the full jitter schedule
    optimization_failed,   ///< every hyperparameter restart failed
    divergence,            ///< closed-loop simulation blew up
    infeasible,            ///< trajectory bounds cannot be met
    io,                    ///< filesystem failure
};

const char* to_string(ErrorCategory cat);

/// Exit code the CLI maps a category to (always nonzero).
int exit_code(ErrorCategory cat);

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}

    ErrorCategory category() const { return cat_; }

  private:
    ErrorCategory cat_;
};

}  // namespace gpff

#endif
