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

#include "gpff/errors.hpp"

namespace gpff {

const char* to_string(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::invalid_input: return "invalid-input";
        case ErrorCategory::config: return "config";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::ill_conditioned: return "ill-conditioned";
        case ErrorCategory::optimization_failed: return "optimization-failed";
        case ErrorCategory::divergence: return "divergence";
        case ErrorCategory::infeasible: return "infeasible";
        case ErrorCategory::io: return "io";
    }
    return "unknown";
}

int exit_code(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::invalid_input: return 2;
        case ErrorCategory::config: return 3;
        case ErrorCategory::parse: return 4;
        case ErrorCategory::ill_conditioned: return 5;
        case ErrorCategory::optimization_failed: return 6;
        case ErrorCategory::divergence: return 7;
        case ErrorCategory::infeasible: return 8;
        case ErrorCategory::io: return 9;
    }
    return 1;
}

}  // namespace gpff
