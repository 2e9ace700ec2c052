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

#ifndef GPFF_CSV_HPP
#define GPFF_CSV_HPP

#include <string>
#include <vector>

#include "gpff/kernels.hpp"
#include "gpff/plantsim.hpp"

namespace gpff::csv {

/// Shortest representation that round-trips the double exactly (%.17g).
std::string format_double(double x);

/// Numeric table with '#'-prefixed comment lines and one header row.
struct Table {
    std::vector<std::string> comments;  ///< without the leading '#'
    std::vector<std::string> header;
    Matrix data;  ///< rows x header.size()
};

/// Strict reader: every data row must have exactly as many numeric fields
/// as the header. Throws parse errors naming the file and line.
Table read_table(const std::string& path);

void write_table(const std::string& path, const Table& table);

/// Closed-loop log as columns t,r,y,u,e with seed/meta in comments.
void write_log(const std::string& path, const ClosedLoopLog& log);
ClosedLoopLog read_log(const std::string& path);

/// Reference series as columns t,r.
void write_reference(const std::string& path, const Vector& r, double Ts);
Vector read_reference(const std::string& path);

/// One vector as a single-column payload (used by model persistence).
void write_vector(const std::string& path, const std::string& name, const Vector& v);
Vector read_vector(const std::string& path, const std::string& name);

/// Matrix payload, one CSV row per matrix row.
void write_matrix(const std::string& path, const Matrix& m);
Matrix read_matrix(const std::string& path);

}  // namespace gpff::csv

#endif
