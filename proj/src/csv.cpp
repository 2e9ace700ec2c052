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

#include "gpff/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace gpff::csv {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& field, const std::string& path, std::size_t line_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCategory::parse, path + ":" + std::to_string(line_no) +
                                              ": not a number: '" + field + "'");
    }
    return value;
}

std::string comment_value(const std::vector<std::string>& comments, const std::string& key) {
    for (const std::string& c : comments) {
        if (c.rfind(key + ",", 0) == 0) return c.substr(key.size() + 1);
    }
    return {};
}

}  // namespace

std::string format_double(double x) {
    // std::to_chars prints the shortest digits that round-trip exactly.
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw Error(ErrorCategory::io, "number formatting failed");
    return std::string(buf, ptr);
}

Table read_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCategory::io, "cannot read '" + path + "'");

    Table table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string c = line.substr(1);
            if (!c.empty() && c[0] == ' ') c.erase(0, 1);
            table.comments.push_back(c);
            continue;
        }
        if (!have_header) {
            table.header = split(line, ',');
            have_header = true;
            continue;
        }
        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != table.header.size()) {
            throw Error(ErrorCategory::parse,
                        path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) row.push_back(parse_double(f, path, line_no));
        rows.push_back(std::move(row));
    }
    if (!have_header) {
        throw Error(ErrorCategory::parse, path + ": missing header row");
    }
    table.data = Matrix(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            table.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return table;
}

void write_table(const std::string& path, const Table& table) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorCategory::io, "cannot write '" + path + "'");
    for (const std::string& c : table.comments) os << "# " << c << "\n";
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        os << (j ? "," : "") << table.header[j];
    }
    os << "\n";
    for (Eigen::Index i = 0; i < table.data.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.data.cols(); ++j) {
            os << (j ? "," : "") << format_double(table.data(i, j));
        }
        os << "\n";
    }
    if (!os) throw Error(ErrorCategory::io, "write to '" + path + "' failed");
}

void write_log(const std::string& path, const ClosedLoopLog& log) {
    log.validate();
    Table t;
    t.comments = {"seed," + std::to_string(log.seed),
                  "reference_id," + log.meta.reference_id,
                  "repetition," + std::to_string(log.meta.repetition)};
    t.header = {"t", "r", "y", "u", "e"};
    t.data = Matrix(log.size(), 5);
    for (Eigen::Index i = 0; i < log.size(); ++i) {
        t.data(i, 0) = static_cast<double>(i);
        t.data(i, 1) = log.r[i];
        t.data(i, 2) = log.y[i];
        t.data(i, 3) = log.u[i];
        t.data(i, 4) = log.e[i];
    }
    write_table(path, t);
}

ClosedLoopLog read_log(const std::string& path) {
    const Table t = read_table(path);
    if (t.header != std::vector<std::string>{"t", "r", "y", "u", "e"}) {
        throw Error(ErrorCategory::parse, path + ": expected header t,r,y,u,e");
    }
    ClosedLoopLog log;
    log.r = t.data.col(1);
    log.y = t.data.col(2);
    log.u = t.data.col(3);
    log.e = t.data.col(4);
    const std::string seed = comment_value(t.comments, "seed");
    if (!seed.empty()) log.seed = std::stoull(seed);
    log.meta.reference_id = comment_value(t.comments, "reference_id");
    const std::string rep = comment_value(t.comments, "repetition");
    if (!rep.empty()) log.meta.repetition = std::stoi(rep);
    try {
        log.validate();
    } catch (const Error& e) {
        throw Error(ErrorCategory::parse, path + ": " + e.what());
    }
    return log;
}

void write_reference(const std::string& path, const Vector& r, double Ts) {
    Table t;
    t.comments = {"Ts," + format_double(Ts)};
    t.header = {"t", "r"};
    t.data = Matrix(r.size(), 2);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        t.data(i, 0) = static_cast<double>(i);
        t.data(i, 1) = r[i];
    }
    write_table(path, t);
}

Vector read_reference(const std::string& path) {
    const Table t = read_table(path);
    if (t.header.size() < 2 || t.header[1] != "r") {
        throw Error(ErrorCategory::parse, path + ": expected header t,r");
    }
    return t.data.col(1);
}

void write_vector(const std::string& path, const std::string& name, const Vector& v) {
    Table t;
    t.header = {name};
    t.data = Matrix(v.size(), 1);
    t.data.col(0) = v;
    write_table(path, t);
}

Vector read_vector(const std::string& path, const std::string& name) {
    const Table t = read_table(path);
    if (t.header != std::vector<std::string>{name}) {
        throw Error(ErrorCategory::parse, path + ": expected a single '" + name + "' column");
    }
    return t.data.col(0);
}

void write_matrix(const std::string& path, const Matrix& m) {
    Table t;
    for (Eigen::Index j = 0; j < m.cols(); ++j) t.header.push_back("c" + std::to_string(j));
    t.data = m;
    write_table(path, t);
}

Matrix read_matrix(const std::string& path) {
    return read_table(path).data;
}

}  // namespace gpff::csv
