#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epidmd/errors.hpp"

namespace epidmd {

// Time-ordered sequence of per-node state vectors. Rows are time points,
// columns are spatial nodes (farms). Values are counts but stored as reals
// so predictions can share the type.
struct SnapshotSeries {
    Eigen::MatrixXd values; // T x D
    double dt = 1.0;        // days per step
    std::vector<std::string> node_ids;
    long t0 = 0;

    long time_points() const { return values.rows(); }
    long dimension() const { return values.cols(); }

    void validate() const {
        if (values.rows() < 2 || values.cols() < 1)
            throw DimensionMismatch("SnapshotSeries requires T >= 2 and D >= 1");
        if (!values.allFinite()) throw DimensionMismatch("SnapshotSeries has non-finite entries");
        if (static_cast<long>(node_ids.size()) != values.cols())
            throw DimensionMismatch("node_ids length does not match column count");
        std::set<std::string> seen(node_ids.begin(), node_ids.end());
        if (static_cast<long>(seen.size()) != values.cols())
            throw DimensionMismatch("duplicate node_ids");
        if (dt <= 0.0) throw DimensionMismatch("dt must be positive");
    }
};

// Column-major snapshot matrices X (columns x_1..x_{N-1}) and X'
// (columns x_2..x_N), both D x (N-1).
struct SnapshotPair {
    Eigen::MatrixXd x;
    Eigen::MatrixXd x_prime;
    double dt = 1.0;
    std::vector<std::string> node_ids;
};

inline SnapshotPair build_snapshot_pair(const SnapshotSeries& series) {
    if (series.time_points() < 2)
        throw SeriesTooShort("need at least 2 snapshots, got " +
                             std::to_string(series.time_points()));
    const long n = series.time_points();
    SnapshotPair pair;
    pair.x = series.values.topRows(n - 1).transpose();
    pair.x_prime = series.values.bottomRows(n - 1).transpose();
    pair.dt = series.dt;
    pair.node_ids = series.node_ids;
    return pair;
}

struct Record {
    double timestamp = 0.0; // days
    std::string node_id;
    double count = 0.0;
};

// Bin raw (timestamp, node, count) records into a series. Bin origin is the
// earliest timestamp floored to a bin boundary, so the result does not
// depend on input order. Empty bins are zero.
inline SnapshotSeries aggregate(const std::vector<Record>& records, double bin_width,
                                const std::vector<std::string>& nodes) {
    if (records.empty()) throw EmptyInput("no records to aggregate");
    if (bin_width <= 0.0) throw DimensionMismatch("bin_width must be positive");

    std::vector<std::string> sorted_nodes = nodes;
    auto node_index = [&](const std::string& id) -> long {
        auto it = std::find(sorted_nodes.begin(), sorted_nodes.end(), id);
        if (it == sorted_nodes.end()) throw UnknownNode("record references unlisted node '" + id + "'");
        return it - sorted_nodes.begin();
    };

    double earliest = records.front().timestamp;
    double latest = records.front().timestamp;
    for (const auto& r : records) {
        earliest = std::min(earliest, r.timestamp);
        latest = std::max(latest, r.timestamp);
    }
    const double origin = std::floor(earliest / bin_width) * bin_width;
    const long n_bins = static_cast<long>(std::floor((latest - origin) / bin_width)) + 1;

    SnapshotSeries series;
    series.values = Eigen::MatrixXd::Zero(n_bins, static_cast<long>(nodes.size()));
    series.dt = bin_width;
    series.node_ids = nodes;
    for (const auto& r : records) {
        long bin = static_cast<long>(std::floor((r.timestamp - origin) / bin_width));
        bin = std::clamp(bin, 0L, n_bins - 1);
        series.values(bin, node_index(r.node_id)) += r.count;
    }
    return series;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace detail

// CSV layout: optional "# dt=<v> t0=<v>" comment, header "t,<id>,...",
// then one row per time step.
inline void write_series_csv(const SnapshotSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << "# dt=" << detail::format_double(series.dt) << " t0=" << series.t0 << "\n";
    out << "t";
    for (const auto& id : series.node_ids) out << "," << id;
    out << "\n";
    for (long t = 0; t < series.values.rows(); ++t) {
        out << (series.t0 + t);
        for (long d = 0; d < series.values.cols(); ++d)
            out << "," << detail::format_double(series.values(t, d));
        out << "\n";
    }
}

inline SnapshotSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    SnapshotSeries series;
    std::string line;
    long row_no = 0;
    std::vector<std::vector<double>> rows;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string token;
            while (ss >> token) {
                if (token.rfind("dt=", 0) == 0) series.dt = std::stod(token.substr(3));
                else if (token.rfind("t0=", 0) == 0) series.t0 = std::stol(token.substr(3));
            }
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (!have_header) {
            if (fields.empty() || fields[0] != "t")
                throw ParseError(path.string() + ":" + std::to_string(row_no) +
                                 ": header must start with 't'");
            series.node_ids.assign(fields.begin() + 1, fields.end());
            have_header = true;
            continue;
        }
        if (fields.size() != series.node_ids.size() + 1)
            throw DimensionMismatch(path.string() + ":" + std::to_string(row_no) + ": expected " +
                                    std::to_string(series.node_ids.size() + 1) + " fields, got " +
                                    std::to_string(fields.size()));
        std::vector<double> row(series.node_ids.size());
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                std::size_t pos = 0;
                row[i - 1] = std::stod(fields[i], &pos);
                if (pos != fields[i].size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                throw ParseError(path.string() + ":" + std::to_string(row_no) + ":col " +
                                 std::to_string(i + 1) + ": bad number '" + fields[i] + "'");
            }
        }
        if (rows.empty() && !fields[0].empty()) {
            try {
                series.t0 = std::stol(fields[0]);
            } catch (const std::exception&) {
                throw ParseError(path.string() + ":" + std::to_string(row_no) + ": bad time index");
            }
        }
        rows.push_back(std::move(row));
    }
    if (!have_header || rows.empty()) throw ParseError(path.string() + ": no data rows");
    series.values.resize(static_cast<long>(rows.size()), static_cast<long>(series.node_ids.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t d = 0; d < rows[t].size(); ++d)
            series.values(static_cast<long>(t), static_cast<long>(d)) = rows[t][d];
    return series;
}

} // namespace epidmd
