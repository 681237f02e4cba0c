#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "epidmd/rng.hpp"
#include "epidmd/snapshot.hpp"

namespace test_helpers {

inline std::vector<std::string> node_labels(long d) {
    std::vector<std::string> ids;
    for (long i = 0; i < d; ++i) ids.push_back("n" + std::to_string(i));
    return ids;
}

// Noise-free trajectory x_{k+1} = A x_k, rows are time points.
inline epidmd::SnapshotSeries linear_series(const Eigen::MatrixXd& a, const Eigen::VectorXd& x1,
                                            long n_snapshots, double dt = 1.0) {
    epidmd::SnapshotSeries series;
    series.values.resize(n_snapshots, a.rows());
    series.dt = dt;
    series.node_ids = node_labels(a.rows());
    Eigen::VectorXd x = x1;
    for (long k = 0; k < n_snapshots; ++k) {
        series.values.row(k) = x.transpose();
        x = a * x;
    }
    return series;
}

inline Eigen::MatrixXd random_matrix(long rows, long cols, epidmd::Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    return m;
}

// Random matrix rescaled to spectral radius `radius`.
inline Eigen::MatrixXd random_stable_matrix(long d, epidmd::Rng& rng, double radius = 0.95) {
    Eigen::MatrixXd a = random_matrix(d, d, rng);
    double rho = a.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0) a *= radius / rho;
    return a;
}

inline Eigen::MatrixXd rotation2(double angle) {
    Eigen::MatrixXd r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

} // namespace test_helpers
