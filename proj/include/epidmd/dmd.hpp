#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epidmd/errors.hpp"
#include "epidmd/snapshot.hpp"

namespace epidmd {

// Rank selection: either a fixed rank or the smallest rank capturing the
// given fraction of squared singular-value energy. Either way the rank is
// capped at the numerical rank of the data.
struct RankPolicy {
    enum class Kind { Fixed, Energy };
    Kind kind = Kind::Energy;
    int rank = 0;
    double fraction = 0.99;

    static RankPolicy fixed_rank(int r) {
        if (r < 1) throw ConfigError("rank must be >= 1");
        return RankPolicy{Kind::Fixed, r, 0.0};
    }
    static RankPolicy energy_threshold(double f = 0.99) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("energy fraction must be in (0, 1]");
        return RankPolicy{Kind::Energy, 0, f};
    }
};

struct TruncatedSvd {
    Eigen::MatrixXd u;  // D x r
    Eigen::VectorXd s;  // r, positive, non-increasing
    Eigen::MatrixXd v;  // M x r
    int rank = 0;
};

inline TruncatedSvd truncated_svd(const Eigen::MatrixXd& x, const RankPolicy& policy) {
    if (x.size() == 0) throw ZeroMatrix("empty matrix");
    if (!x.allFinite()) throw DimensionMismatch("matrix has non-finite entries");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) throw ZeroMatrix("matrix is identically zero");

    // Candidates: singular values above the numerical-rank floor. Values
    // below it are never inverted, even under FixedRank.
    const double eps = std::numeric_limits<double>::epsilon();
    const double floor = static_cast<double>(std::max(x.rows(), x.cols())) * eps * sv(0);
    int numerical_rank = 0;
    for (long i = 0; i < sv.size(); ++i)
        if (sv(i) > floor) ++numerical_rank;

    int r = numerical_rank;
    if (policy.kind == RankPolicy::Kind::Fixed) {
        r = std::min(policy.rank, numerical_rank);
    } else {
        const double total = sv.head(numerical_rank).squaredNorm();
        double acc = 0.0;
        for (int i = 0; i < numerical_rank; ++i) {
            acc += sv(i) * sv(i);
            if (acc / total >= policy.fraction) {
                r = i + 1;
                break;
            }
        }
    }
    r = std::max(r, 1);

    TruncatedSvd out;
    out.u = svd.matrixU().leftCols(r);
    out.s = sv.head(r);
    out.v = svd.matrixV().leftCols(r);
    out.rank = r;
    return out;
}

struct DmdModel {
    Eigen::MatrixXcd modes;      // D x r, unit-norm columns
    Eigen::VectorXcd eigenvalues; // r
    Eigen::VectorXcd amplitudes;  // r, from least squares against x_1
    Eigen::MatrixXd a_tilde;      // r x r reduced operator
    double dt = 1.0;
    int rank = 0;
    std::vector<std::string> node_ids;
    double amplitude_residual = 0.0; // ||Phi b - x1||
};

struct DmdSpectrum {
    Eigen::VectorXcd discrete;   // lambda
    Eigen::VectorXcd continuous; // omega = log(lambda)/dt
    std::vector<bool> zero_flag; // lambda == 0: omega is a -inf sentinel
    Eigen::VectorXd amplitude_abs;
};

namespace detail {

// Tu et al. exact modes: Phi = X' V S^-1 W, columns not yet normalized.
inline Eigen::MatrixXcd exact_modes_raw(const TruncatedSvd& svd, const Eigen::MatrixXd& x_prime,
                                        const Eigen::MatrixXcd& w) {
    Eigen::MatrixXd projector = x_prime * svd.v * svd.s.cwiseInverse().asDiagonal();
    return projector * w;
}

inline Eigen::VectorXcd solve_amplitudes(const Eigen::MatrixXcd& modes, const Eigen::VectorXd& x1,
                                         double* residual = nullptr) {
    Eigen::VectorXcd rhs = x1.cast<std::complex<double>>();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(modes);
    Eigen::VectorXcd b = qr.solve(rhs);
    if (residual) *residual = (modes * b - rhs).norm();
    return b;
}

} // namespace detail

inline Eigen::MatrixXcd exact_modes(const TruncatedSvd& svd, const Eigen::MatrixXd& x_prime,
                                    const Eigen::MatrixXcd& w) {
    return detail::exact_modes_raw(svd, x_prime, w);
}

inline DmdModel fit(const SnapshotPair& pair, const RankPolicy& policy = RankPolicy::energy_threshold()) {
    if (pair.x.rows() != pair.x_prime.rows() || pair.x.cols() != pair.x_prime.cols())
        throw DimensionMismatch("X and X' dimensions differ");
    if (pair.x.cols() < 1) throw SeriesTooShort("need at least one snapshot column");

    TruncatedSvd svd = truncated_svd(pair.x, policy);

    Eigen::MatrixXd a_tilde =
        svd.u.transpose() * pair.x_prime * svd.v * svd.s.cwiseInverse().asDiagonal();

    Eigen::EigenSolver<Eigen::MatrixXd> eig(a_tilde);
    if (eig.info() != Eigen::Success)
        throw DegenerateEigenproblem("eigensolver failed to converge on the reduced operator");

    Eigen::MatrixXcd w = eig.eigenvectors();
    Eigen::VectorXcd lambda = eig.eigenvalues();

    Eigen::MatrixXcd phi = detail::exact_modes_raw(svd, pair.x_prime, w);
    // Unit-norm columns; zero-eigenvalue modes fall back to the projected
    // mode U w so the column stays meaningful.
    for (int i = 0; i < svd.rank; ++i) {
        double n = phi.col(i).norm();
        if (n < 1e-300) {
            phi.col(i) = (svd.u * w.col(i)).eval();
            n = phi.col(i).norm();
        }
        phi.col(i) /= n;
    }

    DmdModel model;
    model.a_tilde = a_tilde;
    model.dt = pair.dt;
    model.rank = svd.rank;
    model.node_ids = pair.node_ids;

    Eigen::VectorXd x1 = pair.x.col(0);
    Eigen::VectorXcd b = detail::solve_amplitudes(phi, x1, &model.amplitude_residual);

    // Order modes by initial-condition energy |b|, ties by |lambda|
    // descending, then non-negative imaginary part first.
    std::vector<int> order(svd.rank);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        const double bi = std::abs(b(i)), bj = std::abs(b(j));
        const double tol = 1e-12 * std::max({bi, bj, 1.0});
        if (std::abs(bi - bj) > tol) return bi > bj;
        const double li = std::abs(lambda(i)), lj = std::abs(lambda(j));
        const double ltol = 1e-12 * std::max({li, lj, 1.0});
        if (std::abs(li - lj) > ltol) return li > lj;
        return lambda(i).imag() > lambda(j).imag();
    });

    model.modes.resize(phi.rows(), svd.rank);
    model.eigenvalues.resize(svd.rank);
    model.amplitudes.resize(svd.rank);
    for (int i = 0; i < svd.rank; ++i) {
        model.modes.col(i) = phi.col(order[i]);
        model.eigenvalues(i) = lambda(order[i]);
        model.amplitudes(i) = b(order[i]);
    }
    return model;
}

inline DmdModel fit(const SnapshotSeries& series,
                    const RankPolicy& policy = RankPolicy::energy_threshold()) {
    return fit(build_snapshot_pair(series), policy);
}

inline Eigen::VectorXcd amplitudes(const Eigen::MatrixXcd& modes, const Eigen::VectorXd& x1,
                                   double* residual = nullptr) {
    if (modes.size() == 0) throw DimensionMismatch("empty mode matrix");
    return detail::solve_amplitudes(modes, x1, residual);
}

// State k steps ahead: Re(Phi diag(lambda^k) b).
inline Eigen::VectorXd predict(const DmdModel& model, long steps,
                               const Eigen::VectorXcd* amplitudes_override = nullptr) {
    const Eigen::VectorXcd& b = amplitudes_override ? *amplitudes_override : model.amplitudes;
    Eigen::VectorXcd powered(model.rank);
    for (int i = 0; i < model.rank; ++i)
        powered(i) = std::pow(model.eigenvalues(i), static_cast<double>(steps)) * b(i);
    return (model.modes * powered).real();
}

inline SnapshotSeries predict_series(const DmdModel& model, long k_max) {
    SnapshotSeries out;
    out.values.resize(k_max + 1, model.modes.rows());
    for (long k = 0; k <= k_max; ++k) out.values.row(k) = predict(model, k).transpose();
    out.dt = model.dt;
    out.node_ids = model.node_ids;
    return out;
}

inline DmdSpectrum spectrum(const DmdModel& model) {
    DmdSpectrum sp;
    sp.discrete = model.eigenvalues;
    sp.continuous.resize(model.rank);
    sp.zero_flag.assign(model.rank, false);
    sp.amplitude_abs = model.amplitudes.cwiseAbs();
    for (int i = 0; i < model.rank; ++i) {
        if (std::abs(model.eigenvalues(i)) == 0.0) {
            sp.zero_flag[i] = true;
            sp.continuous(i) = {-std::numeric_limits<double>::infinity(), 0.0};
        } else {
            sp.continuous(i) = std::log(model.eigenvalues(i)) / model.dt;
        }
    }
    return sp;
}

// --- serialization ---

namespace detail {

inline nlohmann::json complex_json(const std::complex<double>& z) {
    return nlohmann::json::array({z.real(), z.imag()});
}

inline std::complex<double> complex_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("expected [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

inline nlohmann::json model_to_json(const DmdModel& model) {
    nlohmann::json j;
    j["rank"] = model.rank;
    j["dt"] = model.dt;
    j["node_ids"] = model.node_ids;
    j["eigenvalues"] = nlohmann::json::array();
    j["amplitudes"] = nlohmann::json::array();
    for (int i = 0; i < model.rank; ++i) {
        j["eigenvalues"].push_back(detail::complex_json(model.eigenvalues(i)));
        j["amplitudes"].push_back(detail::complex_json(model.amplitudes(i)));
    }
    j["modes"] = nlohmann::json::array(); // row-major: D rows of r [re,im] pairs
    for (long d = 0; d < model.modes.rows(); ++d) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < model.rank; ++i) row.push_back(detail::complex_json(model.modes(d, i)));
        j["modes"].push_back(row);
    }
    nlohmann::json at = nlohmann::json::array();
    for (int r = 0; r < model.rank; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < model.rank; ++c) row.push_back(model.a_tilde(r, c));
        at.push_back(row);
    }
    j["a_tilde"] = at;
    return j;
}

inline DmdModel model_from_json(const nlohmann::json& j) {
    DmdModel model;
    try {
        model.rank = j.at("rank").get<int>();
        model.dt = j.at("dt").get<double>();
        model.node_ids = j.at("node_ids").get<std::vector<std::string>>();
        const auto& ev = j.at("eigenvalues");
        const auto& am = j.at("amplitudes");
        const auto& mo = j.at("modes");
        model.eigenvalues.resize(model.rank);
        model.amplitudes.resize(model.rank);
        for (int i = 0; i < model.rank; ++i) {
            model.eigenvalues(i) = detail::complex_from_json(ev.at(i));
            model.amplitudes(i) = detail::complex_from_json(am.at(i));
        }
        model.modes.resize(static_cast<long>(mo.size()), model.rank);
        for (std::size_t d = 0; d < mo.size(); ++d)
            for (int i = 0; i < model.rank; ++i)
                model.modes(static_cast<long>(d), i) = detail::complex_from_json(mo.at(d).at(i));
        const auto& at = j.at("a_tilde");
        model.a_tilde.resize(model.rank, model.rank);
        for (int r = 0; r < model.rank; ++r)
            for (int c = 0; c < model.rank; ++c) model.a_tilde(r, c) = at.at(r).at(c).get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model JSON: ") + e.what());
    }
    return model;
}

inline void write_model_json(const DmdModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << model_to_json(model).dump(2) << "\n";
}

inline DmdModel read_model_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

inline void write_spectrum_csv(const DmdModel& model, const std::filesystem::path& path) {
    DmdSpectrum sp = spectrum(model);
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << "mode_index,re_lambda,im_lambda,re_omega,im_omega,amplitude_abs\n";
    for (int i = 0; i < model.rank; ++i) {
        out << i << "," << detail::format_double(sp.discrete(i).real()) << ","
            << detail::format_double(sp.discrete(i).imag()) << ","
            << detail::format_double(sp.continuous(i).real()) << ","
            << detail::format_double(sp.continuous(i).imag()) << ","
            << detail::format_double(sp.amplitude_abs(i)) << "\n";
    }
}

} // namespace epidmd
