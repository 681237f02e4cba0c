#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <complex>

#include "epidmd/dmd.hpp"
#include "helpers.hpp"

using namespace epidmd;
using test_helpers::linear_series;
using test_helpers::random_matrix;
using test_helpers::random_stable_matrix;
using Catch::Approx;

namespace {

// Small-scale explicit operator X' V S^-1 U^T, the test-side oracle for
// eigenpair residuals and reconstruction bounds.
Eigen::MatrixXd pinv_operator(const SnapshotPair& pair, const TruncatedSvd& svd) {
    return pair.x_prime * svd.v * svd.s.cwiseInverse().asDiagonal() * svd.u.transpose();
}

// Greedy nearest matching between two complex spectra; returns max relative error.
double spectrum_mismatch(Eigen::VectorXcd got, Eigen::VectorXcd want) {
    double worst = 0.0;
    std::vector<bool> used(got.size(), false);
    for (long i = 0; i < want.size(); ++i) {
        double best = 1e300;
        long best_j = -1;
        for (long j = 0; j < got.size(); ++j) {
            if (used[j]) continue;
            double d = std::abs(got(j) - want(i));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        used[best_j] = true;
        worst = std::max(worst, best / std::max(1.0, std::abs(want(i))));
    }
    return worst;
}

} // namespace

TEST_CASE("truncated_svd of the identity keeps unit singular values") {
    TruncatedSvd svd = truncated_svd(Eigen::MatrixXd::Identity(3, 3), RankPolicy::fixed_rank(3));
    REQUIRE(svd.rank == 3);
    for (int i = 0; i < 3; ++i) CHECK(svd.s(i) == Approx(1.0));
}

TEST_CASE("truncated_svd finds a rank-1 outer product under the energy policy") {
    Eigen::VectorXd u(4), v(3);
    u << 0.5, 0.5, 0.5, 0.5;
    v << 1.0, 0.0, 0.0;
    Eigen::MatrixXd x = 5.0 * u * v.transpose();
    TruncatedSvd svd = truncated_svd(x, RankPolicy::energy_threshold(0.99));
    REQUIRE(svd.rank == 1);
    CHECK(svd.s(0) == Approx(5.0));
}

TEST_CASE("truncated_svd rejects the zero matrix") {
    CHECK_THROWS_AS(truncated_svd(Eigen::MatrixXd::Zero(3, 3), RankPolicy::energy_threshold()),
                    ZeroMatrix);
}

TEST_CASE("truncated_svd satisfies orthonormality, ordering, and the Gram oracle") {
    Rng rng(42);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd x = random_matrix(6, 4, rng);
        TruncatedSvd svd = truncated_svd(x, RankPolicy::fixed_rank(4));
        const int r = svd.rank;
        CHECK((svd.u.transpose() * svd.u - Eigen::MatrixXd::Identity(r, r)).norm() < 1e-10);
        CHECK((svd.v.transpose() * svd.v - Eigen::MatrixXd::Identity(r, r)).norm() < 1e-10);
        for (int i = 1; i < r; ++i) CHECK(svd.s(i) <= svd.s(i - 1));
        CHECK(svd.s(r - 1) > 0.0);
        // Singular values vs the symmetric eigenproblem on X^T X.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
        Eigen::VectorXd gram = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();
        for (int i = 0; i < r; ++i) CHECK(std::abs(svd.s(i) - gram(i)) < 1e-9 * svd.s(0));
        // Reconstruction bound: error at most the first dropped singular value.
        Eigen::MatrixXd recon = svd.u * svd.s.asDiagonal() * svd.v.transpose();
        double dropped = r < 4 ? gram(r) : 0.0;
        CHECK((x - recon).norm() <= dropped + 1e-10 * svd.s(0));
    }
}

TEST_CASE("fit recovers a known diagonal operator") {
    Eigen::MatrixXd a = Eigen::Vector2d(0.9, 0.5).asDiagonal();
    auto series = linear_series(a, Eigen::Vector2d(1, 1), 10);
    DmdModel model = fit(series, RankPolicy::fixed_rank(2));
    REQUIRE(model.rank == 2);
    Eigen::VectorXcd want(2);
    want << std::complex<double>(0.9, 0), std::complex<double>(0.5, 0);
    CHECK(spectrum_mismatch(model.eigenvalues, want) < 1e-10);
}

TEST_CASE("identity dynamics give eigenvalue one") {
    SnapshotSeries series;
    series.values = Eigen::MatrixXd::Zero(6, 3);
    series.values.rowwise() = Eigen::RowVector3d(2, 3, 4);
    series.node_ids = test_helpers::node_labels(3);
    DmdModel model = fit(series);
    for (int i = 0; i < model.rank; ++i)
        CHECK(std::abs(model.eigenvalues(i) - 1.0) < 1e-10);
}

TEST_CASE("rotation dynamics give unit-circle conjugate eigenvalues") {
    const double angle = M_PI / 8.0;
    auto series = linear_series(test_helpers::rotation2(angle), Eigen::Vector2d(1, 0), 12);
    DmdModel model = fit(series, RankPolicy::fixed_rank(2));
    REQUIRE(model.rank == 2);
    Eigen::VectorXcd want(2);
    want << std::polar(1.0, angle), std::polar(1.0, -angle);
    CHECK(spectrum_mismatch(model.eigenvalues, want) < 1e-10);
    for (int i = 0; i < 2; ++i)
        CHECK(std::abs(std::abs(model.eigenvalues(i)) - 1.0) < 1e-10);
}

TEST_CASE("exact modes of a diagonal system align with the coordinate axes") {
    Eigen::MatrixXd a = Eigen::Vector2d(0.9, 0.5).asDiagonal();
    auto series = linear_series(a, Eigen::Vector2d(1, 1), 10);
    DmdModel model = fit(series, RankPolicy::fixed_rank(2));
    // Eigenvalue 0.9 pairs with e1, 0.5 with e2; modes are unit columns up to phase.
    for (int i = 0; i < 2; ++i) {
        long axis = std::abs(model.eigenvalues(i).real() - 0.9) < 1e-8 ? 0 : 1;
        CHECK(std::abs(model.modes(axis, i)) == Approx(1.0).margin(1e-8));
        CHECK(std::abs(model.modes(1 - axis, i)) == Approx(0.0).margin(1e-8));
    }
}

TEST_CASE("rank-1 decay has a single mode parallel to the data direction") {
    Eigen::VectorXd u(3);
    u << 1, 2, 2;
    u /= 3.0;
    SnapshotSeries series;
    series.values.resize(6, 3);
    double scale = 1.0;
    for (int k = 0; k < 6; ++k, scale *= 0.5) series.values.row(k) = (scale * u).transpose();
    series.node_ids = test_helpers::node_labels(3);
    DmdModel model = fit(series, RankPolicy::energy_threshold(0.99));
    REQUIRE(model.rank == 1);
    CHECK(std::abs(model.eigenvalues(0) - 0.5) < 1e-10);
    CHECK(std::abs(std::abs(model.modes.col(0).dot(u.cast<std::complex<double>>())) - 1.0) < 1e-8);
}

TEST_CASE("projected modes equal exact modes up to per-column scale on a full-rank system") {
    Rng rng(5);
    Eigen::MatrixXd a = random_stable_matrix(4, rng);
    auto series = linear_series(a, random_matrix(4, 1, rng).col(0), 12);
    SnapshotPair pair = build_snapshot_pair(series);
    TruncatedSvd svd = truncated_svd(pair.x, RankPolicy::fixed_rank(4));
    Eigen::MatrixXd a_tilde =
        svd.u.transpose() * pair.x_prime * svd.v * svd.s.cwiseInverse().asDiagonal();
    Eigen::EigenSolver<Eigen::MatrixXd> eig(a_tilde);
    Eigen::MatrixXcd exact = exact_modes(svd, pair.x_prime, eig.eigenvectors());
    Eigen::MatrixXcd projected = svd.u * eig.eigenvectors();
    for (int i = 0; i < svd.rank; ++i) {
        // Columns collinear: |<e, p>| = |e| |p|
        double inner = std::abs(exact.col(i).dot(projected.col(i)));
        CHECK(inner == Approx(exact.col(i).norm() * projected.col(i).norm()).epsilon(1e-8));
    }
}

TEST_CASE("eigenpair residual against the explicit operator oracle") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        long d = 3 + static_cast<long>(rng.below(4));
        Eigen::MatrixXd a = random_stable_matrix(d, rng);
        auto series = linear_series(a, random_matrix(d, 1, rng).col(0), d + 6);
        SnapshotPair pair = build_snapshot_pair(series);
        TruncatedSvd svd = truncated_svd(pair.x, RankPolicy::fixed_rank(static_cast<int>(d)));
        DmdModel model = fit(pair, RankPolicy::fixed_rank(static_cast<int>(d)));
        Eigen::MatrixXd a_pinv = pinv_operator(pair, svd);
        for (int i = 0; i < model.rank; ++i) {
            if (std::abs(model.eigenvalues(i)) < 1e-10) continue;
            Eigen::VectorXcd phi = model.modes.col(i);
            double res = (a_pinv.cast<std::complex<double>>() * phi - model.eigenvalues(i) * phi)
                             .norm();
            CHECK(res <= 1e-8 * phi.norm() * std::max(1.0, a_pinv.norm()));
        }
    }
}

TEST_CASE("amplitudes: identity modes return the initial state") {
    Eigen::MatrixXcd modes = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::VectorXd x1(2);
    x1 << 3, 4;
    Eigen::VectorXcd b = amplitudes(modes, x1);
    CHECK(std::abs(b(0) - 3.0) < 1e-12);
    CHECK(std::abs(b(1) - 4.0) < 1e-12);
}

TEST_CASE("amplitudes: collinear initial state gives the scale factor") {
    Eigen::MatrixXcd modes(3, 1);
    modes << std::complex<double>(0.6), std::complex<double>(0.0), std::complex<double>(0.8);
    Eigen::VectorXd x1 = 2.0 * modes.real().col(0);
    Eigen::VectorXcd b = amplitudes(modes, x1);
    CHECK(std::abs(b(0) - 2.0) < 1e-12);
}

TEST_CASE("amplitudes: overdetermined instance recovers the synthetic coefficients") {
    Rng rng(31);
    Eigen::MatrixXcd modes(4, 2);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) modes(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Eigen::VectorXcd b_true(2);
    b_true << std::complex<double>(1.5, 0.0), std::complex<double>(-0.75, 0.0);
    // Keep x1 real so it is a valid initial snapshot.
    Eigen::MatrixXcd real_modes = modes;
    real_modes.imag().setZero();
    Eigen::VectorXd x1 = (real_modes * b_true).real();
    Eigen::VectorXcd b = amplitudes(real_modes, x1);
    CHECK((b - b_true).norm() < 1e-10);
}

TEST_CASE("predict reconstructs the initial condition at k=0") {
    Rng rng(8);
    Eigen::MatrixXd a = random_stable_matrix(3, rng);
    Eigen::VectorXd x1 = random_matrix(3, 1, rng).col(0);
    auto series = linear_series(a, x1, 10);
    DmdModel model = fit(series, RankPolicy::fixed_rank(3));
    CHECK((predict(model, 0) - x1).norm() < 1e-8 * x1.norm());
}

TEST_CASE("predict matches the closed-form power of a diagonal operator") {
    Eigen::MatrixXd a = Eigen::Vector2d(0.9, 0.5).asDiagonal();
    auto series = linear_series(a, Eigen::Vector2d(1, 1), 10);
    DmdModel model = fit(series, RankPolicy::fixed_rank(2));
    Eigen::VectorXd got = predict(model, 3);
    CHECK(got(0) == Approx(std::pow(0.9, 3)).margin(1e-10));
    CHECK(got(1) == Approx(std::pow(0.5, 3)).margin(1e-10));
}

TEST_CASE("all-unit eigenvalues predict a constant") {
    SnapshotSeries series;
    series.values = Eigen::MatrixXd::Zero(5, 2);
    series.values.rowwise() = Eigen::RowVector2d(4, 9);
    series.node_ids = test_helpers::node_labels(2);
    DmdModel model = fit(series);
    for (long k : {0L, 1L, 7L, 50L}) {
        Eigen::VectorXd p = predict(model, k);
        CHECK(p(0) == Approx(4.0).margin(1e-8));
        CHECK(p(1) == Approx(9.0).margin(1e-8));
    }
}

TEST_CASE("predict_series stacks predictions with training metadata") {
    Eigen::MatrixXd a = Eigen::Vector2d(0.9, 0.5).asDiagonal();
    auto series = linear_series(a, Eigen::Vector2d(1, 1), 10, 2.0);
    DmdModel model = fit(series, RankPolicy::fixed_rank(2));
    SnapshotSeries out = predict_series(model, 4);
    REQUIRE(out.time_points() == 5);
    CHECK(out.dt == 2.0);
    CHECK(out.node_ids == series.node_ids);
    for (long k = 0; k <= 4; ++k)
        CHECK((out.values.row(k).transpose() - predict(model, k)).norm() < 1e-14);
}

TEST_CASE("spectrum maps discrete to continuous eigenvalues") {
    SECTION("steady mode") {
        SnapshotSeries series;
        series.values = Eigen::MatrixXd::Zero(5, 2);
        series.values.rowwise() = Eigen::RowVector2d(1, 2);
        series.node_ids = test_helpers::node_labels(2);
        DmdModel model = fit(series);
        DmdSpectrum sp = spectrum(model);
        CHECK(std::abs(sp.continuous(0)) < 1e-10);
    }
    SECTION("rotation frequency") {
        auto series = linear_series(test_helpers::rotation2(M_PI / 8), Eigen::Vector2d(1, 0), 12);
        DmdModel model = fit(series, RankPolicy::fixed_rank(2));
        DmdSpectrum sp = spectrum(model);
        std::vector<double> freqs;
        for (int i = 0; i < 2; ++i) {
            freqs.push_back(sp.continuous(i).imag());
            CHECK(std::abs(sp.continuous(i).real()) < 1e-10);
            // exp(omega dt) == lambda
            CHECK(std::abs(std::exp(sp.continuous(i) * model.dt) - sp.discrete(i)) < 1e-10);
        }
        std::sort(freqs.begin(), freqs.end());
        CHECK(freqs[0] == Approx(-M_PI / 8).margin(1e-10));
        CHECK(freqs[1] == Approx(M_PI / 8).margin(1e-10));
    }
    SECTION("decay with dt=2") {
        Eigen::MatrixXd a = Eigen::Vector2d(0.5, 0.25).asDiagonal();
        auto series = linear_series(a, Eigen::Vector2d(1, 1), 8, 2.0);
        DmdModel model = fit(series, RankPolicy::fixed_rank(2));
        DmdSpectrum sp = spectrum(model);
        bool found = false;
        for (int i = 0; i < model.rank; ++i)
            if (std::abs(sp.discrete(i) - 0.5) < 1e-9) {
                CHECK(sp.continuous(i).real() == Approx(std::log(0.5) / 2.0).margin(1e-9));
                found = true;
            }
        CHECK(found);
    }
}

TEST_CASE("eigenvalue recovery property over random stable operators") {
    Rng rng(2024);
    for (int rep = 0; rep < 25; ++rep) {
        long d = 2 + static_cast<long>(rng.below(7)); // up to 8
        Eigen::MatrixXd a = random_stable_matrix(d, rng);
        auto series = linear_series(a, random_matrix(d, 1, rng).col(0), d + 4);
        DmdModel model = fit(series, RankPolicy::fixed_rank(static_cast<int>(d)));
        Eigen::VectorXcd want = a.eigenvalues();
        REQUIRE(model.rank == d);
        CHECK(spectrum_mismatch(model.eigenvalues, want) < 1e-8);
    }
}

TEST_CASE("conjugate closure of the spectrum on real data") {
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        long d = 3 + static_cast<long>(rng.below(4));
        auto series =
            linear_series(random_stable_matrix(d, rng), random_matrix(d, 1, rng).col(0), d + 5);
        DmdModel model = fit(series, RankPolicy::fixed_rank(static_cast<int>(d)));
        for (int i = 0; i < model.rank; ++i) {
            std::complex<double> conj = std::conj(model.eigenvalues(i));
            double best = 1e300;
            for (int j = 0; j < model.rank; ++j)
                best = std::min(best, std::abs(model.eigenvalues(j) - conj));
            CHECK(best < 1e-10);
        }
    }
}

TEST_CASE("one-step reconstruction error matches the optimal rank-r residual") {
    Rng rng(55);
    Eigen::MatrixXd x = random_matrix(6, 8, rng);
    Eigen::MatrixXd x_prime = random_matrix(6, 8, rng);
    const int r = 3;
    SnapshotPair pair{x, x_prime, 1.0, test_helpers::node_labels(6)};
    TruncatedSvd svd = truncated_svd(x, RankPolicy::fixed_rank(r));
    Eigen::MatrixXd a_pinv = pinv_operator(pair, svd);
    double got = (x_prime - a_pinv * x).norm();

    // Oracle: the optimal residual of min_A ||X' - A X|| with A restricted to
    // the rank-r dominant subspace of X is X' (I - V_r V_r^T) in Frobenius norm.
    Eigen::BDCSVD<Eigen::MatrixXd> full(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd vr = full.matrixV().leftCols(r);
    double want = (x_prime * (Eigen::MatrixXd::Identity(8, 8) - vr * vr.transpose())).norm();
    CHECK(got == Approx(want).margin(1e-10 * std::max(1.0, want)));
}

TEST_CASE("predict tracks a held-out noise-free trajectory") {
    Rng rng(66);
    long d = 5;
    Eigen::MatrixXd a = random_stable_matrix(d, rng, 0.99);
    Eigen::VectorXd x1 = random_matrix(d, 1, rng).col(0);
    auto series = linear_series(a, x1, 2 * d + 2);
    long n_train = d + 2;
    SnapshotSeries train{series.values.topRows(n_train), 1.0, series.node_ids, 0};
    DmdModel model = fit(train, RankPolicy::fixed_rank(static_cast<int>(d)));
    for (long k = 0; k < series.time_points(); ++k) {
        Eigen::VectorXd want = series.values.row(k).transpose();
        CHECK((predict(model, k) - want).norm() <= 1e-6 * std::max(1e-12, want.norm()));
    }
}

TEST_CASE("mode ordering is by amplitude then eigenvalue magnitude") {
    Rng rng(91);
    Eigen::MatrixXd a = random_stable_matrix(5, rng);
    auto series = linear_series(a, random_matrix(5, 1, rng).col(0), 12);
    DmdModel model = fit(series, RankPolicy::fixed_rank(5));
    for (int i = 1; i < model.rank; ++i) {
        double prev = std::abs(model.amplitudes(i - 1));
        double cur = std::abs(model.amplitudes(i));
        CHECK(cur <= prev + 1e-9 * std::max(1.0, prev));
    }
}

TEST_CASE("model JSON round-trip preserves everything") {
    Rng rng(14);
    auto series =
        linear_series(random_stable_matrix(4, rng), random_matrix(4, 1, rng).col(0), 10);
    DmdModel model = fit(series, RankPolicy::fixed_rank(4));
    DmdModel back = model_from_json(model_to_json(model));
    CHECK(back.rank == model.rank);
    CHECK(back.dt == model.dt);
    CHECK(back.node_ids == model.node_ids);
    CHECK((back.eigenvalues - model.eigenvalues).norm() == 0.0);
    CHECK((back.amplitudes - model.amplitudes).norm() == 0.0);
    CHECK((back.modes - model.modes).norm() == 0.0);
    CHECK((back.a_tilde - model.a_tilde).norm() == 0.0);
}
