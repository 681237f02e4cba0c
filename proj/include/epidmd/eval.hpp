#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "epidmd/dmd.hpp"
#include "epidmd/errors.hpp"
#include "epidmd/snapshot.hpp"

namespace epidmd {

enum class RefitPolicy { FitOnce, RefitEachStep };
enum class Normalizer { Range, Mean };

struct ForecastReport {
    Eigen::VectorXd per_node_nrmse; // percent; degenerate nodes carry the sentinel
    double mean_nrmse = 0.0;        // over non-degenerate nodes
    Eigen::MatrixXd predictions;    // T_test x D
    Eigen::MatrixXd actuals;        // T_test x D
    long horizon = 1;
    RefitPolicy refit_policy = RefitPolicy::FitOnce;
    std::vector<std::string> node_ids;
    std::vector<bool> degenerate;   // actual range == 0 on the test window
    long n_degenerate = 0;
};

inline std::pair<SnapshotSeries, SnapshotSeries> split(const SnapshotSeries& series,
                                                       double test_fraction = 0.2) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0, 1)");
    const long t = series.time_points();
    long n_test = static_cast<long>(std::llround(static_cast<double>(t) * test_fraction));
    long n_train = t - n_test;
    if (n_train < 2 || n_test < 2)
        throw SplitTooSmall("split " + std::to_string(n_train) + "/" + std::to_string(n_test) +
                            " leaves fewer than 2 snapshots on one side");
    SnapshotSeries train{series.values.topRows(n_train), series.dt, series.node_ids, series.t0};
    SnapshotSeries test{series.values.bottomRows(n_test), series.dt, series.node_ids,
                        series.t0 + n_train};
    return {train, test};
}

// 100 * RMSE / (max(actual) - min(actual)). A constant actual is degenerate:
// 0 if the prediction is exact, otherwise an infinite sentinel.
inline double nrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& actual,
                    Normalizer norm = Normalizer::Range) {
    if (pred.size() != actual.size() || pred.size() == 0)
        throw DimensionMismatch("nrmse arguments must have equal nonzero length");
    const double rmse = std::sqrt((pred - actual).squaredNorm() / static_cast<double>(pred.size()));
    double denom;
    if (norm == Normalizer::Range) denom = actual.maxCoeff() - actual.minCoeff();
    else denom = std::abs(actual.mean());
    if (denom == 0.0)
        return rmse == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 100.0 * rmse / denom;
}

// Score a prediction matrix against actuals, per node and averaged over
// non-degenerate nodes.
inline ForecastReport score(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& actuals,
                            const std::vector<std::string>& node_ids,
                            Normalizer norm = Normalizer::Range) {
    if (predictions.rows() != actuals.rows() || predictions.cols() != actuals.cols())
        throw DimensionMismatch("predictions and actuals must be congruent");
    ForecastReport report;
    report.predictions = predictions;
    report.actuals = actuals;
    report.node_ids = node_ids;
    const long d = actuals.cols();
    report.per_node_nrmse.resize(d);
    report.degenerate.assign(d, false);
    double sum = 0.0;
    long n_ok = 0;
    for (long c = 0; c < d; ++c) {
        const Eigen::VectorXd actual = actuals.col(c);
        const bool degen = (norm == Normalizer::Range)
                               ? (actual.maxCoeff() - actual.minCoeff() == 0.0)
                               : (actual.mean() == 0.0);
        report.per_node_nrmse(c) = nrmse(predictions.col(c), actual, norm);
        if (degen) {
            report.degenerate[c] = true;
            ++report.n_degenerate;
        } else {
            sum += report.per_node_nrmse(c);
            ++n_ok;
        }
    }
    report.mean_nrmse = n_ok > 0 ? sum / static_cast<double>(n_ok) : 0.0;
    return report;
}

// Rolling h-step-ahead forecast over the test suffix. Each test point x_t is
// predicted from data strictly before t: FitOnce fits a single model on the
// train split and re-anchors its amplitudes at x_{t-h}; RefitEachStep refits
// on the growing window [0, t).
inline ForecastReport rolling_forecast(const SnapshotSeries& series,
                                       const RankPolicy& policy = RankPolicy::energy_threshold(),
                                       double test_fraction = 0.2,
                                       RefitPolicy refit = RefitPolicy::FitOnce, long horizon = 1,
                                       Normalizer norm = Normalizer::Range) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    auto [train, test] = split(series, test_fraction);
    const long n_train = train.time_points();
    const long n_test = test.time_points();
    const long d = series.dimension();

    Eigen::MatrixXd predictions(n_test, d);
    DmdModel model;
    if (refit == RefitPolicy::FitOnce) model = fit(train, policy);

    for (long k = 0; k < n_test; ++k) {
        const long t = n_train + k; // absolute index of the predicted point
        if (refit == RefitPolicy::RefitEachStep) {
            SnapshotSeries window{series.values.topRows(t), series.dt, series.node_ids, series.t0};
            model = fit(window, policy);
        }
        const long anchor = t - horizon;
        Eigen::VectorXd x_anchor = series.values.row(anchor).transpose();
        Eigen::VectorXcd b = amplitudes(model.modes, x_anchor);
        predictions.row(k) = predict(model, horizon, &b).transpose();
    }

    ForecastReport report = score(predictions, test.values, series.node_ids, norm);
    report.horizon = horizon;
    report.refit_policy = refit;
    return report;
}

inline nlohmann::json report_to_json(const ForecastReport& report, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["mean_nrmse"] = report.mean_nrmse;
    j["n_degenerate_nodes"] = report.n_degenerate;
    j["horizon"] = report.horizon;
    j["refit_policy"] =
        report.refit_policy == RefitPolicy::FitOnce ? "fit_once" : "refit_each_step";
    nlohmann::json per_node = nlohmann::json::object();
    for (long c = 0; c < report.per_node_nrmse.size(); ++c) {
        double v = report.per_node_nrmse(c);
        if (report.degenerate[c] || std::isinf(v)) per_node[report.node_ids[c]] = "degenerate";
        else per_node[report.node_ids[c]] = v;
    }
    j["per_node"] = per_node;
    j["config"] = config_echo;
    return j;
}

} // namespace epidmd
