#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "epidmd/config.hpp"
#include "epidmd/dmd.hpp"
#include "epidmd/epinet.hpp"
#include "epidmd/eval.hpp"
#include "epidmd/manifest.hpp"
#include "epidmd/plot.hpp"
#include "epidmd/snapshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool quiet = false;
};

void info(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << "\n";
}

fs::path manifest_path(const fs::path& primary_out) {
    fs::path p = primary_out;
    p += ".manifest.json";
    return p;
}

epidmd::RankPolicy rank_policy_from(std::optional<int> rank, double energy) {
    if (rank) return epidmd::RankPolicy::fixed_rank(*rank);
    return epidmd::RankPolicy::energy_threshold(energy);
}

int cmd_simulate(const GlobalOpts& g, const std::string& config_path, const std::string& out_csv) {
    epidmd::Stopwatch timer;
    std::string config_bytes = epidmd::read_file_bytes(config_path);
    json j = json::parse(config_bytes);
    epidmd::SimConfig config = epidmd::parse_sim_config(j);
    if (g.seed) {
        // A seed override changes the generated network too, so re-expand.
        j["seed"] = *g.seed;
        config = epidmd::parse_sim_config(j);
    }
    config.threads = g.threads;

    epidmd::SeirWorld world;
    epidmd::SnapshotSeries series = epidmd::simulate(config, &world);
    epidmd::write_series_csv(series, out_csv);
    if (world.underflow_events > 0)
        info(g, "note: " + std::to_string(world.underflow_events) +
                    " shipments clamped to available source pigs");

    epidmd::RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_digest = epidmd::content_digest(config_bytes);
    manifest.rng_seed = config.seed;
    manifest.inputs = {config_path};
    manifest.outputs = {out_csv};
    manifest.duration_seconds = timer.seconds();
    manifest.write(manifest_path(out_csv));
    info(g, "wrote " + out_csv + " (" + std::to_string(series.time_points()) + " x " +
                std::to_string(series.dimension()) + ")");
    return 0;
}

int cmd_fit(const GlobalOpts& g, const std::string& series_csv, std::optional<int> rank,
            double energy, const std::string& model_out, std::string spectrum_out) {
    epidmd::Stopwatch timer;
    epidmd::SnapshotSeries series = epidmd::read_series_csv(series_csv);
    epidmd::DmdModel model = epidmd::fit(series, rank_policy_from(rank, energy));
    epidmd::write_model_json(model, model_out);
    if (spectrum_out.empty())
        spectrum_out = (fs::path(model_out).replace_extension(".spectrum.csv")).string();
    epidmd::write_spectrum_csv(model, spectrum_out);

    epidmd::RunManifest manifest;
    manifest.command = "fit";
    manifest.config_digest = epidmd::content_digest(epidmd::read_file_bytes(series_csv));
    manifest.inputs = {series_csv};
    manifest.outputs = {model_out, spectrum_out};
    manifest.duration_seconds = timer.seconds();
    manifest.write(manifest_path(model_out));
    info(g, "fit rank " + std::to_string(model.rank) + " model -> " + model_out);
    return 0;
}

int cmd_predict(const GlobalOpts& g, const std::string& model_path, long steps,
                const std::string& out_csv) {
    epidmd::Stopwatch timer;
    epidmd::DmdModel model = epidmd::read_model_json(model_path);
    epidmd::SnapshotSeries series = epidmd::predict_series(model, steps);
    epidmd::write_series_csv(series, out_csv);

    epidmd::RunManifest manifest;
    manifest.command = "predict";
    manifest.config_digest = epidmd::content_digest(epidmd::read_file_bytes(model_path));
    manifest.inputs = {model_path};
    manifest.outputs = {out_csv};
    manifest.duration_seconds = timer.seconds();
    manifest.write(manifest_path(out_csv));
    info(g, "wrote " + std::to_string(steps + 1) + "-row forecast -> " + out_csv);
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& series_csv, double test_frac,
             const std::string& refit, std::optional<int> rank, double energy, long horizon,
             const std::string& report_out) {
    epidmd::Stopwatch timer;
    epidmd::SnapshotSeries series = epidmd::read_series_csv(series_csv);
    epidmd::RefitPolicy policy;
    if (refit == "once") policy = epidmd::RefitPolicy::FitOnce;
    else if (refit == "each") policy = epidmd::RefitPolicy::RefitEachStep;
    else throw epidmd::ConfigError("--refit must be 'once' or 'each'");

    epidmd::ForecastReport report = epidmd::rolling_forecast(
        series, rank_policy_from(rank, energy), test_frac, policy, horizon);

    json config_echo = {{"series", fs::path(series_csv).filename().string()},
                        {"test_fraction", test_frac},
                        {"refit", refit},
                        {"horizon", horizon},
                        {"energy", energy}};
    if (rank) config_echo["rank"] = *rank;
    std::ofstream out(report_out);
    if (!out) throw epidmd::ParseError("cannot open " + report_out + " for writing");
    out << epidmd::report_to_json(report, config_echo).dump(2) << "\n";
    out.close();

    // Predictions alongside, in snapshot CSV format.
    fs::path pred_path = fs::path(report_out).replace_extension(".predictions.csv");
    epidmd::SnapshotSeries preds{report.predictions, series.dt, series.node_ids,
                                 series.t0 + series.time_points() - report.predictions.rows()};
    epidmd::write_series_csv(preds, pred_path);

    epidmd::RunManifest manifest;
    manifest.command = "eval";
    manifest.config_digest = epidmd::content_digest(epidmd::read_file_bytes(series_csv));
    manifest.inputs = {series_csv};
    manifest.outputs = {report_out, pred_path.string()};
    manifest.duration_seconds = timer.seconds();
    manifest.write(manifest_path(report_out));
    info(g, "mean NRMSE " + std::to_string(report.mean_nrmse) + "% -> " + report_out);
    return 0;
}

int cmd_plot(const GlobalOpts& g, const std::string& input, const std::string& kind,
             const std::string& out_svg) {
    epidmd::Stopwatch timer;
    std::string content;
    if (kind == "series") {
        content = epidmd::plot_series_svg(epidmd::read_series_csv(input));
    } else if (kind == "spectrum") {
        content = epidmd::plot_spectrum_svg(epidmd::read_model_json(input));
    } else if (kind == "modes") {
        content = epidmd::plot_modes_svg(epidmd::read_model_json(input));
    } else {
        throw epidmd::ConfigError("unknown plot kind '" + kind + "'");
    }
    epidmd::write_text_file(content, out_svg);

    epidmd::RunManifest manifest;
    manifest.command = "plot";
    manifest.config_digest = epidmd::content_digest(epidmd::read_file_bytes(input));
    manifest.inputs = {input};
    manifest.outputs = {out_svg};
    manifest.duration_seconds = timer.seconds();
    manifest.write(manifest_path(out_svg));
    info(g, "wrote " + out_svg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epidmd: network SEIR epidemic simulation + DMD spectral forecasting"};
    app.require_subcommand(1);

    GlobalOpts g;
    std::uint64_t seed_flag = 0;
    auto* seed_opt = app.add_option("--seed", seed_flag, "Override the scenario RNG seed");
    app.add_option("--threads", g.threads, "Worker threads for the simulator")->default_val(1);
    app.add_flag("--quiet", g.quiet, "Suppress progress messages");

    std::string config_path, out_path, series_path, model_path, report_path, input_path;
    std::string refit = "once", kind, spectrum_out;
    double energy = 0.99, test_frac = 0.2;
    std::optional<int> rank;
    int rank_flag = 0;
    long steps = 1, horizon = 1;

    auto* sim = app.add_subcommand("simulate", "Run the network SEIR simulation");
    sim->add_option("config", config_path, "Scenario JSON")->required();
    sim->add_option("out", out_path, "Output series CSV")->required();

    auto* fit = app.add_subcommand("fit", "Fit a DMD model to a series CSV");
    fit->add_option("series", series_path, "Input series CSV")->required();
    fit->add_option("model_out", out_path, "Output model JSON")->required();
    auto* rank_opt = fit->add_option("--rank", rank_flag, "Fixed truncation rank");
    fit->add_option("--energy", energy, "Singular-value energy threshold")->default_val(0.99);
    fit->add_option("--spectrum-out", spectrum_out, "Spectrum CSV path");

    auto* pred = app.add_subcommand("predict", "Forecast forward from a fitted model");
    pred->add_option("model", model_path, "Model JSON")->required();
    pred->add_option("out", out_path, "Output series CSV")->required();
    pred->add_option("--steps", steps, "Steps ahead")->default_val(1);

    auto* ev = app.add_subcommand("eval", "Rolling forecast evaluation with NRMSE");
    ev->add_option("series", series_path, "Input series CSV")->required();
    ev->add_option("report_out", report_path, "Output report JSON")->required();
    ev->add_option("--test-frac", test_frac, "Held-out suffix fraction")->default_val(0.2);
    ev->add_option("--refit", refit, "'once' or 'each'")->default_val("once");
    auto* ev_rank_opt = ev->add_option("--rank", rank_flag, "Fixed truncation rank");
    ev->add_option("--energy", energy, "Singular-value energy threshold")->default_val(0.99);
    ev->add_option("--horizon", horizon, "Forecast horizon in steps")->default_val(1);

    auto* plot = app.add_subcommand("plot", "Emit a deterministic SVG figure");
    plot->add_option("input", input_path, "Series CSV or model JSON")->required();
    plot->add_option("out", out_path, "Output SVG")->required();
    plot->add_option("--kind", kind, "series | spectrum | modes")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*seed_opt) g.seed = seed_flag;
    if (*rank_opt || *ev_rank_opt) rank = rank_flag;

    try {
        if (sim->parsed()) return cmd_simulate(g, config_path, out_path);
        if (fit->parsed()) return cmd_fit(g, series_path, rank, energy, out_path, spectrum_out);
        if (pred->parsed()) return cmd_predict(g, model_path, steps, out_path);
        if (ev->parsed())
            return cmd_eval(g, series_path, test_frac, refit, rank, energy, horizon, report_path);
        if (plot->parsed()) return cmd_plot(g, input_path, kind, out_path);
    } catch (const epidmd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
