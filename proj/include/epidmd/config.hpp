#pragma once

#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "epidmd/epinet.hpp"
#include "epidmd/errors.hpp"
#include "epidmd/rng.hpp"

namespace epidmd {

namespace detail {

template <typename T>
T require(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing required field '" + path + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + path + key + "' has the wrong type");
    }
}

template <typename T>
T optional(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("field '" + path + key + "' has the wrong type");
    }
}

} // namespace detail

// Scenario JSON -> SimConfig. The network is given either explicitly
// (farms + edges) or via a generate_network block expanded with the
// scenario seed.
inline SimConfig parse_sim_config(const nlohmann::json& j) {
    SimConfig config;
    config.params.beta = detail::require<double>(j, "", "beta");
    config.params.sigma_days = detail::require<double>(j, "", "sigma_days");
    config.params.gamma_days = detail::require<double>(j, "", "gamma_days");
    config.params.rates_as_durations = detail::optional<bool>(j, "", "rates_as_durations", true);
    config.params.validate();
    config.days = detail::require<long>(j, "", "days");
    config.seed = detail::require<std::uint64_t>(j, "", "seed");
    config.contact.edge_prob = detail::optional<double>(j, "", "edge_prob", 0.5);
    config.observable =
        observable_from_string(detail::optional<std::string>(j, "", "observable", "infected"));
    config.resample_daily = detail::optional<bool>(j, "", "resample_daily", false);
    config.threads = detail::optional<int>(j, "", "threads", 1);

    if (!j.contains("outbreak")) throw ConfigError("missing required field 'outbreak'");
    const auto& ob = j.at("outbreak");
    std::string farm = detail::optional<std::string>(ob, "outbreak.", "farm_id", "random");
    config.outbreak.farm_id = (farm == "random") ? "" : farm;
    config.outbreak.n_initial_infected =
        detail::require<long>(ob, "outbreak.", "n_initial_infected");

    if (j.contains("generate_network")) {
        const auto& g = j.at("generate_network");
        auto pops = detail::require<std::pair<long, long>>(g, "generate_network.",
                                                           "population_range");
        auto probs = detail::optional<std::pair<double, double>>(
            g, "generate_network.", "shipment_prob_range", {0.01, 0.2});
        auto sizes = detail::optional<std::pair<long, long>>(g, "generate_network.",
                                                             "shipment_size_range", {1, 8});
        config.network = generate_network(
            detail::require<long>(g, "generate_network.", "n_farms"), pops,
            detail::require<double>(g, "generate_network.", "edge_density"),
            Rng::substream(config.seed, rng_tag::network), probs, sizes);
    } else {
        if (!j.contains("farms")) throw ConfigError("missing required field 'farms' (or 'generate_network')");
        for (const auto& f : j.at("farms"))
            config.network.farms.push_back({detail::require<std::string>(f, "farms[].", "id"),
                                            detail::require<long>(f, "farms[].", "population")});
        for (const auto& e : detail::optional<nlohmann::json>(j, "", "edges", nlohmann::json::array())) {
            FarmNetwork::Edge edge;
            edge.src = detail::require<std::string>(e, "edges[].", "src");
            edge.dst = detail::require<std::string>(e, "edges[].", "dst");
            edge.shipment_prob = detail::require<double>(e, "edges[].", "shipment_prob");
            edge.shipment_size = detail::optional<long>(e, "edges[].", "shipment_size", 1);
            config.network.edges.push_back(edge);
        }
    }
    config.network.validate();
    return config;
}

} // namespace epidmd
