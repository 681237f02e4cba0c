#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "epidmd/errors.hpp"
#include "epidmd/rng.hpp"
#include "epidmd/snapshot.hpp"

namespace epidmd {

// Directed probabilistic shipment graph over farms.
struct FarmNetwork {
    struct Farm {
        std::string id;
        long population = 0;
    };
    struct Edge {
        std::string src;
        std::string dst;
        double shipment_prob = 0.0; // per day
        long shipment_size = 1;
    };
    std::vector<Farm> farms;
    std::vector<Edge> edges;

    long farm_index(const std::string& id) const {
        for (std::size_t i = 0; i < farms.size(); ++i)
            if (farms[i].id == id) return static_cast<long>(i);
        throw UnknownNode("no farm '" + id + "'");
    }

    void validate() const {
        std::set<std::string> ids;
        for (const auto& f : farms) {
            if (f.population < 1) throw ConfigError("farm '" + f.id + "' population must be >= 1");
            if (!ids.insert(f.id).second) throw ConfigError("duplicate farm id '" + f.id + "'");
        }
        for (const auto& e : edges) {
            if (!ids.count(e.src)) throw ConfigError("edge src '" + e.src + "' is not a farm");
            if (!ids.count(e.dst)) throw ConfigError("edge dst '" + e.dst + "' is not a farm");
            if (e.src == e.dst) throw ConfigError("self-loop edge on '" + e.src + "'");
            if (e.shipment_prob < 0.0 || e.shipment_prob > 1.0)
                throw ConfigError("shipment_prob outside [0,1] on edge " + e.src + "->" + e.dst);
            if (e.shipment_size < 1) throw ConfigError("shipment_size must be >= 1");
        }
    }
};

struct ContactGraphSpec {
    double edge_prob = 0.5;
};

// beta is a per-contact per-day transmission rate; sigma_days and gamma_days
// are mean stage durations (the default duration reading). With
// rates_as_durations=false, sigma/gamma are instead read as rates, i.e. mean
// durations 1/sigma and 1/gamma days.
struct SeirParams {
    double beta = 0.087;
    double sigma_days = 7.0;
    double gamma_days = 6.5;
    bool rates_as_durations = true;

    double p_expose_to_infect() const {
        double p = rates_as_durations ? 1.0 / sigma_days : sigma_days;
        return std::clamp(p, 0.0, 1.0);
    }
    double p_infect_to_recover() const {
        double p = rates_as_durations ? 1.0 / gamma_days : gamma_days;
        return std::clamp(p, 0.0, 1.0);
    }

    void validate() const {
        if (beta < 0.0 || beta > 1.0) throw ConfigError("beta must be in [0,1]");
        if (sigma_days <= 0.0) throw ConfigError("sigma_days must be positive");
        if (gamma_days <= 0.0) throw ConfigError("gamma_days must be positive");
    }
};

enum class PigState : std::uint8_t { S = 0, E = 1, I = 2, R = 3 };

enum class Observable { Susceptible, Exposed, Infected, Recovered, NewInfections };

inline Observable observable_from_string(const std::string& s) {
    if (s == "S" || s == "susceptible") return Observable::Susceptible;
    if (s == "E" || s == "exposed") return Observable::Exposed;
    if (s == "I" || s == "infected" || s == "infected_count") return Observable::Infected;
    if (s == "R" || s == "recovered") return Observable::Recovered;
    if (s == "new_infections") return Observable::NewInfections;
    throw ConfigError("unknown observable '" + s + "'");
}

struct OutbreakSeed {
    std::string farm_id; // empty = pick a farm at random
    long n_initial_infected = 1;
};

// Symmetric adjacency over pig slots, packed bits. Supports swap-pop
// removal and appending with Bernoulli attachment, both keeping the
// matrix symmetric.
class BitMatrix {
public:
    BitMatrix() = default;
    explicit BitMatrix(long n) { reset(n); }

    void reset(long n) {
        n_ = n;
        cap_ = n + n / 2 + 8;
        words_ = (cap_ + 63) / 64;
        bits_.assign(static_cast<std::size_t>(cap_) * words_, 0);
    }

    long size() const { return n_; }

    bool get(long i, long j) const {
        return (bits_[i * words_ + (j >> 6)] >> (j & 63)) & 1ULL;
    }
    void set(long i, long j) {
        bits_[i * words_ + (j >> 6)] |= 1ULL << (j & 63);
        bits_[j * words_ + (i >> 6)] |= 1ULL << (i & 63);
    }
    void clear(long i, long j) {
        bits_[i * words_ + (j >> 6)] &= ~(1ULL << (j & 63));
        bits_[j * words_ + (i >> 6)] &= ~(1ULL << (i & 63));
    }

    template <typename Fn>
    void for_each_neighbor(long i, Fn&& fn) const {
        const std::uint64_t* row = &bits_[i * words_];
        for (long w = 0; w < words_; ++w) {
            std::uint64_t word = row[w];
            while (word) {
                long bit = __builtin_ctzll(word);
                fn((w << 6) + bit);
                word &= word - 1;
            }
        }
    }

    long degree(long i) const {
        long d = 0;
        const std::uint64_t* row = &bits_[i * words_];
        for (long w = 0; w < words_; ++w) d += __builtin_popcountll(row[w]);
        return d;
    }

    long edge_count() const {
        long total = 0;
        for (long i = 0; i < n_; ++i) total += degree(i);
        return total / 2;
    }

    // Append an isolated node and return its index.
    long add_node() {
        if (n_ == cap_) grow();
        return n_++;
    }

    // Remove node i by swapping in the last node; returns the index the
    // former last node now occupies (== i) for caller-side bookkeeping.
    void remove_node(long i) {
        std::vector<long> nbrs;
        for_each_neighbor(i, [&](long j) { nbrs.push_back(j); });
        for (long j : nbrs) clear(i, j);
        const long last = n_ - 1;
        if (i != last) {
            nbrs.clear();
            for_each_neighbor(last, [&](long j) { nbrs.push_back(j); });
            for (long j : nbrs) {
                clear(last, j);
                set(i, j == last ? i : j);
            }
        }
        --n_;
    }

private:
    void grow() {
        BitMatrix bigger;
        bigger.reset(cap_ * 2);
        bigger.n_ = n_;
        for (long i = 0; i < n_; ++i)
            for (long w = 0; w < words_; ++w)
                bigger.bits_[i * bigger.words_ + w] = bits_[i * words_ + w];
        *this = std::move(bigger);
    }

    long n_ = 0;
    long cap_ = 0;
    long words_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Erdos-Renyi sample: each unordered pair independently with edge_prob.
inline BitMatrix sample_contact_graph(long population, const ContactGraphSpec& spec, Rng rng) {
    if (population < 1) throw ConfigError("population must be >= 1");
    if (spec.edge_prob < 0.0 || spec.edge_prob > 1.0)
        throw ConfigError("edge_prob must be in [0,1]");
    BitMatrix adj(population);
    if (spec.edge_prob <= 0.0) return adj;
    for (long i = 0; i < population; ++i)
        for (long j = i + 1; j < population; ++j)
            if (rng.bernoulli(spec.edge_prob)) adj.set(i, j);
    return adj;
}

struct FarmCounts {
    long s = 0, e = 0, i = 0, r = 0;
    long total() const { return s + e + i + r; }
};

struct SeirWorld {
    struct Farm {
        std::string id;
        std::vector<PigState> state;
        std::vector<std::int32_t> infected_neighbors; // Y_i, kept incrementally
        BitMatrix adj;
        long size() const { return static_cast<long>(state.size()); }
    };

    FarmNetwork network;
    ContactGraphSpec contact;
    std::vector<Farm> farms;
    std::uint64_t rng_seed = 0;
    long day = 0;
    bool resample_daily = false;
    long underflow_events = 0;                 // shipments clamped to source size
    std::vector<long> new_infections_today;    // per farm, refreshed each step

    FarmCounts counts(long f) const {
        FarmCounts c;
        for (PigState s : farms[f].state) {
            switch (s) {
                case PigState::S: ++c.s; break;
                case PigState::E: ++c.e; break;
                case PigState::I: ++c.i; break;
                case PigState::R: ++c.r; break;
            }
        }
        return c;
    }

    long total_population() const {
        long n = 0;
        for (const auto& f : farms) n += f.size();
        return n;
    }
};

namespace detail {

inline void rebuild_neighbor_counts(SeirWorld::Farm& farm) {
    farm.infected_neighbors.assign(farm.state.size(), 0);
    for (long i = 0; i < farm.size(); ++i) {
        if (farm.state[i] != PigState::I) continue;
        farm.adj.for_each_neighbor(i, [&](long j) { ++farm.infected_neighbors[j]; });
    }
}

inline void mark_infectious(SeirWorld::Farm& farm, long i, int delta) {
    farm.adj.for_each_neighbor(i, [&](long j) { farm.infected_neighbors[j] += delta; });
}

// Remove pig i from the farm (swap-pop); returns its state.
inline PigState remove_pig(SeirWorld::Farm& farm, long i) {
    PigState s = farm.state[i];
    if (s == PigState::I) mark_infectious(farm, i, -1);
    farm.adj.remove_node(i);
    const long last = farm.size() - 1;
    farm.state[i] = farm.state[last];
    farm.infected_neighbors[i] = farm.infected_neighbors[last];
    farm.state.pop_back();
    farm.infected_neighbors.pop_back();
    return s;
}

// Attach an arriving pig with the farm's edge probability against every
// resident, preserving edge_prob in expectation.
inline void add_pig(SeirWorld::Farm& farm, PigState s, double edge_prob, Rng& rng) {
    const long i = farm.adj.add_node();
    farm.state.push_back(s);
    farm.infected_neighbors.push_back(0);
    for (long j = 0; j < i; ++j)
        if (rng.bernoulli(edge_prob)) farm.adj.set(i, j);
    std::int32_t y = 0;
    farm.adj.for_each_neighbor(i, [&](long j) {
        if (farm.state[j] == PigState::I) ++y;
        if (s == PigState::I) ++farm.infected_neighbors[j];
    });
    farm.infected_neighbors[i] = y;
}

// Per-day infection probability 1 - (1-beta)^y, cached per y.
class InfectionTable {
public:
    explicit InfectionTable(double beta) : base_(1.0 - beta) {}
    double operator()(std::int32_t y) {
        if (y <= 0) return 0.0;
        while (static_cast<std::int32_t>(table_.size()) <= y)
            table_.push_back(1.0 - std::pow(base_, static_cast<double>(table_.size())));
        return table_[y];
    }

private:
    double base_;
    std::vector<double> table_{0.0};
};

} // namespace detail

inline SeirWorld make_world(const FarmNetwork& network, const ContactGraphSpec& contact,
                            std::uint64_t seed) {
    network.validate();
    SeirWorld world;
    world.network = network;
    world.contact = contact;
    world.rng_seed = seed;
    world.farms.resize(network.farms.size());
    for (std::size_t f = 0; f < network.farms.size(); ++f) {
        auto& farm = world.farms[f];
        farm.id = network.farms[f].id;
        farm.state.assign(network.farms[f].population, PigState::S);
        Rng rng = Rng::substream(seed, rng_tag::contact_graph, f);
        farm.adj = sample_contact_graph(network.farms[f].population, contact, rng);
        farm.infected_neighbors.assign(network.farms[f].population, 0);
    }
    world.new_infections_today.assign(network.farms.size(), 0);
    return world;
}

inline void seed_outbreak(SeirWorld& world, const OutbreakSeed& seed) {
    if (seed.n_initial_infected < 1) throw ConfigError("n_initial_infected must be >= 1");
    long f;
    if (seed.farm_id.empty()) {
        Rng rng = Rng::substream(world.rng_seed, rng_tag::outbreak);
        f = static_cast<long>(rng.below(world.farms.size()));
    } else {
        f = world.network.farm_index(seed.farm_id);
    }
    auto& farm = world.farms[f];
    if (seed.n_initial_infected > farm.size())
        throw InfectExceedsPopulation("cannot infect " + std::to_string(seed.n_initial_infected) +
                                      " of " + std::to_string(farm.size()) + " pigs in '" +
                                      farm.id + "'");
    for (long i = 0; i < seed.n_initial_infected; ++i) {
        farm.state[i] = PigState::I;
        detail::mark_infectious(farm, i, +1);
    }
}

// One synchronous day: (1) shipments per edge, (2) S->E from start-of-day
// infectious neighbor counts, (3) E->I, (4) I->R. Each farm's epidemiology
// draws from its own (farm, day) substream, each edge's shipment from an
// (edge, day) substream, so trajectories do not depend on scheduling.
inline void step_day(SeirWorld& world, const SeirParams& params, int threads = 1) {
    params.validate();
    const long day = world.day;
    std::fill(world.new_infections_today.begin(), world.new_infections_today.end(), 0L);

    if (world.resample_daily) {
        for (std::size_t f = 0; f < world.farms.size(); ++f) {
            auto& farm = world.farms[f];
            Rng rng = Rng::substream(world.rng_seed, rng_tag::contact_graph, f, day + 1);
            farm.adj = sample_contact_graph(std::max(farm.size(), 1L), world.contact, rng);
            detail::rebuild_neighbor_counts(farm);
        }
    }

    // Shipments, serial in edge order.
    for (std::size_t e = 0; e < world.network.edges.size(); ++e) {
        const auto& edge = world.network.edges[e];
        Rng rng = Rng::substream(world.rng_seed, rng_tag::edge_day, day, e);
        if (!rng.bernoulli(edge.shipment_prob)) continue;
        auto& src = world.farms[world.network.farm_index(edge.src)];
        auto& dst = world.farms[world.network.farm_index(edge.dst)];
        long k = edge.shipment_size;
        if (k > src.size()) {
            k = src.size();
            ++world.underflow_events;
        }
        if (k == 0) continue;
        // Distinct source indices, removed high-to-low so earlier picks stay valid.
        std::set<long> picked;
        while (static_cast<long>(picked.size()) < k)
            picked.insert(static_cast<long>(rng.below(src.size())) );
        for (auto it = picked.rbegin(); it != picked.rend(); ++it) {
            PigState s = detail::remove_pig(src, *it);
            detail::add_pig(dst, s, world.contact.edge_prob, rng);
        }
    }

    // Intra-farm transitions, synchronous per farm.
    const double p_ei = params.p_expose_to_infect();
    const double p_ir = params.p_infect_to_recover();
    auto run_farm = [&](std::size_t f) {
        auto& farm = world.farms[f];
        Rng rng = Rng::substream(world.rng_seed, rng_tag::farm_day, day, f);
        detail::InfectionTable p_inf(params.beta);
        std::vector<long> to_expose, to_infect, to_recover;
        for (long i = 0; i < farm.size(); ++i) {
            switch (farm.state[i]) {
                case PigState::S:
                    if (farm.infected_neighbors[i] > 0 &&
                        rng.bernoulli(p_inf(farm.infected_neighbors[i])))
                        to_expose.push_back(i);
                    break;
                case PigState::E:
                    if (rng.bernoulli(p_ei)) to_infect.push_back(i);
                    break;
                case PigState::I:
                    if (rng.bernoulli(p_ir)) to_recover.push_back(i);
                    break;
                case PigState::R:
                    break;
            }
        }
        for (long i : to_expose) farm.state[i] = PigState::E;
        for (long i : to_infect) {
            farm.state[i] = PigState::I;
            detail::mark_infectious(farm, i, +1);
        }
        for (long i : to_recover) {
            farm.state[i] = PigState::R;
            detail::mark_infectious(farm, i, -1);
        }
        world.new_infections_today[f] = static_cast<long>(to_expose.size());
    };

    const std::size_t n_farms = world.farms.size();
    if (threads <= 1 || n_farms < 2) {
        for (std::size_t f = 0; f < n_farms; ++f) run_farm(f);
    } else {
        std::vector<std::thread> pool;
        const std::size_t nt = std::min<std::size_t>(threads, n_farms);
        for (std::size_t t = 0; t < nt; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t f = t; f < n_farms; f += nt) run_farm(f);
            });
        for (auto& th : pool) th.join();
    }

    ++world.day;
}

struct SimConfig {
    FarmNetwork network;
    ContactGraphSpec contact;
    SeirParams params;
    OutbreakSeed outbreak;
    long days = 1;
    std::uint64_t seed = 0;
    Observable observable = Observable::Infected;
    bool resample_daily = false;
    int threads = 1;
};

inline long observe(const SeirWorld& world, long f, Observable obs) {
    switch (obs) {
        case Observable::Susceptible: return world.counts(f).s;
        case Observable::Exposed: return world.counts(f).e;
        case Observable::Infected: return world.counts(f).i;
        case Observable::Recovered: return world.counts(f).r;
        case Observable::NewInfections: return world.new_infections_today[f];
    }
    return 0;
}

// Run the epidemic for config.days days; row t of the result is the
// observable after day t+1.
inline SnapshotSeries simulate(const SimConfig& config, SeirWorld* world_out = nullptr) {
    if (config.days < 1) throw ConfigError("days must be >= 1");
    SeirWorld world = make_world(config.network, config.contact, config.seed);
    world.resample_daily = config.resample_daily;
    seed_outbreak(world, config.outbreak);

    SnapshotSeries series;
    const long n_farms = static_cast<long>(world.farms.size());
    series.values.resize(config.days, n_farms);
    series.dt = 1.0;
    for (const auto& f : world.farms) series.node_ids.push_back(f.id);

    for (long d = 0; d < config.days; ++d) {
        step_day(world, config.params, config.threads);
        for (long f = 0; f < n_farms; ++f)
            series.values(d, f) = static_cast<double>(observe(world, f, config.observable));
    }
    if (world_out) *world_out = std::move(world);
    return series;
}

// Synthetic directed shipment network with the shape of the real data:
// Erdos-Renyi digraph, uniform-random shipment probabilities and sizes.
inline FarmNetwork generate_network(long n_farms, std::pair<long, long> population_range,
                                    double edge_density, Rng rng,
                                    std::pair<double, double> prob_range = {0.01, 0.2},
                                    std::pair<long, long> size_range = {1, 8}) {
    if (n_farms < 1) throw ConfigError("n_farms must be >= 1");
    if (edge_density < 0.0 || edge_density > 1.0) throw ConfigError("edge_density must be in [0,1]");
    FarmNetwork net;
    for (long i = 0; i < n_farms; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "farm_%03ld", i + 1);
        long pop = static_cast<long>(
            rng.uniform_int(population_range.first, population_range.second));
        net.farms.push_back({id, pop});
    }
    for (long i = 0; i < n_farms; ++i)
        for (long j = 0; j < n_farms; ++j) {
            if (i == j) continue;
            if (!rng.bernoulli(edge_density)) continue;
            FarmNetwork::Edge e;
            e.src = net.farms[i].id;
            e.dst = net.farms[j].id;
            e.shipment_prob = rng.uniform(prob_range.first, prob_range.second);
            e.shipment_size = static_cast<long>(rng.uniform_int(size_range.first, size_range.second));
            net.edges.push_back(e);
        }
    return net;
}

} // namespace epidmd
