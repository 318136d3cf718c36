#ifndef FLEX_INSTANCE_HPP
#define FLEX_INSTANCE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "flex/errors.hpp"
#include "flex/matrix.hpp"

namespace flex {

enum class DemandKind { deterministic, truncated_independent_normal };

// Marginal distribution of the demand vector d. Coordinates are independent;
// each is Normal(mu_j, sigma_j) clamped into [lower_j, upper_j]. A
// deterministic model is the sigma = 0 special case.
struct DemandModel {
    DemandKind kind = DemandKind::deterministic;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> lower;
    std::vector<double> upper;

    static DemandModel deterministic(std::vector<double> mu);
    // lower defaults to 0, upper to mu + 2*sigma
    static DemandModel truncated_normal(std::vector<double> mu, std::vector<double> sigma);

    int dim() const { return static_cast<int>(mu.size()); }
    void validate() const; // throws ValidationError
};

struct DemandSample {
    std::vector<double> d;
};

// Ordered list of demand samples plus the seed that generated them, so the
// same set can be regenerated bit-for-bit (common random numbers).
struct SampleSet {
    std::vector<DemandSample> samples;
    std::uint64_t seed = 0;

    int count() const { return static_cast<int>(samples.size()); }
    const DemandSample& operator[](int i) const { return samples[static_cast<std::size_t>(i)]; }
};

// A full flexibility design problem: bipartite network of m resources and
// n demand types, stochastic demand, per-arc unit profits and installation
// costs, and a budget of at most `budget` arcs.
struct Instance {
    int m = 0;
    int n = 0;
    std::vector<double> capacities; // c_i, length m
    DemandModel demand;
    Matrix unit_profit; // p_ij, m x n
    Matrix arc_cost;    // I_ij, m x n, nonnegative
    int budget = 1;     // K

    // Throws ValidationError on bad data; clamps budget to m*n (with a
    // warning on stderr) when it exceeds the number of arcs.
    void validate();
    int arc_count_max() const { return m * n; }
};

// Binary m x n arc-selection matrix with a cached arc count.
struct FlexNetwork {
    int m = 0;
    int n = 0;
    std::vector<std::uint8_t> arcs; // row-major 0/1
    int arc_count = 0;

    FlexNetwork() = default;
    FlexNetwork(int m_, int n_) : m(m_), n(n_), arcs(static_cast<std::size_t>(m_) * n_, 0) {}

    static FlexNetwork full(int m, int n);
    static FlexNetwork from_arcs(int m, int n, const std::vector<std::pair<int, int>>& list);

    bool has(int i, int j) const { return arcs[static_cast<std::size_t>(i) * n + j] != 0; }
    void add(int i, int j) {
        auto& a = arcs[static_cast<std::size_t>(i) * n + j];
        if (!a) { a = 1; ++arc_count; }
    }
    void remove(int i, int j) {
        auto& a = arcs[static_cast<std::size_t>(i) * n + j];
        if (a) { a = 0; --arc_count; }
    }
    std::vector<std::pair<int, int>> arc_list() const;

    bool operator==(const FlexNetwork& o) const {
        return m == o.m && n == o.n && arcs == o.arcs;
    }
};

// `count` i.i.d. draws from the model. Deterministic function of
// (model, seed, count); see Rng for the generator contract.
SampleSet sample_demand(const DemandModel& model, std::uint64_t seed, int count);

// The 8-plant / 16-model automotive case: p = 1, I = 0, sigma = 0.8*mu,
// demand clamped into [0, mu + 2*sigma]. Budget defaults to m*n.
Instance build_auto_scenario();

// The 10x10 fashion case: c = mu, listed sigma, p_ij = 0.24 * q_j, I = 0.
Instance build_fashion_scenario();

// Converts a fixed-charge transportation instance into an FDP:
// I = fixed_charge, p = P_const - t with P_const = max(I + t),
// mu = demands, sigma = 0.8*mu, demand clamped into [0, mu + 2*sigma].
Instance fctp_to_fdp(const std::vector<double>& capacities,
                     const std::vector<double>& demands,
                     const Matrix& transport_cost,
                     const Matrix& fixed_charge);

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

// JSON text round trip (used by load/save and by the manifest hash).
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

} // namespace flex

#endif
