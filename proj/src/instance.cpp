#include "flex/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flex/rng.hpp"
#include "json.hpp"

namespace flex {

using nlohmann::json;

DemandModel DemandModel::deterministic(std::vector<double> mu) {
    DemandModel m;
    m.kind = DemandKind::deterministic;
    m.sigma.assign(mu.size(), 0.0);
    m.lower.assign(mu.size(), 0.0);
    m.upper = mu;
    m.mu = std::move(mu);
    for (std::size_t j = 0; j < m.mu.size(); ++j) {
        m.lower[j] = std::min(0.0, m.mu[j]);
        m.upper[j] = std::max(0.0, m.mu[j]);
    }
    return m;
}

DemandModel DemandModel::truncated_normal(std::vector<double> mu, std::vector<double> sigma) {
    DemandModel m;
    m.kind = DemandKind::truncated_independent_normal;
    m.lower.assign(mu.size(), 0.0);
    m.upper.resize(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) m.upper[j] = mu[j] + 2.0 * sigma[j];
    m.mu = std::move(mu);
    m.sigma = std::move(sigma);
    return m;
}

void DemandModel::validate() const {
    const std::size_t n = mu.size();
    if (sigma.size() != n) throw ValidationError("demand.sigma", "sigma length differs from mu");
    if (lower.size() != n) throw ValidationError("demand.lower", "lower length differs from mu");
    if (upper.size() != n) throw ValidationError("demand.upper", "upper length differs from mu");
    for (std::size_t j = 0; j < n; ++j) {
        if (sigma[j] < 0.0) throw ValidationError("demand.sigma", "sigma must be nonnegative");
        if (lower[j] > upper[j])
            throw ValidationError("demand.lower", "lower bound exceeds upper bound at index " + std::to_string(j));
    }
    if (kind == DemandKind::deterministic) {
        for (double s : sigma)
            if (s != 0.0) throw ValidationError("demand.sigma", "deterministic model requires sigma = 0");
    }
}

void Instance::validate() {
    if (m < 1) throw ValidationError("m", "m must be >= 1");
    if (n < 1) throw ValidationError("n", "n must be >= 1");
    if (static_cast<int>(capacities.size()) != m)
        throw ValidationError("capacities", "capacities length must equal m");
    for (int i = 0; i < m; ++i)
        if (capacities[static_cast<std::size_t>(i)] < 0.0)
            throw ValidationError("capacities", "capacity must be nonnegative at index " + std::to_string(i));
    if (demand.dim() != n) throw ValidationError("demand.mu", "demand dimension must equal n");
    demand.validate();
    if (unit_profit.rows != m || unit_profit.cols != n)
        throw ValidationError("unit_profit", "unit_profit must be m x n");
    if (arc_cost.rows != m || arc_cost.cols != n)
        throw ValidationError("arc_cost", "arc_cost must be m x n");
    for (double v : arc_cost.data)
        if (v < 0.0) throw ValidationError("arc_cost", "arc costs must be nonnegative");
    if (budget < 1) throw ValidationError("budget", "budget must be >= 1");
    if (budget > m * n) {
        std::cerr << "warning: budget " << budget << " exceeds m*n = " << m * n
                  << ", clamping\n";
        budget = m * n;
    }
}

FlexNetwork FlexNetwork::full(int m, int n) {
    FlexNetwork f(m, n);
    std::fill(f.arcs.begin(), f.arcs.end(), std::uint8_t{1});
    f.arc_count = m * n;
    return f;
}

FlexNetwork FlexNetwork::from_arcs(int m, int n, const std::vector<std::pair<int, int>>& list) {
    FlexNetwork f(m, n);
    for (auto [i, j] : list) {
        if (i < 0 || i >= m || j < 0 || j >= n)
            throw ValidationError("arcs", "arc index out of range");
        f.add(i, j);
    }
    return f;
}

std::vector<std::pair<int, int>> FlexNetwork::arc_list() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(static_cast<std::size_t>(arc_count));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (has(i, j)) out.emplace_back(i, j);
    return out;
}

SampleSet sample_demand(const DemandModel& model, std::uint64_t seed, int count) {
    if (count < 1) throw ValidationError("count", "sample count must be >= 1");
    model.validate();
    const int n = model.dim();
    SampleSet set;
    set.seed = seed;
    set.samples.resize(static_cast<std::size_t>(count));
    Rng rng(seed);
    for (int s = 0; s < count; ++s) {
        auto& d = set.samples[static_cast<std::size_t>(s)].d;
        d.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            double v = model.mu[ju];
            if (model.kind == DemandKind::truncated_independent_normal && model.sigma[ju] > 0.0)
                v += model.sigma[ju] * rng.normal();
            d[ju] = std::clamp(v, model.lower[ju], model.upper[ju]);
        }
    }
    return set;
}

Instance build_auto_scenario() {
    Instance inst;
    inst.m = 8;
    inst.n = 16;
    inst.capacities = {380, 230, 250, 230, 240, 230, 230, 240};
    std::vector<double> mu = {320, 150, 270, 110, 220, 110, 120, 80,
                              140, 160, 60, 35, 40, 35, 30, 180};
    std::vector<double> sigma(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) sigma[j] = 0.8 * mu[j];
    inst.demand = DemandModel::truncated_normal(std::move(mu), std::move(sigma));
    inst.unit_profit = Matrix(8, 16, 1.0);
    inst.arc_cost = Matrix(8, 16, 0.0);
    inst.budget = inst.m * inst.n;
    inst.validate();
    return inst;
}

Instance build_fashion_scenario() {
    Instance inst;
    inst.m = 10;
    inst.n = 10;
    std::vector<double> mu = {1017, 1042, 1358, 2525, 1100, 2150, 1113, 4017, 3296, 2383};
    std::vector<double> sigma = {194, 323, 248, 340, 381, 404, 524, 556, 1047, 697};
    std::vector<double> q = {110, 99, 80, 90, 123, 173, 133, 73, 93, 148};
    inst.capacities = mu;
    inst.demand = DemandModel::truncated_normal(std::move(mu), std::move(sigma));
    inst.unit_profit = Matrix(10, 10);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            inst.unit_profit(i, j) = 0.24 * q[static_cast<std::size_t>(j)];
    inst.arc_cost = Matrix(10, 10, 0.0);
    inst.budget = inst.m * inst.n;
    inst.validate();
    return inst;
}

Instance fctp_to_fdp(const std::vector<double>& capacities,
                     const std::vector<double>& demands,
                     const Matrix& transport_cost,
                     const Matrix& fixed_charge) {
    const int m = static_cast<int>(capacities.size());
    const int n = static_cast<int>(demands.size());
    if (transport_cost.rows != m || transport_cost.cols != n)
        throw ValidationError("transport_cost", "transport_cost must be m x n");
    if (fixed_charge.rows != m || fixed_charge.cols != n)
        throw ValidationError("fixed_charge", "fixed_charge must be m x n");
    for (double v : transport_cost.data)
        if (v < 0.0) throw ValidationError("transport_cost", "transport costs must be nonnegative");

    double p_const = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            p_const = std::max(p_const, fixed_charge(i, j) + transport_cost(i, j));

    Instance inst;
    inst.m = m;
    inst.n = n;
    inst.capacities = capacities;
    std::vector<double> sigma(demands.size());
    for (std::size_t j = 0; j < demands.size(); ++j) sigma[j] = 0.8 * demands[j];
    inst.demand = DemandModel::truncated_normal(demands, std::move(sigma));
    inst.unit_profit = Matrix(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            inst.unit_profit(i, j) = p_const - transport_cost(i, j);
    inst.arc_cost = fixed_charge;
    inst.budget = m * n;
    inst.validate();
    return inst;
}

namespace {

json matrix_to_json(const Matrix& a) {
    json rows = json::array();
    for (int i = 0; i < a.rows; ++i) {
        json row = json::array();
        for (int j = 0; j < a.cols; ++j) row.push_back(a(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const char* field, int m, int n) {
    if (!j.is_array() || static_cast<int>(j.size()) != m)
        throw ValidationError(field, std::string(field) + " must have m rows");
    Matrix a(m, n);
    for (int i = 0; i < m; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ValidationError(field, std::string(field) + " row " + std::to_string(i) + " must have n entries");
        for (int jj = 0; jj < n; ++jj) a(i, jj) = row[static_cast<std::size_t>(jj)].get<double>();
    }
    return a;
}

std::vector<double> vec_from_json(const json& j, const char* field, int len) {
    if (!j.is_array() || static_cast<int>(j.size()) != len)
        throw ValidationError(field, std::string(field) + " must have length " + std::to_string(len));
    std::vector<double> v(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) v[static_cast<std::size_t>(i)] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

} // namespace

std::string instance_to_json(const Instance& inst) {
    json j;
    j["m"] = inst.m;
    j["n"] = inst.n;
    j["capacities"] = inst.capacities;
    json d;
    d["kind"] = inst.demand.kind == DemandKind::deterministic ? "deterministic"
                                                              : "truncated_independent_normal";
    d["mu"] = inst.demand.mu;
    d["sigma"] = inst.demand.sigma;
    d["lower"] = inst.demand.lower;
    d["upper"] = inst.demand.upper;
    j["demand"] = std::move(d);
    j["unit_profit"] = matrix_to_json(inst.unit_profit);
    j["arc_cost"] = matrix_to_json(inst.arc_cost);
    j["budget"] = inst.budget;
    return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError("(document)", std::string("invalid JSON: ") + e.what());
    }
    auto require = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ValidationError(key, std::string("missing required key ") + key);
        return j.at(key);
    };
    Instance inst;
    inst.m = require("m").get<int>();
    inst.n = require("n").get<int>();
    if (inst.m < 1) throw ValidationError("m", "m must be >= 1");
    if (inst.n < 1) throw ValidationError("n", "n must be >= 1");
    inst.capacities = vec_from_json(require("capacities"), "capacities", inst.m);

    const json& d = require("demand");
    if (!d.contains("kind")) throw ValidationError("demand.kind", "missing demand.kind");
    const std::string kind = d.at("kind").get<std::string>();
    DemandModel model;
    if (kind == "deterministic") model.kind = DemandKind::deterministic;
    else if (kind == "truncated_independent_normal") model.kind = DemandKind::truncated_independent_normal;
    else throw ValidationError("demand.kind", "unknown demand kind: " + kind);
    if (!d.contains("mu")) throw ValidationError("demand.mu", "missing demand.mu");
    model.mu = vec_from_json(d.at("mu"), "demand.mu", inst.n);
    if (!d.contains("sigma")) throw ValidationError("demand.sigma", "missing demand.sigma");
    model.sigma = vec_from_json(d.at("sigma"), "demand.sigma", inst.n);
    if (d.contains("lower")) model.lower = vec_from_json(d.at("lower"), "demand.lower", inst.n);
    else model.lower.assign(static_cast<std::size_t>(inst.n), 0.0);
    if (d.contains("upper")) model.upper = vec_from_json(d.at("upper"), "demand.upper", inst.n);
    else {
        model.upper.resize(static_cast<std::size_t>(inst.n));
        for (int jj = 0; jj < inst.n; ++jj) {
            const auto ju = static_cast<std::size_t>(jj);
            model.upper[ju] = model.mu[ju] + 2.0 * model.sigma[ju];
        }
    }
    inst.demand = std::move(model);
    inst.unit_profit = matrix_from_json(require("unit_profit"), "unit_profit", inst.m, inst.n);
    inst.arc_cost = matrix_from_json(require("arc_cost"), "arc_cost", inst.m, inst.n);
    inst.budget = require("budget").get<int>();
    inst.validate();
    return inst;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("(file)", "cannot open instance file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return instance_from_json(ss.str());
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("(file)", "cannot write instance file: " + path);
    out << instance_to_json(inst) << '\n';
}

} // namespace flex
