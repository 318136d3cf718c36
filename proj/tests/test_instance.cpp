#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "flex/instance.hpp"
#include "flex/rng.hpp"

using namespace flex;

TEST_CASE("deterministic model returns the mean every time") {
    DemandModel m = DemandModel::deterministic({3, 5});
    SampleSet s = sample_demand(m, 123, 10);
    for (const auto& d : s.samples) {
        CHECK(d.d[0] == 3.0);
        CHECK(d.d[1] == 5.0);
    }
}

TEST_CASE("sampling is a deterministic function of (model, seed, count)") {
    DemandModel m = DemandModel::truncated_normal({10, 20, 30}, {2, 4, 6});
    SampleSet a = sample_demand(m, 42, 100);
    SampleSet b = sample_demand(m, 42, 100);
    REQUIRE(a.count() == b.count());
    for (int i = 0; i < a.count(); ++i) CHECK(a[i].d == b[i].d);

    SampleSet c = sample_demand(m, 43, 100);
    bool all_equal = true;
    for (int i = 0; i < a.count(); ++i)
        if (a[i].d != c[i].d) all_equal = false;
    CHECK_FALSE(all_equal);
}

TEST_CASE("every sampled coordinate respects the truncation bounds") {
    Rng meta(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(meta.next_below(6));
        std::vector<double> mu(n), sigma(n);
        for (int j = 0; j < n; ++j) {
            mu[j] = 200.0 * meta.next_double();
            sigma[j] = 100.0 * meta.next_double();
        }
        DemandModel m = DemandModel::truncated_normal(mu, sigma);
        SampleSet s = sample_demand(m, meta.next_u64(), 5000);
        for (const auto& d : s.samples)
            for (int j = 0; j < n; ++j) {
                CHECK(d.d[j] >= m.lower[j]);
                CHECK(d.d[j] <= m.upper[j]);
            }
    }
}

TEST_CASE("auto scenario emits the published constants") {
    Instance a = build_auto_scenario();
    CHECK(a.m == 8);
    CHECK(a.n == 16);
    const std::vector<double> cap = {380, 230, 250, 230, 240, 230, 230, 240};
    const std::vector<double> mu = {320, 150, 270, 110, 220, 110, 120, 80,
                                    140, 160, 60, 35, 40, 35, 30, 180};
    REQUIRE(a.capacities.size() == cap.size());
    for (std::size_t i = 0; i < cap.size(); ++i) CHECK(a.capacities[i] == cap[i]);
    REQUIRE(a.demand.mu.size() == mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) {
        CHECK(a.demand.mu[j] == mu[j]);
        CHECK(a.demand.sigma[j] == doctest::Approx(0.8 * mu[j]));
        CHECK(a.demand.lower[j] == 0.0);
        CHECK(a.demand.upper[j] == doctest::Approx(2.6 * mu[j]));
    }
    for (int i = 0; i < a.m; ++i)
        for (int j = 0; j < a.n; ++j) {
            CHECK(a.unit_profit(i, j) == 1.0);
            CHECK(a.arc_cost(i, j) == 0.0);
        }

    // all samples stay inside [0, 2.6 mu]
    SampleSet s = sample_demand(a.demand, 99, 2000);
    for (const auto& d : s.samples)
        for (int j = 0; j < a.n; ++j) CHECK(d.d[j] <= 2.6 * mu[static_cast<std::size_t>(j)] + 1e-12);
}

TEST_CASE("fashion scenario emits the published constants") {
    Instance f = build_fashion_scenario();
    CHECK(f.m == 10);
    CHECK(f.n == 10);
    const std::vector<double> mu = {1017, 1042, 1358, 2525, 1100, 2150, 1113, 4017, 3296, 2383};
    const std::vector<double> sigma = {194, 323, 248, 340, 381, 404, 524, 556, 1047, 697};
    const std::vector<double> q = {110, 99, 80, 90, 123, 173, 133, 73, 93, 148};
    for (std::size_t j = 0; j < mu.size(); ++j) {
        CHECK(f.capacities[j] == mu[j]);
        CHECK(f.demand.mu[j] == mu[j]);
        CHECK(f.demand.sigma[j] == sigma[j]);
    }
    CHECK(f.demand.sigma[8] == 1047.0);
    CHECK(f.unit_profit(0, 0) == doctest::Approx(26.4));
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            CHECK(f.unit_profit(i, j) == doctest::Approx(0.24 * q[static_cast<std::size_t>(j)]));
            CHECK(f.arc_cost(i, j) == 0.0);
        }
}

TEST_CASE("fctp conversion: profit formula and elementwise bound") {
    SUBCASE("hand example") {
        Matrix t(2, 2);
        t(0, 0) = 1; t(0, 1) = 2; t(1, 0) = 3; t(1, 1) = 4;
        Matrix fc(2, 2, 0.0);
        Instance inst = fctp_to_fdp({5, 5}, {4, 4}, t, fc);
        CHECK(inst.unit_profit(0, 0) == 3.0);
        CHECK(inst.unit_profit(0, 1) == 2.0);
        CHECK(inst.unit_profit(1, 0) == 1.0);
        CHECK(inst.unit_profit(1, 1) == 0.0);
        CHECK(inst.demand.mu == std::vector<double>{4, 4});
        CHECK(inst.demand.sigma[0] == doctest::Approx(3.2));
        CHECK(inst.arc_cost(1, 1) == 0.0);
    }
    SUBCASE("uniform costs give uniform profits") {
        Matrix t(3, 2, 2.5);
        Matrix fc(3, 2, 1.0);
        Instance inst = fctp_to_fdp({1, 1, 1}, {1, 1}, t, fc);
        for (double p : inst.unit_profit.data) CHECK(p == doctest::Approx(3.5 - 2.5));
    }
    SUBCASE("p_ij + t_ij <= P_const with equality somewhere when I = 0 at the max") {
        Rng rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            Matrix t(3, 3), fc(3, 3, 0.0);
            for (auto& v : t.data) v = 10.0 * rng.next_double();
            Instance inst = fctp_to_fdp({1, 1, 1}, {1, 1, 1}, t, fc);
            double p_const = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) p_const = std::max(p_const, t(i, j));
            bool tight = false;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double s = inst.unit_profit(i, j) + t(i, j);
                    CHECK(s <= p_const + 1e-12);
                    if (std::abs(s - p_const) < 1e-12) tight = true;
                    CHECK(inst.unit_profit(i, j) >= -1e-12);
                }
            CHECK(tight);
        }
    }
    SUBCASE("shape mismatch is rejected") {
        Matrix t(2, 2, 1.0), fc(2, 2, 0.0);
        CHECK_THROWS_AS(fctp_to_fdp({1, 1, 1}, {1, 1}, t, fc), ValidationError);
    }
}

TEST_CASE("instance json round trip and validation errors") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "flex_test_instance";
    fs::create_directories(dir);
    const std::string path = (dir / "auto.json").string();

    Instance a = build_auto_scenario();
    a.budget = 19;
    save_instance(a, path);
    Instance b = load_instance(path);
    CHECK(a.m == b.m);
    CHECK(a.n == b.n);
    CHECK(a.budget == b.budget);
    CHECK(a.capacities == b.capacities);
    CHECK(a.demand.mu == b.demand.mu);
    CHECK(a.demand.sigma == b.demand.sigma);
    CHECK(a.demand.lower == b.demand.lower);
    CHECK(a.demand.upper == b.demand.upper);
    CHECK(a.unit_profit == b.unit_profit);
    CHECK(a.arc_cost == b.arc_cost);
    CHECK(a.demand.kind == b.demand.kind);

    SUBCASE("wrong capacities length names the field") {
        std::string text = instance_to_json(a);
        text.replace(text.find("\"m\": 8"), 6, "\"m\": 9");
        try {
            instance_from_json(text);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.field() == "capacities");
        }
    }
    SUBCASE("negative arc cost is rejected") {
        Instance bad = build_auto_scenario();
        bad.arc_cost(0, 0) = -1.0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }
    SUBCASE("budget above m*n clamps with a warning") {
        Instance big = build_auto_scenario();
        big.budget = 10000;
        big.validate();
        CHECK(big.budget == big.m * big.n);
    }
}

TEST_CASE("flex network bookkeeping") {
    FlexNetwork f(3, 4);
    CHECK(f.arc_count == 0);
    f.add(1, 2);
    f.add(1, 2);
    CHECK(f.arc_count == 1);
    f.add(0, 0);
    CHECK(f.arc_count == 2);
    f.remove(1, 2);
    CHECK(f.arc_count == 1);
    CHECK_FALSE(f.has(1, 2));
    auto list = FlexNetwork::from_arcs(3, 4, {{0, 0}, {2, 3}}).arc_list();
    REQUIRE(list.size() == 2);
    CHECK(list[0] == std::pair<int, int>{0, 0});
    CHECK(list[1] == std::pair<int, int>{2, 3});
}
