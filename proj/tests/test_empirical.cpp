#include <doctest.h>

#include <cmath>

#include "isleforge/config.hpp"
#include "isleforge/empirical.hpp"
#include "isleforge/stats.hpp"
#include "test_util.hpp"

using namespace isleforge;
using testutil::frequency_ok;

namespace {

// Category of a (population, colonies) pair with coarse tails.
std::size_t pc_bin(std::uint64_t pop, std::uint64_t col) {
    return std::min<std::uint64_t>(pop, 8) * 5 + std::min<std::uint64_t>(col, 4);
}
constexpr std::size_t kBins = 45;

IslandRecord island(std::uint64_t parent, std::uint32_t gen, std::uint64_t pop, std::uint64_t col) {
    return {parent, gen, pop, col};
}

} // namespace

TEST_CASE("r = 1 fossil island is the root and its children") {
    const auto law = OffspringLaw::geometric_half();
    for (std::uint64_t i = 0; i < 200; ++i) {
        RandomStream a(5, i);
        RandomStream b = a;
        const auto d = simulate_island_fossil(law, 1, a);
        const auto k = law.sample(b);
        CHECK(d.population == 1);
        CHECK(d.colonies == k);
    }
}

TEST_CASE("fossil island population law at r = 3") {
    const auto law = OffspringLaw::geometric_half();
    RandomStream rng(6, 0);
    const std::uint64_t n = 1'000'000;
    std::uint64_t one = 0, two = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto d = simulate_island_fossil(law, 3, rng);
        one += d.population == 1;
        two += d.population == 2;
        if (d.population < 3) CHECK(d.colonies == 0);
    }
    CHECK(frequency_ok(one, n, 0.5));
    CHECK(frequency_ok(two, n, 0.125));
}

TEST_CASE("walk-based islands match the tree oracle in law") {
    const auto law = OffspringLaw::geometric_half();
    const std::uint64_t r = 3, n = 10'000;
    SUBCASE("fossil") {
        std::vector<std::uint64_t> walk(kBins), tree(kBins);
        RandomStream rw(7, 0), rt(7, 1);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto d = simulate_island_fossil(law, r, rw);
            ++walk[pc_bin(d.population, d.colonies)];
        }
        for (std::uint64_t i = 0; i < n;) {
            const auto t = sample_gw_tree(law, rt, 20'000);
            if (!t) continue;
            const auto pc = pop_col_direct(*t, r);
            ++tree[pc_bin(pc.population, pc.colonies)];
            ++i;
        }
        CHECK(chi_square_two_sample(walk, tree, 0.01).pass);
    }
    SUBCASE("regrow") {
        std::vector<std::uint64_t> walk(kBins), tree(kBins);
        RandomStream rw(8, 0), rt(8, 1);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto d = simulate_island_regrow(law, r, rw);
            ++walk[pc_bin(d.population, d.colonies)];
        }
        for (std::uint64_t i = 0; i < n;) {
            const auto t = sample_continuous_gw_tree(law, 1.0, rt, 2'000);
            if (!t) continue;
            const auto pc = pop_col_direct(*t, r, Model::regrow);
            ++tree[pc_bin(pc.population, pc.colonies)];
            ++i;
        }
        CHECK(chi_square_two_sample(walk, tree, 0.01).pass);
    }
}

TEST_CASE("regrow island with unreachable r is the whole tree") {
    const auto law = OffspringLaw::geometric_half();
    RandomStream rng(9, 0);
    const std::uint64_t n = 100'000;
    std::uint64_t single = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto d = simulate_island_regrow(law, 1'000'000'000, rng, 10'000'000);
        if (d.overflow) continue;
        CHECK(d.colonies == 0);
        single += d.population == 1;
    }
    CHECK(frequency_ok(single, n, 0.5));
}

TEST_CASE("step cap flags overflow") {
    const auto law = OffspringLaw::binary_half();
    RandomStream rng(10, 0);
    bool seen = false;
    for (int i = 0; i < 1000 && !seen; ++i) {
        const auto d = simulate_island_regrow(law, 1'000'000, rng, 50);
        if (d.overflow) {
            seen = true;
            CHECK(d.steps <= 50);
        }
    }
    CHECK(seen);
}

TEST_CASE("N = 1, r = 1 binary forest has unit atoms") {
    SimulationOptions s;
    s.law = OffspringLaw::binary_half();
    s.N = 1;
    s.r = 1;
    s.keep_atoms = true;
    s.keep_islands = true;
    s.fns = {{1.5, 2.0, 3.0, 4.0, 1.0}};
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const auto res = simulate_forest(s, 11, rep);
        REQUIRE_FALSE(res.summary.overflow);
        for (double x : res.measure.atoms) CHECK(x == 1.0);
        CHECK(res.measure.atoms.size() == res.summary.islands);
        CHECK(res.summary.integrals[0] == 0.0);
    }
}

TEST_CASE("Z-table generation 0 holds N islands") {
    SimulationOptions s;
    s.N = 10;
    s.r = rescaled_threshold(Model::fossil, 1.0, 10);
    s.keep_ztable = true;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto res = simulate_forest(s, 12, rep);
        CHECK(res.ztable.generation_total(0) == 10);
    }
}

TEST_CASE("rescaled thresholds") {
    CHECK(rescaled_threshold(Model::fossil, 1.0, 100) == 10'000);
    CHECK(rescaled_threshold(Model::regrow, 1.0, 100) == 100);
    CHECK(rescaled_threshold(Model::regrow, 0.015, 10) == 1);
    CHECK(rescaled_threshold(Model::fossil, 0.5, 3) == 4);
}

TEST_CASE("replicates do not depend on worker count") {
    for (auto model : {Model::fossil, Model::regrow}) {
        SimulationOptions s;
        s.model = model;
        s.N = 10;
        s.r = rescaled_threshold(model, 1.0, 10);
        s.fns = default_test_functions(model);
        const auto one = run_replicates(s, 13, 0, 64, 1);
        for (unsigned w : {4u, 16u}) {
            const auto many = run_replicates(s, 13, 0, 64, w);
            REQUIRE(many.size() == one.size());
            for (std::size_t i = 0; i < one.size(); ++i) {
                CHECK(many[i].summary.integrals == one[i].summary.integrals);
                CHECK(many[i].summary.islands == one[i].summary.islands);
                CHECK(many[i].summary.steps == one[i].summary.steps);
            }
        }
    }
}

TEST_CASE("fertile root islands: N p_N near lambda") {
    SimulationOptions s;
    s.N = 100;
    s.r = rescaled_threshold(Model::fossil, 1.0, 100);
    s.max_generation = 0;
    std::vector<double> fertile;
    for (const auto& r : run_replicates(s, 14, 0, 10'000, 1))
        fertile.push_back(static_cast<double>(r.summary.fertile));
    const LimitParams p{1.0, 2.0, 1.0};
    CHECK(mean_test(fertile, p.lambda(), 0.10).pass);
}

TEST_CASE("regrow colony probability r P(C > 0) near 1") {
    const auto law = OffspringLaw::geometric_half();
    RandomStream rng(15, 0);
    const std::uint64_t r = 500, n = 200'000;
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n; ++i)
        hits += walk_exceeds_before_extinction(law, static_cast<std::int64_t>(r) - 1, rng);
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double est = static_cast<double>(r) * p;
    const double se = static_cast<double>(r) * std::sqrt(p * (1 - p) / static_cast<double>(n));
    CHECK(std::abs(est - 1.0) <= 3 * se + 0.10);
}

TEST_CASE("reordered forest") {
    SUBCASE("populations descending") {
        const std::vector<IslandRecord> isl{island(IslandRecord::kNoParent, 0, 3, 0),
                                            island(IslandRecord::kNoParent, 0, 7, 0)};
        const auto root = reorder_forest(isl, 1, 1, 1, 2);
        CHECK(root.population == 1.0);
        CHECK(root.fertility == 1.0);
        REQUIRE(root.children.size() == 2);
        CHECK(root.children[0].population == 7.0);
        CHECK(root.children[1].population == 3.0);
    }
    SUBCASE("ties keep index order, fertility breaks population ties") {
        const std::vector<IslandRecord> isl{island(IslandRecord::kNoParent, 0, 4, 0),
                                            island(IslandRecord::kNoParent, 0, 4, 2),
                                            island(IslandRecord::kNoParent, 0, 4, 0)};
        const auto root = reorder_forest(isl, 2, 4, 1, 3);
        REQUIRE(root.children.size() == 3);
        CHECK(root.children[0].fertility == 1.0);
        CHECK(root.children[1].fertility == 0.0);
        CHECK(root.children[0].population == 1.0);
        const auto flat = flatten_prefix(root, 1, 3);
        CHECK(flat == std::vector<double>{1.0, 1.0, 1.0, 0.0, 1.0, 0.0});
    }
    SUBCASE("width truncates and children nest") {
        const std::vector<IslandRecord> isl{
            island(IslandRecord::kNoParent, 0, 1, 0), island(IslandRecord::kNoParent, 0, 5, 1),
            island(IslandRecord::kNoParent, 0, 3, 0), island(IslandRecord::kNoParent, 0, 2, 0),
            island(1, 1, 6, 0)};
        const auto root = reorder_forest(isl, 1, 5, 2, 3);
        REQUIRE(root.children.size() == 3);
        CHECK(root.children[0].population == 5.0);
        CHECK(root.children[2].population == 2.0);
        REQUIRE(root.children[0].children.size() == 1);
        CHECK(root.children[0].children[0].population == 6.0);
    }
}
