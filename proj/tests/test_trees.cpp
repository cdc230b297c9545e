#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "isleforge/exploration.hpp"
#include "isleforge/isles.hpp"
#include "isleforge/stats.hpp"
#include "isleforge/trees.hpp"
#include "test_util.hpp"

using namespace isleforge;

TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and splits differ") {
    auto a = RandomStream::for_replicate(7, 3);
    auto b = RandomStream::for_replicate(7, 3);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    auto c = RandomStream::for_replicate(7, 4);
    CHECK(c() != a());
    // Splits depend on the stream identity, not on its position.
    auto d = a.split(1), e = a.split(2), f = b.split(1);
    for (int i = 0; i < 10; ++i) {
        const auto x = d();
        CHECK(x == f());
        CHECK(x != e());
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform(), v = a.uniform_pos();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("addresses") {
    UlamHarrisAddress u{2, 1, 3};
    CHECK(u.generation() == 3);
    CHECK(u.parent() == UlamHarrisAddress{2, 1});
    CHECK(u.parent().parent().parent().is_root());
    CHECK(UlamHarrisAddress{1, 5} < UlamHarrisAddress{2});
    CHECK(UlamHarrisAddress{1} < UlamHarrisAddress{1, 1});
    CHECK_THROWS_AS(UlamHarrisAddress{}.parent(), TreeError);
}

TEST_CASE("offspring laws sample their pmf") {
    const std::uint64_t n = 1'000'000;
    auto rng = RandomStream::for_replicate(1, 0);

    SUBCASE("geometric-half") {
        const auto law = OffspringLaw::geometric_half();
        std::map<std::uint32_t, std::uint64_t> hist;
        for (std::uint64_t i = 0; i < n; ++i) ++hist[law.sample(rng)];
        CHECK(testutil::frequency_ok(hist[0], n, 0.5));
        CHECK(testutil::frequency_ok(hist[1], n, 0.25));
        CHECK(testutil::frequency_ok(hist[2], n, 0.125));
        CHECK(law.sigma2() == 2.0);
    }
    SUBCASE("binary-half") {
        const auto law = OffspringLaw::binary_half();
        std::uint64_t twos = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto k = law.sample(rng);
            REQUIRE((k == 0 || k == 2));
            twos += k == 2;
        }
        CHECK(testutil::frequency_ok(twos, n, 0.5));
    }
    SUBCASE("criticality of every default law") {
        for (const auto& law : {OffspringLaw::geometric_half(), OffspringLaw::poisson_one(),
                                OffspringLaw::binary_half(), OffspringLaw::custom({0.25, 0.5, 0.25})}) {
            double sum = 0.0;
            for (std::uint64_t i = 0; i < n; ++i) sum += law.sample(rng);
            const double mean = sum / static_cast<double>(n);
            CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt(law.sigma2() / static_cast<double>(n)));
        }
    }
}

TEST_CASE("offspring law validation") {
    CHECK_THROWS(OffspringLaw::custom({0.5, 0.5}));        // mean 1/2
    CHECK_THROWS(OffspringLaw::custom({0.0, 1.0}));        // sigma2 = 0
    CHECK_THROWS(OffspringLaw::custom({0.5, 0.0, 0.6}));   // sum != 1
    CHECK_THROWS(OffspringLaw::from_name("stable"));
    CHECK(OffspringLaw::custom({0.25, 0.5, 0.25}).sigma2() == doctest::Approx(0.5));
    for (const auto& law : {OffspringLaw::geometric_half(), OffspringLaw::poisson_one()}) {
        double total = 0.0;
        for (double p : law.pmf()) total += p;
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("tree storage") {
    const DiscreteTree leaf;
    CHECK(tree_size(leaf) == 1);
    CHECK(tree_size(DiscreteTree({3, 0, 0, 0})) == 4);
    CHECK(tree_size(DiscreteTree({1, 1, 0})) == 3);
    CHECK_THROWS_AS(DiscreteTree({0, 1}), TreeError);
    CHECK_THROWS_AS(DiscreteTree({2, 0}), TreeError);

    const DiscreteTree t({2, 1, 0, 0}); // root -> (1) -> (1,1); root -> (2)
    CHECK(t.address(2) == UlamHarrisAddress{1, 1});
    CHECK(t.address(3) == UlamHarrisAddress{2});
    CHECK(t.find(UlamHarrisAddress{2}) == std::optional<VertexId>(3));
    CHECK_FALSE(t.find(UlamHarrisAddress{3}).has_value());
    CHECK(t.subtree_size(1) == 2);
    CHECK(t.is_ancestor(1, 2));
    CHECK_FALSE(t.is_ancestor(1, 3));
    CHECK(t.subtree(1) == DiscreteTree({1, 0}));

    const auto u = DiscreteTree::from_addresses({{}, {2}, {1}, {1, 1}});
    CHECK(u == t);
    CHECK_THROWS_AS(DiscreteTree::from_addresses({{}, {2}}), TreeError);       // missing (1)
    CHECK_THROWS_AS(DiscreteTree::from_addresses({{}, {1, 1}}), TreeError);    // missing parent
    CHECK_THROWS_AS(DiscreteTree::from_addresses({{1}}), TreeError);           // no root
}

TEST_CASE("sampled trees satisfy the Ulam-Harris rules") {
    auto rng = RandomStream::for_replicate(2, 0);
    const auto law = OffspringLaw::poisson_one();
    for (int i = 0; i < 200; ++i) {
        const auto t = sample_gw_tree(law, rng, 5000);
        if (!t) continue;
        for (VertexId v = 0; v < t->size(); ++v) {
            const auto a = t->address(v);
            REQUIRE(t->find(a) == std::optional<VertexId>(v));
            if (v > 0) REQUIRE(t->find(a.parent()).has_value());
            REQUIRE_FALSE(t->find(a.child(t->child_count(v) + 1)).has_value());
            if (t->child_count(v) > 0) REQUIRE(t->find(a.child(t->child_count(v))).has_value());
        }
    }
}

TEST_CASE("binary-half trees only have 0 or 2 children") {
    auto rng = RandomStream::for_replicate(3, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto t = sample_gw_tree(OffspringLaw::binary_half(), rng, 10000);
        if (!t) continue;
        for (auto k : t->child_counts()) REQUIRE((k == 0 || k == 2));
    }
}

TEST_CASE("geometric-half total progeny for small sizes") {
    const std::uint64_t n = 1'000'000;
    auto rng = RandomStream::for_replicate(4, 0);
    std::uint64_t s1 = 0, s2 = 0, s3 = 0;
    const auto law = OffspringLaw::geometric_half();
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto t = sample_gw_tree(law, rng, 3);
        if (!t) continue;
        s1 += t->size() == 1;
        s2 += t->size() == 2;
        s3 += t->size() == 3;
    }
    CHECK(testutil::frequency_ok(s1, n, 0.5));
    CHECK(testutil::frequency_ok(s2, n, 0.125));
    CHECK(testutil::frequency_ok(s3, n, 0.0625));
}

TEST_CASE("max_vertices = 1 overflows exactly when the root has children") {
    const std::uint64_t n = 200'000;
    auto rng = RandomStream::for_replicate(5, 0);
    std::uint64_t overflow = 0;
    for (std::uint64_t i = 0; i < n; ++i) overflow += !sample_gw_tree(OffspringLaw::poisson_one(), rng, 1);
    CHECK(testutil::frequency_ok(overflow, n, 1.0 - std::exp(-1.0)));
    CHECK_THROWS(sample_gw_tree(OffspringLaw::poisson_one(), rng, 0));
}

TEST_CASE("continuous trees") {
    auto rng = RandomStream::for_replicate(6, 0);
    SUBCASE("single vertex") {
        const auto t = testutil::ctree({0}, {0.7});
        CHECK(t.birth(0) == 0.0);
        CHECK(t.death(0) == doctest::Approx(0.7));
    }
    SUBCASE("event times are distinct and death follows birth") {
        for (int i = 0; i < 500; ++i) {
            const auto t = sample_continuous_gw_tree(OffspringLaw::geometric_half(), 1.0, rng, 10000);
            if (!t) continue;
            REQUIRE(t->events_distinct());
            for (VertexId v = 0; v < t->size(); ++v) REQUIRE(t->death(v) > t->birth(v));
        }
    }
    SUBCASE("ties are resampled") {
        // A lifetime law with three atoms produces ties constantly.
        const LifetimeSampler coarse = [](RandomStream& g) { return 1.0 + static_cast<double>(g() % 3); };
        int built = 0;
        for (int i = 0; i < 200; ++i) {
            const auto t = sample_continuous_gw_tree(OffspringLaw::binary_half(),
                                                     [&](RandomStream& g) {
                                                         return coarse(g) + (g() % 1000000) * 1e-7;
                                                     },
                                                     rng, 200);
            if (!t) continue;
            ++built;
            REQUIRE(t->events_distinct());
        }
        CHECK(built > 100);
    }
    CHECK_THROWS(testutil::ctree({0}, {0.0}));
    CHECK_THROWS(sample_continuous_gw_tree(OffspringLaw::binary_half(), 0.0, rng, 10));
}

TEST_CASE("model-2 (P, C) law does not depend on the lifetime law") {
    const std::uint64_t r = 5;
    const auto law = OffspringLaw::binary_half();
    auto collect = [&](const LifetimeSampler& life, std::uint64_t seed) {
        std::vector<double> p, c;
        auto rng = RandomStream::for_replicate(seed, 0);
        while (p.size() < 10000) {
            const auto t = sample_continuous_gw_tree(law, life, rng, 10000);
            if (!t) continue;
            const auto pc = pop_col_regrow_walk(exploration_walk(t->shape(), label_regrow(*t, r)), r);
            p.push_back(static_cast<double>(pc.population));
            c.push_back(static_cast<double>(pc.colonies));
        }
        return std::pair{p, c};
    };
    const auto [p1, c1] = collect([](RandomStream& g) { return g.exponential(1.0); }, 10);
    const auto [p5, c5] = collect([](RandomStream& g) { return g.exponential(5.0); }, 11);
    const auto [pu, cu] = collect([](RandomStream& g) { return g.uniform_pos(); }, 12);
    CHECK(ks_two_sample(p1, p5, 999, 1).p_value > 0.01);
    CHECK(ks_two_sample(c1, c5, 999, 2).p_value > 0.01);
    CHECK(ks_two_sample(p1, pu, 999, 3).p_value > 0.01);
    CHECK(ks_two_sample(c1, cu, 999, 4).p_value > 0.01);
}
