#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "isleforge/cumulant.hpp"
#include "isleforge/limits.hpp"
#include "isleforge/stats.hpp"
#include "test_util.hpp"

using namespace isleforge;
using testutil::frequency_ok;
using testutil::moments;

namespace {

bool within(double est, double se, double target, double rel) {
    return std::abs(est - target) <= 3.0 * se + rel * std::abs(target);
}

std::size_t count_nodes(const PrefixNode& n) {
    std::size_t k = 1;
    for (const auto& c : n.children) k += count_nodes(c);
    return k;
}

bool non_fertile_are_leaves(const PrefixNode& n) {
    if (n.fertility == 0.0 && !n.children.empty()) return false;
    return std::all_of(n.children.begin(), n.children.end(), non_fertile_are_leaves);
}

} // namespace

TEST_CASE("limit constants") {
    for (double c : {0.25, 1.0, 4.0})
        for (double s2 : {1.0, 2.0, 0.5}) {
            const LimitParams p{c, s2, 1.0};
            CHECK(std::abs(p.lambda() * p.theta_mean() - 1.0) < 1e-12);
            CHECK(p.c_tilde() == doctest::Approx(c / std::sqrt(s2)));
        }
    CHECK(LimitParams{1.0, 2.0, 2.0}.lambda() == doctest::Approx(2.0 / std::sqrt(std::numbers::pi)));
}

TEST_CASE("intensity measures") {
    const IntensityMeasure mu{IntensityKind::mu, 1.0};
    const IntensityMeasure mu_c{IntensityKind::mu_c, 1.0};
    CHECK(mu.tail(0.25) == doctest::Approx(2.0));
    CHECK(mu_c.tail(0.25) == doctest::Approx(1.0));
    CHECK(mu_c.tail(1.0) == doctest::Approx(0.0));
    CHECK(mu.density(1.0) == doctest::Approx(0.5));
    CHECK(mu_c.density(2.0) == 0.0);
    // Gamma_1 = 0.5 at scale 1: 1/sqrt(a) - 1 = 0.5.
    CHECK(mu_c.inverse_tail(0.5) == doctest::Approx(4.0 / 9.0));
    for (double x : {0.01, 0.3, 0.9}) {
        CHECK(mu.inverse_tail(mu.tail(x)) == doctest::Approx(x));
        CHECK(mu_c.inverse_tail(mu_c.tail(x)) == doctest::Approx(x));
    }
}

TEST_CASE("top-k Poisson atoms") {
    const IntensityMeasure mu_c{IntensityKind::mu_c, 1.0};
    RandomStream rng(40, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto a = poisson_atoms_topk(1.0, mu_c, 5, rng);
        REQUIRE(a.size() == 5);
        CHECK(std::is_sorted(a.rbegin(), a.rend()));
        CHECK(a.front() < 1.0);
        CHECK(a.back() > 0.0);
    }
    // Atoms of mu above 0.25 number Poisson(tail(0.25)) = Poisson(2).
    const IntensityMeasure mu{IntensityKind::mu, 1.0};
    const std::uint64_t n = 1'000'000;
    std::vector<double> counts(n), counts_above(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto top = poisson_atoms_topk(1.0, mu, 20, rng);
        counts[i] = static_cast<double>(std::count_if(top.begin(), top.end(), [](double x) { return x > 0.25; }));
        counts_above[i] = static_cast<double>(poisson_atoms_above(1.0, mu, 0.25, rng).size());
    }
    const auto m = moments(counts), ma = moments(counts_above);
    CHECK(within(m.mean, m.se, 2.0, 0.0));
    CHECK(within(ma.mean, ma.se, 2.0, 0.0));
}

TEST_CASE("theta and Rayleigh draws") {
    const LimitParams p{1.0, 2.0, 1.0};
    RandomStream rng(41, 0);
    const std::uint64_t n = 1'000'000;
    std::vector<double> t(n);
    std::uint64_t above = 0;
    for (auto& x : t) {
        x = sample_theta(p, rng);
        CHECK(x > 0.0);
        above += x > std::sqrt(2.0);  // sqrt(c) sigma
    }
    const auto m = moments(t);
    CHECK(within(m.mean, m.se, p.theta_mean(), 0.0));
    CHECK(frequency_ok(above, n, std::exp(-0.5)));
}

TEST_CASE("Cox offspring") {
    RandomStream rng(42, 0);
    const std::uint64_t n = 1'000'000;
    std::vector<double> k(n);
    std::uint64_t zeros = 0;
    for (auto& x : k) {
        const auto v = sample_cox_offspring(rng);
        zeros += v == 0;
        x = static_cast<double>(v);
    }
    const auto m = moments(k);
    CHECK(within(m.mean, m.se, 1.0, 0.0));
    CHECK(frequency_ok(zeros, n, rayleigh_laplace(std::sqrt(2.0 / std::numbers::pi))));
}

TEST_CASE("closed-form (P, C) Laplace transform") {
    const LimitParams p{1.0, 1.0, 1.0};
    CHECK(laplace_PC(0, 0, p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(laplace_PC(0, 1, p) == doctest::Approx(0.5).epsilon(1e-12));
    const double s = std::sinh(1.0);
    CHECK(laplace_PC(0.5, 0, p) == doctest::Approx(std::tanh(1.0) / (s * s)).epsilon(1e-10));
    CHECK(laplace_PC(0.5, 0, p) == doctest::Approx(0.551442).epsilon(1e-5));
    for (double a : {0.0, 0.1, 1.0, 3.0})
        for (double b : {0.0, 0.2, 2.0}) {
            CHECK(laplace_PC(a, b, p) >= laplace_PC(a + 0.5, b, p));
            CHECK(laplace_PC(a, b, p) >= laplace_PC(a, b + 0.5, p));
        }
    // Continuity across the small-alpha series.
    CHECK(laplace_PC(0.9999e-4, 0.3, p) == doctest::Approx(laplace_PC(1.0001e-4, 0.3, p)).epsilon(1e-7));
}

TEST_CASE("fossil eta structure") {
    const LimitParams p{1.0, 2.0, 1.0};
    RandomStream rng(43, 0);
    std::uint64_t empty = 0;
    const std::uint64_t n = 20'000;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto e = sample_eta_fossil(p, 1.0, rng, 100'000);
        // Support starting at c leaves only the delta_c atoms, one per fertile node.
        if (e.budget_exceeded) continue;
        CHECK(e.measure.atoms.size() == e.nodes - 1);
        for (double x : e.measure.atoms) CHECK(x == 1.0);
        empty += e.nodes == 1;
    }
    CHECK(frequency_ok(empty, n, std::exp(-p.lambda())));
    for (int i = 0; i < 200; ++i) {
        const auto e = sample_eta_fossil(p, 0.01, rng, 100'000);
        if (e.budget_exceeded) continue;
        const auto deltas = std::count(e.measure.atoms.begin(), e.measure.atoms.end(), 1.0);
        CHECK(static_cast<std::uint64_t>(deltas) == e.nodes - 1);
        for (double x : e.measure.atoms) CHECK((x >= 0.01 && x <= 1.0));
    }
}

TEST_CASE("fossil eta agrees with the cumulant solver") {
    const LimitParams p{1.0, 2.0, 1.0};
    const TestFunction f{0.2, 0.4, 0.6, 0.9, 2.0};
    const double kappa = solve_cumulant_fossil(f, p);
    RandomStream rng(44, 0);
    std::vector<double> integrals(100'000);
    for (auto& x : integrals) x = sample_eta_integrals(p, false, {f}, 0.01, 50.0, rng).integrals[0];
    const auto est = empirical_cumulant(integrals);
    CHECK(std::abs(est.value - kappa) <= 3.0 * est.se);
}

TEST_CASE("regrow eta structure") {
    const LimitParams p{1.0, 1.0, 1.0};
    // Near-zero colonies: the root's children are themselves childless.
    PCPool pool{{{0.5, 1e-12}}, "fixed"};
    RandomStream rng(45, 0);
    std::vector<double> children(100'000);
    for (auto& x : children) {
        const auto e = sample_eta_regrow(p, 0.4, rng, pool);
        const auto kept = std::count(e.measure.atoms.begin(), e.measure.atoms.end(), 0.5);
        CHECK(static_cast<std::uint64_t>(kept) == e.nodes - 1);
        x = static_cast<double>(e.nodes - 1);
    }
    const auto m = moments(children);
    CHECK(within(m.mean, m.se, 1.0 / p.c, 0.0));
}

TEST_CASE("tree budget trips at the critical tail rate") {
    const LimitParams p{1.0, 2.0, 1.0};
    // Offspring variance of the fertility tree: 1 + lambda^2 Var(theta) = 4 / pi.
    const double v = 4.0 / std::numbers::pi;
    const std::uint64_t budget = 10'000, n = 100'000;
    const double expected = p.lambda() * std::sqrt(2.0 / (std::numbers::pi * v * static_cast<double>(budget)));
    RandomStream rng(46, 0);
    std::uint64_t tripped = 0;
    for (std::uint64_t i = 0; i < n; ++i)
        tripped += sample_eta_integrals(p, false, {}, 1.0, 0.0, rng, nullptr, budget).budget_exceeded;
    const double rate = static_cast<double>(tripped) / static_cast<double>(n);
    CHECK(within(rate, std::sqrt(expected / static_cast<double>(n)), expected, 0.10));
}

TEST_CASE("walk (P, C) sampler") {
    const LimitParams p{1.0, 1.0, 1.0};
    const PCMethod method{PCMethod::Kind::walk, 500, OffspringLaw::binary_half(), 1e-4, 1000};
    const auto pool = build_pc_pool(p, method, 4000, 47, 4);
    CHECK(pool.method == method.describe());
    std::vector<double> e;
    for (const auto& s : pool.samples) {
        CHECK(s.P >= 0.0);
        CHECK(s.C > 0.0);
        e.push_back(std::exp(-s.C));
    }
    const auto m = moments(e);
    CHECK(within(m.mean, m.se, laplace_PC(0, 1, p), 0.05));

    // The pool does not depend on the worker count.
    const auto again = build_pc_pool(p, method, 4000, 47, 1);
    for (std::size_t i = 0; i < pool.samples.size(); ++i) {
        CHECK(again.samples[i].P == pool.samples[i].P);
        CHECK(again.samples[i].C == pool.samples[i].C);
    }

    RandomStream rng(48, 0);
    const auto generic = PCMethod{PCMethod::Kind::walk, 500, OffspringLaw::geometric_half(), 1e-4, 1000};
    CHECK_THROWS(sample_PC(p, generic, rng));  // sigma^2 mismatch
    const auto raw = sample_fertile_island(OffspringLaw::geometric_half(), 50, rng);
    CHECK(raw.colonies > 0);
}

TEST_CASE("excursion (P, C) sampler") {
    const LimitParams p{1.0, 1.0, 1.0};
    const PCMethod method{PCMethod::Kind::excursion, 2000, OffspringLaw::binary_half(), 1e-4, 1000};
    const auto pool = build_pc_pool(p, method, 2000, 49, 4);
    std::vector<double> e;
    for (const auto& s : pool.samples) {
        CHECK(s.P > 0.0);
        CHECK(s.C > 0.0);
        e.push_back(std::exp(-0.5 * s.P));
    }
    const auto m = moments(e);
    CHECK(within(m.mean, m.se, laplace_PC(0.5, 0, p), 0.05));
}

TEST_CASE("pool CSV round trip") {
    PCPool pool{{{0.1, 0.2}, {1.0 / 3.0, 2.0 / 7.0}, {1e-300, 5e300}}, "walk n_ref=500"};
    std::stringstream ss;
    write_pc_pool(ss, pool);
    const auto back = read_pc_pool(ss);
    CHECK(back.method == pool.method);
    REQUIRE(back.samples.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.samples[i].P == pool.samples[i].P);
        CHECK(back.samples[i].C == pool.samples[i].C);
    }
}

TEST_CASE("Bessel-3 hitting times") {
    RandomStream rng(50, 0);
    const std::size_t n = 20'000;
    std::vector<double> lap(n), t1(n / 4), t2(n / 4);
    for (auto& x : lap) {
        const double tau = sample_bessel3_hit(1.0, 1e-4, rng);
        CHECK(tau > 0.0);
        x = std::exp(-0.5 * tau);
    }
    const auto m = moments(lap);
    CHECK(within(m.mean, m.se, 1.0 / std::sinh(1.0), 0.02));
    // Brownian scaling: tau(2) / 4 has the law of tau(1).
    for (auto& x : t1) x = sample_bessel3_hit(1.0, 1e-4, rng);
    for (auto& x : t2) x = sample_bessel3_hit(2.0, 4e-4, rng) / 4.0;
    CHECK(ks_two_sample(t1, t2, 999, 51, 0.01).pass);
    CHECK_THROWS(sample_bessel3_hit(1.0, 1e-3, rng));
}

TEST_CASE("CSBP prefix") {
    const LimitParams p{1.0, 2.0, 1.0};
    RandomStream rng(52, 0);
    const std::uint64_t n = 1'000'000;
    std::uint64_t fertile_child = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto root = sample_csbp_prefix(p, 1, 1, rng);
        CHECK(root.population == 1.0);
        CHECK(root.fertility == 1.0);
        REQUIRE(root.children.size() == 1);
        if (root.children[0].fertility > 0.0) {
            ++fertile_child;
            CHECK(root.children[0].population == 1.0);
        } else {
            CHECK(root.children[0].population < 1.0);
        }
    }
    CHECK(frequency_ok(fertile_child, n, 1.0 - std::exp(-p.lambda())));
    for (int i = 0; i < 2000; ++i) {
        const auto root = sample_csbp_prefix(p, 3, 3, rng);
        CHECK(non_fertile_are_leaves(root));
        CHECK(count_nodes(root) <= 1 + 3 + 9 + 27);
        CHECK(flatten_prefix(root, 3, 3).size() == 2 * (3 + 9 + 27));
    }
}

TEST_CASE("non-fertile atom tail does not depend on c") {
    // Mean number of mu^c atoms in (0.1, 0.5) from the root: lambda2 (tail(0.1) - tail(0.5)).
    for (double c : {1.0, 4.0}) {
        const LimitParams p{c, 2.0, 1.0};
        RandomStream rng(53, static_cast<std::uint64_t>(c));
        const IntensityMeasure mu_c{IntensityKind::mu_c, c};
        const double expected = p.lambda2() * (mu_c.tail(0.1) - mu_c.tail(0.5));
        std::vector<double> counts(200'000);
        for (auto& x : counts) {
            const auto a = poisson_atoms_above(p.lambda2(), mu_c, 0.1, rng);
            x = static_cast<double>(std::count_if(a.begin(), a.end(), [](double v) { return v < 0.5; }));
        }
        const auto m = moments(counts);
        CHECK(within(m.mean, m.se, expected, 0.0));
        CHECK(expected == doctest::Approx(p.lambda2() * (1.0 / std::sqrt(0.1) - 1.0 / std::sqrt(0.5))));
    }
}
