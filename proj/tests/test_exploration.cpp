#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "isleforge/exploration.hpp"
#include "isleforge/stats.hpp"
#include "test_util.hpp"

using namespace isleforge;

namespace {

std::vector<UlamHarrisAddress> addrs(const DiscreteTree& t, const Labeling& l) { return l.addresses(t); }

// Alive count just after each death, from a direct sweep over event times.
std::vector<std::int64_t> alive_after_deaths(const ContinuousTree& t) {
    std::vector<std::int64_t> out;
    std::int64_t alive = 1;
    for (VertexId v : t.death_order()) {
        alive += static_cast<std::int64_t>(t.shape().child_count(v)) - 1;
        out.push_back(alive);
    }
    return out;
}

} // namespace

TEST_CASE("breadth-first labeling") {
    const DiscreteTree star({3, 0, 0, 0});
    CHECK(addrs(star, label_bfs(star)) ==
          std::vector<UlamHarrisAddress>{{}, {1}, {2}, {3}});
    const DiscreteTree t({2, 1, 0, 0}); // root -> {(1) -> (1,1); (2)}
    CHECK(addrs(t, label_bfs(t)) == std::vector<UlamHarrisAddress>{{}, {1}, {2}, {1, 1}});
}

TEST_CASE("death-first labeling") {
    CHECK(label_death_first(testutil::ctree({0}, {1.0})).order == std::vector<VertexId>{0});
    // Root dies at 1 with A (dies 3) and B (dies 2).
    const auto t = testutil::ctree({2, 0, 0}, {1.0, 2.0, 1.0});
    CHECK(label_death_first(t).order == std::vector<VertexId>{0, 2, 1});
}

TEST_CASE("regrow labeling on the worked tree") {
    const auto t = testutil::worked_tree_w2();
    // root, A, A's right child, A's left child, B
    CHECK(label_regrow(t, 2).order == std::vector<VertexId>{0, 1, 3, 2, 4});
    CHECK(exploration_walk(t.shape(), label_regrow(t, 2)).steps == std::vector<std::int64_t>{0, 1, 2, 1, 0, -1});
    // No migration at r = 3.
    CHECK(label_regrow(t, 3).order == label_death_first(t).order);
}

TEST_CASE("exploration walk examples") {
    const DiscreteTree star({3, 0, 0, 0});
    CHECK(exploration_walk(star, label_bfs(star)).steps == std::vector<std::int64_t>{0, 2, 1, 0, -1});
    const DiscreteTree leaf;
    CHECK(exploration_walk(leaf, label_bfs(leaf)).steps == std::vector<std::int64_t>{0, -1});
    const DiscreteTree chain({1, 1, 0});
    CHECK(exploration_walk(chain, label_bfs(chain)).steps == std::vector<std::int64_t>{0, 0, 0, -1});

    std::ostringstream os;
    write_walk_csv(os, exploration_walk(star, label_bfs(star)));
    CHECK(os.str() == "i,S\n0,0\n1,2\n2,1\n3,0\n4,-1\n");
}

TEST_CASE("pruning at a line") {
    const DiscreteTree full({2, 2, 0, 0, 2, 0, 0});
    CHECK(prune_at_line(full, Line{{0}}) == DiscreteTree());
    CHECK(prune_at_line(full, Line{{}}) == full);
    CHECK(prune_at_line(full, Line{{2, 3, 5, 6}}) == full);
    CHECK(prune_at_line(full, Line{{1, 5}}) == DiscreteTree({2, 0, 2, 0, 0}));
    CHECK_THROWS(prune_at_line(full, Line{{1, 2}})); // not an antichain

    const auto ct = testutil::ctree({2, 2, 0, 0, 2, 0, 0}, {1, 2, 3, 4, 5, 6, 7});
    const auto p = prune_at_line_mapped(ct, Line{{1}});
    CHECK(p.tree.size() == 5);
    CHECK(p.source == std::vector<VertexId>{0, 1, 4, 5, 6});
    CHECK(p.tree.lifetime(1) == 2.0); // line members keep their lifetime
    CHECK(p.tree.lifetime(2) == 5.0);
}

TEST_CASE("rule engine reproduces the direct labelings") {
    auto rng = RandomStream::for_replicate(20, 0);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto t = sample_gw_tree(OffspringLaw::geometric_half(), rng, 60);
        if (!t) continue;
        ++checked;
        REQUIRE(run_markovian_labeling(*t, rules::leftmost_lowest_generation()).order == label_bfs(*t).order);
        const auto dfs = run_markovian_labeling(*t, rules::lexicographic_smallest());
        REQUIRE(dfs.order == label_dfs(*t).order);
        REQUIRE(exploration_walk(*t, dfs).hitting_time() == t->size());
    }
    CHECK(checked > 900);

    for (int i = 0; i < 400; ++i) {
        const auto t = sample_continuous_gw_tree(OffspringLaw::binary_half(), 1.0, rng, 60);
        if (!t) continue;
        REQUIRE(run_markovian_labeling(*t, rules::death_first()).order == label_death_first(*t).order);
        for (std::uint64_t r : {1, 2, 3, 5}) {
            INFO("r = " << r << ", size = " << t->size());
            REQUIRE(run_markovian_labeling(*t, rules::regrow(r)).order == label_regrow(*t, r).order);
        }
    }
}

TEST_CASE("rule returning a vertex outside the line is rejected") {
    const DiscreteTree t({2, 0, 0});
    // Always picks the root, which leaves the line after the first step.
    const Rule<DiscreteTree> bad = [](const LineState<DiscreteTree>&) { return VertexId{0}; };
    CHECK_THROWS_AS(run_markovian_labeling(t, bad), RuleViolation);
}

TEST_CASE("walk hits -1 exactly at the tree size for every rule") {
    auto rng = RandomStream::for_replicate(21, 0);
    const auto law = OffspringLaw::poisson_one();
    int n = 0;
    while (n < 10000) {
        const auto t = sample_continuous_gw_tree(law, 1.0, rng, 10000);
        if (!t) continue;
        ++n;
        const auto& s = t->shape();
        for (const auto& l : {label_bfs(s), label_dfs(s), label_death_first(*t), label_regrow(*t, 3)}) {
            REQUIRE(l.is_valid(s));
            const auto w = exploration_walk(s, l);
            REQUIRE(w.is_valid());
            REQUIRE(w.hitting_time() == s.size());
        }
    }
}

TEST_CASE("death-first head count matches an event sweep") {
    auto rng = RandomStream::for_replicate(22, 0);
    int n = 0;
    while (n < 10000) {
        const auto t = sample_continuous_gw_tree(OffspringLaw::geometric_half(), 1.0, rng, 10000);
        if (!t) continue;
        ++n;
        const auto w = exploration_walk(t->shape(), label_death_first(*t));
        const auto alive = alive_after_deaths(*t);
        for (std::size_t i = 1; i < w.steps.size(); ++i) REQUIRE(1 + w.steps[i] == alive[i - 1]);
    }
}

TEST_CASE("walk increments are i.i.d. with law rho(k+1)") {
    const auto law = OffspringLaw::geometric_half();
    auto rng = RandomStream::for_replicate(23, 0);
    // Pool the first min(s, 8) increments of each tree.
    std::vector<std::uint64_t> counts_bfs(8, 0), counts_df(8, 0), counts_rg(8, 0);
    std::uint64_t pooled = 0;
    auto add = [](std::vector<std::uint64_t>& h, const ExplorationWalk& w) {
        const std::size_t m = std::min<std::size_t>(w.steps.size() - 1, 8);
        for (std::size_t i = 1; i <= m; ++i) {
            const auto k = static_cast<std::size_t>(w.steps[i] - w.steps[i - 1] + 1);
            ++h[std::min<std::size_t>(k, 7)];
        }
        return m;
    };
    while (pooled < 1'000'000) {
        const auto t = sample_continuous_gw_tree(law, 1.0, rng, 100000);
        if (!t) continue;
        pooled += add(counts_bfs, exploration_walk(t->shape(), label_bfs(t->shape())));
        add(counts_df, exploration_walk(t->shape(), label_death_first(*t)));
        add(counts_rg, exploration_walk(t->shape(), label_regrow(*t, 2)));
    }
    std::vector<double> probs;
    for (int k = 0; k < 7; ++k) probs.push_back(std::ldexp(1.0, -(k + 1)));
    probs.push_back(std::ldexp(1.0, -7));
    CHECK(chi_square_gof(counts_bfs, probs, 0.001).pass);
    CHECK(chi_square_gof(counts_df, probs, 0.001).pass);
    CHECK(chi_square_gof(counts_rg, probs, 0.001).pass);
}
