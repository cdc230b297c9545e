#include "isleforge/exploration.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <queue>

#include "isleforge/isles.hpp"

namespace isleforge {

bool Line::is_antichain(const DiscreteTree& tree) const {
    auto m = members;
    std::sort(m.begin(), m.end());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] >= tree.size()) return false;
        if (i > 0 && (m[i] == m[i - 1] || tree.is_ancestor(m[i - 1], m[i]))) return false;
    }
    return true;
}

bool Labeling::is_valid(const DiscreteTree& tree) const {
    if (order.size() != tree.size() || order.empty() || order.front() != 0) return false;
    std::vector<char> seen(tree.size(), 0);
    for (VertexId v : order) {
        if (v >= tree.size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

std::vector<UlamHarrisAddress> Labeling::addresses(const DiscreteTree& tree) const {
    std::vector<UlamHarrisAddress> out;
    out.reserve(order.size());
    for (VertexId v : order) out.push_back(tree.address(v));
    return out;
}

std::size_t ExplorationWalk::hitting_time() const {
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (steps[i] == -1) return i;
    return steps.size();
}

bool ExplorationWalk::is_valid() const {
    if (steps.size() < 2 || steps.front() != 0 || steps.back() != -1) return false;
    for (std::size_t i = 1; i < steps.size(); ++i) {
        if (steps[i] - steps[i - 1] < -1) return false;
        if (i + 1 < steps.size() && steps[i] < 0) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

Labeling label_bfs(const DiscreteTree& tree) {
    Labeling out;
    out.order.reserve(tree.size());
    out.order.push_back(0);
    for (std::size_t head = 0; head < out.order.size(); ++head)
        for (VertexId c : tree.children(out.order[head])) out.order.push_back(c);
    return out;
}

Labeling label_dfs(const DiscreteTree& tree) {
    Labeling out;
    out.order.resize(tree.size());
    for (VertexId v = 0; v < tree.size(); ++v) out.order[v] = v;
    return out;
}

namespace {

struct DeathHeap {
    const ContinuousTree& tree;
    std::vector<VertexId> heap;

    bool later(VertexId a, VertexId b) const {
        const double da = tree.death(a), db = tree.death(b);
        return da > db || (da == db && a > b);
    }
    void push(VertexId v) {
        heap.push_back(v);
        std::push_heap(heap.begin(), heap.end(), [this](VertexId a, VertexId b) { return later(a, b); });
    }
    VertexId pop() {
        std::pop_heap(heap.begin(), heap.end(), [this](VertexId a, VertexId b) { return later(a, b); });
        const VertexId v = heap.back();
        heap.pop_back();
        return v;
    }
    bool empty() const { return heap.empty(); }
    std::size_t size() const { return heap.size(); }
};

void death_first_from(const ContinuousTree& tree, VertexId start, std::vector<VertexId>& order) {
    DeathHeap heap{tree, {}};
    heap.push(start);
    while (!heap.empty()) {
        const VertexId v = heap.pop();
        order.push_back(v);
        for (VertexId c : tree.shape().children(v)) heap.push(c);
    }
}

} // namespace

Labeling label_death_first(const ContinuousTree& tree) {
    Labeling out;
    out.order.reserve(tree.size());
    death_first_from(tree, 0, out.order);
    return out;
}

Labeling label_regrow(const ContinuousTree& tree, std::uint64_t r) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    const auto& shape = tree.shape();
    Labeling out;
    out.order.reserve(tree.size());
    // The heap holds the island's line: exactly the individuals alive in the
    // island between consecutive deaths.
    DeathHeap island{tree, {}};
    island.push(0);
    std::vector<VertexId> migrants;
    while (!island.empty()) {
        const VertexId v = island.pop();
        out.order.push_back(v);
        const auto kids = shape.children(v);
        const std::uint64_t alive = island.size() + kids.size();
        const std::size_t m = alive > r ? static_cast<std::size_t>(alive - r) : 0;
        const std::size_t stay = kids.size() - m;
        for (std::size_t i = 0; i < stay; ++i) island.push(kids[i]);
        if (m == 0) continue;
        migrants.assign(kids.begin() + static_cast<std::ptrdiff_t>(stay), kids.end());
        std::sort(migrants.begin(), migrants.end(),
                  [&](VertexId a, VertexId b) { return tree.death(a) < tree.death(b); });
        for (VertexId u : migrants) death_first_from(tree, u, out.order);
    }
    return out;
}

ExplorationWalk exploration_walk(const DiscreteTree& tree, const Labeling& labeling) {
    ExplorationWalk w;
    w.steps.reserve(labeling.order.size() + 1);
    std::int64_t s = 0;
    w.steps.push_back(0);
    for (VertexId v : labeling.order) {
        s += static_cast<std::int64_t>(tree.child_count(v)) - 1;
        w.steps.push_back(s);
    }
    return w;
}

// ---------------------------------------------------------------------------

namespace {

std::pair<std::vector<std::uint32_t>, std::vector<VertexId>> prune_counts(const DiscreteTree& tree,
                                                                          const Line& line) {
    if (!line.is_antichain(tree)) throw std::invalid_argument("line is not an antichain of the tree");
    std::vector<char> on_line(tree.size(), 0);
    for (VertexId v : line.members) on_line[v] = 1;
    std::vector<std::uint32_t> counts;
    std::vector<VertexId> source;
    for (VertexId v = 0; v < tree.size();) {
        source.push_back(v);
        if (on_line[v]) {
            counts.push_back(0);
            v += tree.subtree_size(v);
        } else {
            counts.push_back(tree.child_count(v));
            ++v;
        }
    }
    return {std::move(counts), std::move(source)};
}

} // namespace

Pruned<DiscreteTree> prune_at_line_mapped(const DiscreteTree& tree, const Line& line) {
    auto [counts, source] = prune_counts(tree, line);
    return {DiscreteTree(std::move(counts)), std::move(source)};
}

Pruned<ContinuousTree> prune_at_line_mapped(const ContinuousTree& tree, const Line& line) {
    auto [counts, source] = prune_counts(tree.shape(), line);
    std::vector<double> life;
    life.reserve(source.size());
    for (VertexId v : source) life.push_back(tree.lifetime(v));
    return {ContinuousTree(DiscreteTree(std::move(counts)), std::move(life)), std::move(source)};
}

DiscreteTree prune_at_line(const DiscreteTree& tree, const Line& line) {
    return prune_at_line_mapped(tree, line).tree;
}

ContinuousTree prune_at_line(const ContinuousTree& tree, const Line& line) {
    return prune_at_line_mapped(tree, line).tree;
}

namespace {

const DiscreteTree& shape_of(const DiscreteTree& t) { return t; }
const DiscreteTree& shape_of(const ContinuousTree& t) { return t.shape(); }

template <class Tree>
Labeling run_rule(const Tree& tree, const Rule<Tree>& rule) {
    const DiscreteTree& shape = shape_of(tree);
    Labeling out;
    std::vector<VertexId> line{0};
    std::vector<VertexId> to_pruned(shape.size(), kNoVertex);
    while (!line.empty()) {
        auto pruned = prune_at_line_mapped(tree, Line{line});
        for (VertexId i = 0; i < pruned.source.size(); ++i) to_pruned[pruned.source[i]] = i;
        std::vector<VertexId> line_ids;
        line_ids.reserve(line.size());
        for (VertexId v : line) line_ids.push_back(to_pruned[v]);
        const VertexId pick = rule(LineState<Tree>{pruned.tree, line_ids});
        if (std::find(line_ids.begin(), line_ids.end(), pick) == line_ids.end())
            throw RuleViolation("rule returned a vertex outside the current line");
        const VertexId v = pruned.source[pick];
        out.order.push_back(v);
        line.erase(std::find(line.begin(), line.end(), v));
        for (VertexId c : shape.children(v)) line.push_back(c);
        std::sort(line.begin(), line.end());
    }
    return out;
}

} // namespace

Labeling run_markovian_labeling(const DiscreteTree& tree, const Rule<DiscreteTree>& rule) {
    return run_rule(tree, rule);
}

Labeling run_markovian_labeling(const ContinuousTree& tree, const Rule<ContinuousTree>& rule) {
    return run_rule(tree, rule);
}

namespace rules {

Rule<DiscreteTree> leftmost_lowest_generation() {
    return [](const LineState<DiscreteTree>& s) {
        return *std::min_element(s.line.begin(), s.line.end(), [&](VertexId a, VertexId b) {
            const auto da = s.pruned.depth(a), db = s.pruned.depth(b);
            return da < db || (da == db && a < b);
        });
    };
}

Rule<DiscreteTree> lexicographic_smallest() {
    return [](const LineState<DiscreteTree>& s) { return *std::min_element(s.line.begin(), s.line.end()); };
}

namespace {
VertexId soonest(const ContinuousTree& t, const std::vector<VertexId>& set) {
    return *std::min_element(set.begin(), set.end(), [&](VertexId a, VertexId b) {
        return t.death(a) < t.death(b) || (t.death(a) == t.death(b) && a < b);
    });
}
} // namespace

Rule<ContinuousTree> death_first() {
    return [](const LineState<ContinuousTree>& s) { return soonest(s.pruned, s.line); };
}

Rule<ContinuousTree> regrow(std::uint64_t r) {
    return [r](const LineState<ContinuousTree>& s) {
        const auto& shape = s.pruned.shape();
        const auto migrants = migrants_regrow(s.pruned, r);
        std::vector<char> is_migrant(shape.size(), 0);
        for (VertexId m : migrants) is_migrant[m] = 1;
        std::vector<VertexId> below, at, rest;
        for (VertexId x : s.line) {
            if (is_migrant[x]) {
                at.push_back(x);
                continue;
            }
            bool under = false;
            for (VertexId a = shape.parent(x); a != kNoVertex; a = shape.parent(a))
                if (is_migrant[a]) {
                    under = true;
                    break;
                }
            (under ? below : rest).push_back(x);
        }
        if (!below.empty()) return soonest(s.pruned, below);
        if (!at.empty()) return soonest(s.pruned, at);
        return soonest(s.pruned, rest);
    };
}

} // namespace rules

void write_walk_csv(std::ostream& os, const ExplorationWalk& walk) {
    os << "i,S\n";
    for (std::size_t i = 0; i < walk.steps.size(); ++i) os << i << ',' << walk.steps[i] << '\n';
}

} // namespace isleforge
