#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "isleforge/trees.hpp"

namespace isleforge {

// Antichain of vertices.
struct Line {
    std::vector<VertexId> members;
    bool is_antichain(const DiscreteTree& tree) const;
};

// order[i] is the vertex carrying label i+1.
struct Labeling {
    std::vector<VertexId> order;
    bool is_valid(const DiscreteTree& tree) const;
    std::vector<UlamHarrisAddress> addresses(const DiscreteTree& tree) const;
};

// S_0 .. S_s with S_i = sum_{j<=i} (k_j - 1).
struct ExplorationWalk {
    std::vector<std::int64_t> steps;

    // First index with S = -1 (equals the tree size for a valid walk).
    std::size_t hitting_time() const;
    bool is_valid() const;
};

Labeling label_bfs(const DiscreteTree& tree);
Labeling label_dfs(const DiscreteTree& tree);
Labeling label_death_first(const ContinuousTree& tree);
Labeling label_regrow(const ContinuousTree& tree, std::uint64_t r);

ExplorationWalk exploration_walk(const DiscreteTree& tree, const Labeling& labeling);

// Pruned tree together with the id each retained vertex had in the source.
template <class Tree>
struct Pruned {
    Tree tree;
    std::vector<VertexId> source;
};

DiscreteTree prune_at_line(const DiscreteTree& tree, const Line& line);
ContinuousTree prune_at_line(const ContinuousTree& tree, const Line& line);
Pruned<DiscreteTree> prune_at_line_mapped(const DiscreteTree& tree, const Line& line);
Pruned<ContinuousTree> prune_at_line_mapped(const ContinuousTree& tree, const Line& line);

// What a rule may look at: the tree pruned at the current line, and the
// line expressed in that tree's vertex ids.
template <class Tree>
struct LineState {
    const Tree& pruned;
    const std::vector<VertexId>& line;
};

template <class Tree>
using Rule = std::function<VertexId(const LineState<Tree>&)>;

struct RuleViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Line-evolution loop: start from {root}, label the vertex picked by the
// rule, replace it by its children. Rebuilds the pruned tree at every step,
// so it costs O(size^2); intended as a reference implementation.
Labeling run_markovian_labeling(const DiscreteTree& tree, const Rule<DiscreteTree>& rule);
Labeling run_markovian_labeling(const ContinuousTree& tree, const Rule<ContinuousTree>& rule);

namespace rules {
Rule<DiscreteTree> leftmost_lowest_generation();
Rule<DiscreteTree> lexicographic_smallest();
Rule<ContinuousTree> death_first();
Rule<ContinuousTree> regrow(std::uint64_t r);
} // namespace rules

void write_walk_csv(std::ostream& os, const ExplorationWalk& walk);

} // namespace isleforge
