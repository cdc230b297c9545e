#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "isleforge/exploration.hpp"
#include "isleforge/trees.hpp"

namespace isleforge {

enum class Model { fossil, regrow };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

struct PopCol {
    std::uint64_t population = 0;
    std::uint64_t colonies = 0;
    bool operator==(const PopCol&) const = default;
};

struct IslandNode {
    UlamHarrisAddress address;
    std::uint64_t population = 0;
};

// Islands in depth-first address order.
struct IslesTree {
    std::vector<IslandNode> nodes;

    std::uint64_t total_population() const;
    std::size_t colonies_of(std::size_t i) const;
};

// Vertices labeled > r under BFS whose parent is labeled <= r, in label order.
std::vector<VertexId> migrants_fossil(const DiscreteTree& tree, std::uint64_t r);

// Iterated rule: at the first death after which the alive count N exceeds r,
// the N - r rightmost newborns migrate; their subtrees are removed and the
// alive-count sweep restarts. Returns migrants in marking order.
std::vector<VertexId> migrants_regrow(const ContinuousTree& tree, std::uint64_t r);

IslesTree build_tree_of_isles(const DiscreteTree& tree, std::uint64_t r);
IslesTree build_tree_of_isles(const ContinuousTree& tree, std::uint64_t r, Model model);

PopCol pop_col_direct(const DiscreteTree& tree, std::uint64_t r);
PopCol pop_col_direct(const ContinuousTree& tree, std::uint64_t r, Model model);

PopCol pop_col_fossil_walk(const ExplorationWalk& walk, std::uint64_t r);
PopCol pop_col_regrow_walk(const ExplorationWalk& walk, std::uint64_t r);

// Under-(r-1) stretch lengths and overshoots of a walk, one entry per cycle.
struct RegrowStretches {
    std::vector<std::uint64_t> lengths;
    std::vector<std::uint64_t> overshoots;
};
RegrowStretches regrow_stretches(const ExplorationWalk& walk, std::uint64_t r);

void write_isles_json(std::ostream& os, const IslesTree& isles);

} // namespace isleforge
