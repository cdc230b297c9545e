#include "isleforge/isles.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

namespace isleforge {

std::string to_string(Model m) { return m == Model::fossil ? "fossil" : "regrow"; }

Model model_from_string(const std::string& s) {
    if (s == "fossil") return Model::fossil;
    if (s == "regrow") return Model::regrow;
    throw std::invalid_argument("unknown model '" + s + "' (expected fossil or regrow)");
}

std::uint64_t IslesTree::total_population() const {
    std::uint64_t total = 0;
    for (const auto& n : nodes) total += n.population;
    return total;
}

std::size_t IslesTree::colonies_of(std::size_t i) const {
    const auto& a = nodes[i].address;
    std::size_t k = 0;
    for (const auto& n : nodes)
        if (!n.address.is_root() && n.address.generation() == a.generation() + 1 && n.address.parent() == a) ++k;
    return k;
}

// ---------------------------------------------------------------------------

std::vector<VertexId> migrants_fossil(const DiscreteTree& tree, std::uint64_t r) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    std::vector<VertexId> out;
    if (tree.size() <= r) return out;
    const auto bfs = label_bfs(tree);
    std::vector<std::uint64_t> label(tree.size());
    for (std::size_t i = 0; i < bfs.order.size(); ++i) label[bfs.order[i]] = i + 1;
    for (std::size_t i = r; i < bfs.order.size(); ++i) {
        const VertexId v = bfs.order[i];
        if (label[tree.parent(v)] <= r) out.push_back(v);
    }
    return out;
}

std::vector<VertexId> migrants_regrow(const ContinuousTree& tree, std::uint64_t r) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    const auto& shape = tree.shape();
    const auto order = tree.death_order();
    std::vector<char> removed(shape.size(), 0);
    std::vector<VertexId> out, present;
    for (;;) {
        bool overflow = false;
        std::uint64_t alive = 1;
        for (VertexId v : order) {
            if (removed[v]) continue;
            present.clear();
            for (VertexId c : shape.children(v))
                if (!removed[c]) present.push_back(c);
            alive = alive + present.size() - 1;
            if (alive > r) {
                const std::size_t m = static_cast<std::size_t>(alive - r);
                for (std::size_t i = present.size() - m; i < present.size(); ++i) {
                    const VertexId u = present[i];
                    out.push_back(u);
                    std::fill(removed.begin() + u, removed.begin() + u + shape.subtree_size(u), 1);
                }
                overflow = true;
                break;
            }
        }
        if (!overflow) return out;
    }
}

namespace {

std::uint64_t pruned_size(const DiscreteTree& shape, const std::vector<VertexId>& migrants) {
    std::uint64_t n = shape.size();
    for (VertexId m : migrants) n -= shape.subtree_size(m);
    return n;
}

void sort_by_address(IslesTree& t) {
    std::sort(t.nodes.begin(), t.nodes.end(),
              [](const IslandNode& a, const IslandNode& b) { return a.address < b.address; });
}

} // namespace

IslesTree build_tree_of_isles(const DiscreteTree& tree, std::uint64_t r) {
    IslesTree out;
    std::vector<std::pair<UlamHarrisAddress, DiscreteTree>> work;
    work.emplace_back(UlamHarrisAddress{}, tree);
    while (!work.empty()) {
        auto [addr, t] = std::move(work.back());
        work.pop_back();
        const auto migrants = migrants_fossil(t, r);
        out.nodes.push_back({addr, pruned_size(t, migrants)});
        for (std::size_t i = 0; i < migrants.size(); ++i)
            work.emplace_back(addr.child(static_cast<std::uint32_t>(i + 1)), t.subtree(migrants[i]));
    }
    sort_by_address(out);
    return out;
}

IslesTree build_tree_of_isles(const ContinuousTree& tree, std::uint64_t r, Model model) {
    if (model == Model::fossil) return build_tree_of_isles(tree.shape(), r);
    IslesTree out;
    std::vector<std::pair<UlamHarrisAddress, ContinuousTree>> work;
    work.emplace_back(UlamHarrisAddress{}, tree);
    while (!work.empty()) {
        auto [addr, t] = std::move(work.back());
        work.pop_back();
        const auto migrants = migrants_regrow(t, r);
        out.nodes.push_back({addr, pruned_size(t.shape(), migrants)});
        for (std::size_t i = 0; i < migrants.size(); ++i)
            work.emplace_back(addr.child(static_cast<std::uint32_t>(i + 1)), t.subtree(migrants[i]));
    }
    sort_by_address(out);
    return out;
}

PopCol pop_col_direct(const DiscreteTree& tree, std::uint64_t r) {
    const auto m = migrants_fossil(tree, r);
    return {pruned_size(tree, m), m.size()};
}

PopCol pop_col_direct(const ContinuousTree& tree, std::uint64_t r, Model model) {
    if (model == Model::fossil) return pop_col_direct(tree.shape(), r);
    const auto m = migrants_regrow(tree, r);
    return {pruned_size(tree.shape(), m), m.size()};
}

PopCol pop_col_fossil_walk(const ExplorationWalk& walk, std::uint64_t r) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    const std::uint64_t s = walk.hitting_time();
    const std::uint64_t n = std::min(s, r);
    return {n, static_cast<std::uint64_t>(1 + walk.steps[n])};
}

RegrowStretches regrow_stretches(const ExplorationWalk& walk, std::uint64_t r) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    const auto& S = walk.steps;
    const std::size_t s = walk.hitting_time();
    const auto level = static_cast<std::int64_t>(r) - 1;
    RegrowStretches out;
    std::size_t sigma = 0;
    for (;;) {
        std::size_t vs = sigma + 1;
        while (vs < s && S[vs] <= level) ++vs;
        out.lengths.push_back(vs - sigma);
        if (vs >= s) break;
        out.overshoots.push_back(static_cast<std::uint64_t>(S[vs] - level));
        sigma = vs + 1;
        while (sigma < s && S[sigma] != level) ++sigma;
        if (sigma >= s) throw std::logic_error("walk left level r-1 without returning to it");
    }
    return out;
}

PopCol pop_col_regrow_walk(const ExplorationWalk& walk, std::uint64_t r) {
    const auto st = regrow_stretches(walk, r);
    PopCol pc;
    for (auto l : st.lengths) pc.population += l;
    for (auto o : st.overshoots) pc.colonies += o;
    return pc;
}

void write_isles_json(std::ostream& os, const IslesTree& isles) {
    os << '[';
    for (std::size_t i = 0; i < isles.nodes.size(); ++i) {
        if (i) os << ',';
        os << "{\"address\":[";
        const auto& p = isles.nodes[i].address.path();
        for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
        os << "],\"population\":" << isles.nodes[i].population << '}';
    }
    os << "]\n";
}

} // namespace isleforge
