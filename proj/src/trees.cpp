#include "isleforge/trees.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace isleforge {

UlamHarrisAddress UlamHarrisAddress::parent() const {
    if (path_.empty()) throw TreeError("root has no parent");
    return UlamHarrisAddress(std::vector<std::uint32_t>(path_.begin(), path_.end() - 1));
}

UlamHarrisAddress UlamHarrisAddress::child(std::uint32_t j) const {
    auto p = path_;
    p.push_back(j);
    return UlamHarrisAddress(std::move(p));
}

std::string UlamHarrisAddress::to_string() const {
    if (path_.empty()) return "()";
    std::string s = "(";
    for (std::size_t i = 0; i < path_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(path_[i]);
    }
    return s + ")";
}

// ---------------------------------------------------------------------------

OffspringLaw::OffspringLaw(LawKind kind, std::vector<double> pmf) : kind_(kind), pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw std::invalid_argument("offspring pmf is empty");
    double total = 0.0, mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        if (!(pmf_[k] >= 0.0)) throw std::invalid_argument("offspring pmf has a negative entry");
        total += pmf_[k];
        mean += static_cast<double>(k) * pmf_[k];
        second += static_cast<double>(k) * static_cast<double>(k) * pmf_[k];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("offspring pmf does not sum to 1");
    if (kind_ == LawKind::custom_pmf && std::abs(mean - 1.0) > 1e-9)
        throw std::invalid_argument("offspring law is not critical (mean != 1)");
    switch (kind_) {
    case LawKind::geometric_half: sigma2_ = 2.0; break;
    case LawKind::poisson_one:
    case LawKind::binary_half: sigma2_ = 1.0; break;
    case LawKind::custom_pmf: sigma2_ = second - mean * mean; break;
    }
    if (!(sigma2_ > 0.0)) throw std::invalid_argument("offspring variance must be positive");
    cdf_.resize(pmf_.size());
    std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
    cdf_.back() = 1.0;
    biased_cdf_.resize(pmf_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        acc += static_cast<double>(k) * pmf_[k];
        biased_cdf_[k] = acc / mean;
    }
    biased_cdf_.back() = 1.0;
}

OffspringLaw OffspringLaw::geometric_half() {
    std::vector<double> pmf;
    for (int k = 0; k < 60; ++k) pmf.push_back(std::ldexp(1.0, -(k + 1)));
    pmf.back() *= 2.0; // fold the tail into the last entry so the table sums to 1
    return OffspringLaw(LawKind::geometric_half, std::move(pmf));
}

OffspringLaw OffspringLaw::poisson_one() {
    std::vector<double> pmf;
    double p = std::exp(-1.0);
    for (int k = 0; k < 22; ++k) {
        pmf.push_back(p);
        p /= static_cast<double>(k + 1);
    }
    const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
    pmf.back() += 1.0 - total;
    return OffspringLaw(LawKind::poisson_one, std::move(pmf));
}

OffspringLaw OffspringLaw::binary_half() { return OffspringLaw(LawKind::binary_half, {0.5, 0.0, 0.5}); }

OffspringLaw OffspringLaw::custom(std::vector<double> pmf) {
    return OffspringLaw(LawKind::custom_pmf, std::move(pmf));
}

OffspringLaw OffspringLaw::from_name(const std::string& name) {
    if (name == "geometric-half") return geometric_half();
    if (name == "poisson-one") return poisson_one();
    if (name == "binary-half") return binary_half();
    throw std::invalid_argument("unknown offspring law '" + name + "'");
}

std::string OffspringLaw::name() const {
    switch (kind_) {
    case LawKind::geometric_half: return "geometric-half";
    case LawKind::poisson_one: return "poisson-one";
    case LawKind::binary_half: return "binary-half";
    case LawKind::custom_pmf: return "custom-pmf";
    }
    return "?";
}

std::uint32_t OffspringLaw::sample_table(RandomStream& rng, const std::vector<double>& cdf) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto k = static_cast<std::uint32_t>(it - cdf.begin());
    return std::min<std::uint32_t>(k, static_cast<std::uint32_t>(cdf.size() - 1));
}

std::uint32_t OffspringLaw::sample_size_biased(RandomStream& rng) const {
    switch (kind_) {
    case LawKind::geometric_half: return 1 + sample_geometric(rng) + sample_geometric(rng);
    case LawKind::binary_half: return 2;
    default: return sample_table(rng, biased_cdf_);
    }
}

// ---------------------------------------------------------------------------

DiscreteTree::DiscreteTree(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {
    const std::size_t n = counts_.size();
    if (n == 0) throw TreeError("a tree has at least one vertex");
    if (n >= kNoVertex) throw TreeError("tree too large");
    std::int64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s += static_cast<std::int64_t>(counts_[i]) - 1;
        if (s < 0 && i + 1 < n) throw TreeError("child counts close the tree early");
    }
    if (s != -1) throw TreeError("child counts do not describe a finite tree");

    parent_.assign(n, kNoVertex);
    depth_.assign(n, 0);
    subtree_.assign(n, 1);
    rank_.assign(n, 0);
    child_begin_.assign(n, 0);
    children_.assign(n > 0 ? n - 1 : 0, 0);

    std::uint32_t offset = 0;
    for (std::size_t v = 0; v < n; ++v) {
        child_begin_[v] = offset;
        offset += counts_[v];
    }
    std::vector<std::pair<VertexId, std::uint32_t>> stack; // (vertex, children still to place)
    for (VertexId v = 0; v < n; ++v) {
        if (v > 0) {
            auto& top = stack.back();
            const VertexId p = top.first;
            parent_[v] = p;
            rank_[v] = counts_[p] - top.second + 1;
            depth_[v] = depth_[p] + 1;
            children_[child_begin_[p] + rank_[v] - 1] = v;
            if (--top.second == 0) stack.pop_back();
        }
        if (counts_[v] > 0) stack.emplace_back(v, counts_[v]);
    }
    for (VertexId v = static_cast<VertexId>(n - 1); v > 0; --v) subtree_[parent_[v]] += subtree_[v];
}

DiscreteTree DiscreteTree::from_addresses(std::vector<UlamHarrisAddress> addresses) {
    std::sort(addresses.begin(), addresses.end());
    if (std::adjacent_find(addresses.begin(), addresses.end()) != addresses.end())
        throw TreeError("duplicate address");
    if (addresses.empty() || !addresses.front().is_root()) throw TreeError("tree must contain the root");
    std::map<UlamHarrisAddress, std::uint32_t> max_child, n_child;
    for (const auto& u : addresses) {
        if (u.is_root()) continue;
        const auto p = u.parent();
        if (!std::binary_search(addresses.begin(), addresses.end(), p))
            throw TreeError("address " + u.to_string() + " has no parent in the tree");
        const std::uint32_t j = u.path().back();
        if (j == 0) throw TreeError("address entries are positive");
        max_child[p] = std::max(max_child[p], j);
        ++n_child[p];
    }
    std::vector<std::uint32_t> counts;
    counts.reserve(addresses.size());
    for (const auto& u : addresses) {
        const auto it = max_child.find(u);
        const std::uint32_t k = it == max_child.end() ? 0 : it->second;
        if (k != (it == max_child.end() ? 0 : n_child[u]))
            throw TreeError("children of " + u.to_string() + " are not numbered 1..k");
        counts.push_back(k);
    }
    return DiscreteTree(std::move(counts));
}

UlamHarrisAddress DiscreteTree::address(VertexId v) const {
    std::vector<std::uint32_t> path(depth_[v]);
    for (std::size_t i = path.size(); i > 0; --i) {
        path[i - 1] = rank_[v];
        v = parent_[v];
    }
    return UlamHarrisAddress(std::move(path));
}

std::optional<VertexId> DiscreteTree::find(const UlamHarrisAddress& u) const {
    VertexId v = 0;
    for (std::uint32_t j : u.path()) {
        if (j == 0 || j > counts_[v]) return std::nullopt;
        v = children(v)[j - 1];
    }
    return v;
}

DiscreteTree DiscreteTree::subtree(VertexId v) const {
    return DiscreteTree(std::vector<std::uint32_t>(counts_.begin() + v, counts_.begin() + v + subtree_[v]));
}

// ---------------------------------------------------------------------------

ContinuousTree::ContinuousTree(DiscreteTree shape, std::vector<double> lifetimes)
    : shape_(std::move(shape)), lifetime_(std::move(lifetimes)) {
    if (lifetime_.size() != shape_.size()) throw TreeError("one lifetime per vertex is required");
    death_.resize(lifetime_.size());
    for (VertexId v = 0; v < lifetime_.size(); ++v) {
        if (!(lifetime_[v] > 0.0) || !std::isfinite(lifetime_[v])) throw TreeError("lifetimes must be positive");
        death_[v] = birth(v) + lifetime_[v];
    }
}

ContinuousTree ContinuousTree::subtree(VertexId v) const {
    const auto n = shape_.subtree_size(v);
    return ContinuousTree(shape_.subtree(v),
                          std::vector<double>(lifetime_.begin() + v, lifetime_.begin() + v + n));
}

std::vector<VertexId> ContinuousTree::death_order() const {
    std::vector<VertexId> order(size());
    std::iota(order.begin(), order.end(), VertexId{0});
    std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
        return death_[a] < death_[b] || (death_[a] == death_[b] && a < b);
    });
    return order;
}

bool ContinuousTree::events_distinct() const {
    const auto order = death_order();
    for (std::size_t i = 1; i < order.size(); ++i)
        if (death_[order[i]] == death_[order[i - 1]]) return false;
    return true;
}

// ---------------------------------------------------------------------------

std::size_t tree_size(const DiscreteTree& tree) { return tree.size(); }

std::optional<DiscreteTree> sample_gw_tree(const OffspringLaw& law, RandomStream& rng,
                                           std::size_t max_vertices) {
    if (max_vertices < 1) throw std::invalid_argument("max_vertices must be at least 1");
    // Depth-first child counts of a GW tree are i.i.d. until their walk hits -1.
    std::vector<std::uint32_t> counts;
    std::int64_t s = 0;
    for (;;) {
        const std::uint32_t k = law.sample(rng);
        counts.push_back(k);
        s += static_cast<std::int64_t>(k) - 1;
        if (s < 0) break;
        if (counts.size() >= max_vertices) return std::nullopt;
    }
    return DiscreteTree(std::move(counts));
}

std::optional<ContinuousTree> sample_continuous_gw_tree(const OffspringLaw& law,
                                                        const LifetimeSampler& lifetime,
                                                        RandomStream& rng, std::size_t max_vertices) {
    auto shape = sample_gw_tree(law, rng, max_vertices);
    if (!shape) return std::nullopt;
    const std::size_t n = shape->size();
    std::vector<double> life(n);
    for (auto& x : life) {
        do x = lifetime(rng);
        while (!(x > 0.0));
    }
    for (;;) {
        ContinuousTree tree(*shape, life);
        const auto order = tree.death_order();
        bool tie = false;
        for (std::size_t i = 1; i < order.size(); ++i) {
            if (tree.death(order[i]) == tree.death(order[i - 1])) {
                const VertexId v = std::max(order[i], order[i - 1]);
                do life[v] = lifetime(rng);
                while (!(life[v] > 0.0));
                tie = true;
            }
        }
        if (!tie) return tree;
    }
}

std::optional<ContinuousTree> sample_continuous_gw_tree(const OffspringLaw& law, double lifetime_mean,
                                                        RandomStream& rng, std::size_t max_vertices) {
    if (!(lifetime_mean > 0.0)) throw std::invalid_argument("lifetime_mean must be positive");
    return sample_continuous_gw_tree(
        law, [lifetime_mean](RandomStream& g) { return g.exponential(lifetime_mean); }, rng, max_vertices);
}

} // namespace isleforge
