#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isleforge/random.hpp"

namespace isleforge {

class UlamHarrisAddress {
public:
    UlamHarrisAddress() = default;
    UlamHarrisAddress(std::initializer_list<std::uint32_t> path) : path_(path) {}
    explicit UlamHarrisAddress(std::vector<std::uint32_t> path) : path_(std::move(path)) {}

    bool is_root() const { return path_.empty(); }
    std::size_t generation() const { return path_.size(); }
    UlamHarrisAddress parent() const;
    UlamHarrisAddress child(std::uint32_t j) const;
    const std::vector<std::uint32_t>& path() const { return path_; }
    std::string to_string() const;

    // Lexicographic order is the depth-first order of the universal tree.
    auto operator<=>(const UlamHarrisAddress&) const = default;
    bool operator==(const UlamHarrisAddress&) const = default;

private:
    std::vector<std::uint32_t> path_;
};

enum class LawKind { geometric_half, poisson_one, binary_half, custom_pmf };

// Critical offspring law. Infinite supports are stored truncated where the
// remaining tail is below 1e-17.
class OffspringLaw {
public:
    static OffspringLaw geometric_half();
    static OffspringLaw poisson_one();
    static OffspringLaw binary_half();
    static OffspringLaw custom(std::vector<double> pmf);
    static OffspringLaw from_name(const std::string& name);

    LawKind kind() const { return kind_; }
    std::string name() const;
    const std::vector<double>& pmf() const { return pmf_; }
    double sigma2() const { return sigma2_; }

    std::uint32_t sample(RandomStream& rng) const {
        switch (kind_) {
        case LawKind::geometric_half: return sample_geometric(rng);
        case LawKind::binary_half: return rng.bit() ? 2u : 0u;
        default: return sample_table(rng, cdf_);
        }
    }

    // Draw from the size-biased law k * pmf(k) (a pmf because the mean is 1).
    std::uint32_t sample_size_biased(RandomStream& rng) const;

private:
    OffspringLaw(LawKind kind, std::vector<double> pmf);

    static std::uint32_t sample_geometric(RandomStream& rng) {
        std::uint32_t k = 0;
        for (;;) {
            const std::uint64_t w = rng();
            if (w != 0) return k + static_cast<std::uint32_t>(std::countr_zero(w));
            k += 64;
        }
    }
    static std::uint32_t sample_table(RandomStream& rng, const std::vector<double>& cdf);

    LawKind kind_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
    std::vector<double> biased_cdf_;
    double sigma2_ = 0.0;
};

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = ~VertexId{0};

// Finite plane tree stored as child counts in depth-first (lexicographic)
// order. Vertex ids are depth-first ranks; the subtree of v occupies the
// contiguous id range [v, v + subtree_size(v)).
class DiscreteTree {
public:
    DiscreteTree() : DiscreteTree(std::vector<std::uint32_t>{0}) {}
    explicit DiscreteTree(std::vector<std::uint32_t> preorder_child_counts);

    // Builds from an address set; throws if not parent-closed or if the
    // children of a vertex are not exactly 1..k.
    static DiscreteTree from_addresses(std::vector<UlamHarrisAddress> addresses);

    std::size_t size() const { return counts_.size(); }
    std::uint32_t child_count(VertexId v) const { return counts_[v]; }
    const std::vector<std::uint32_t>& child_counts() const { return counts_; }
    std::span<const VertexId> children(VertexId v) const {
        return {children_.data() + child_begin_[v], counts_[v]};
    }
    VertexId parent(VertexId v) const { return parent_[v]; }
    std::uint32_t depth(VertexId v) const { return depth_[v]; }
    std::uint32_t subtree_size(VertexId v) const { return subtree_[v]; }
    // j such that v = parent(v) j in Ulam-Harris notation; 0 for the root.
    std::uint32_t child_rank(VertexId v) const { return rank_[v]; }
    bool is_ancestor(VertexId a, VertexId d) const { return a < d && d < a + subtree_[a]; }

    UlamHarrisAddress address(VertexId v) const;
    std::optional<VertexId> find(const UlamHarrisAddress& u) const;

    // Copy of the subtree rooted at v, re-rooted.
    DiscreteTree subtree(VertexId v) const;

    bool operator==(const DiscreteTree& o) const { return counts_ == o.counts_; }

private:
    std::vector<std::uint32_t> counts_;
    std::vector<VertexId> parent_;
    std::vector<std::uint32_t> depth_;
    std::vector<std::uint32_t> subtree_;
    std::vector<std::uint32_t> rank_;
    std::vector<std::uint32_t> child_begin_;
    std::vector<VertexId> children_;
};

// Plane tree with lifetimes. The root is born at 0 and every child is born
// at its parent's death.
class ContinuousTree {
public:
    ContinuousTree(DiscreteTree shape, std::vector<double> lifetimes);

    const DiscreteTree& shape() const { return shape_; }
    std::size_t size() const { return shape_.size(); }
    double lifetime(VertexId v) const { return lifetime_[v]; }
    double birth(VertexId v) const { return v == 0 ? 0.0 : death_[shape_.parent(v)]; }
    double death(VertexId v) const { return death_[v]; }
    const std::vector<double>& lifetimes() const { return lifetime_; }

    ContinuousTree subtree(VertexId v) const;

    // Vertex ids sorted by death time.
    std::vector<VertexId> death_order() const;

    // True when no two deaths coincide (births coincide with deaths by construction).
    bool events_distinct() const;

private:
    DiscreteTree shape_;
    std::vector<double> lifetime_;
    std::vector<double> death_;
};

using LifetimeSampler = std::function<double(RandomStream&)>;

std::size_t tree_size(const DiscreteTree& tree);

// Returns nullopt (overflow) when the tree would exceed max_vertices.
std::optional<DiscreteTree> sample_gw_tree(const OffspringLaw& law, RandomStream& rng,
                                           std::size_t max_vertices);

std::optional<ContinuousTree> sample_continuous_gw_tree(const OffspringLaw& law, double lifetime_mean,
                                                        RandomStream& rng, std::size_t max_vertices);

// Same with an arbitrary positive lifetime law.
std::optional<ContinuousTree> sample_continuous_gw_tree(const OffspringLaw& law,
                                                        const LifetimeSampler& lifetime,
                                                        RandomStream& rng, std::size_t max_vertices);

struct TreeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace isleforge
