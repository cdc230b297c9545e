#include "isleforge/empirical.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "isleforge/parallel.hpp"

namespace isleforge {

namespace {

// Fair +-1 steps taken b at a time from one 64-bit word.
class BitBlocks {
public:
    explicit BitBlocks(RandomStream& rng) : rng_(rng) {}
    // Sum of b fair +-1 steps, 1 <= b <= 64.
    std::int64_t steps(int b) {
        if (n_ < b) {
            w_ = rng_();
            n_ = 64;
        }
        const std::uint64_t v = b == 64 ? w_ : (w_ & ((std::uint64_t{1} << b) - 1));
        w_ = b == 64 ? 0 : (w_ >> b);
        n_ -= b;
        return 2 * std::popcount(v) - b;
    }

private:
    RandomStream& rng_;
    std::uint64_t w_ = 0;
    int n_ = 0;
};

} // namespace

IslandDraw simulate_island_fossil(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                                  std::uint64_t max_steps) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    IslandDraw d;
    std::int64_t s = 0;
    if (law.kind() == LawKind::binary_half) {
        BitBlocks bits(rng);
        // Blocks of at most s steps cannot reach -1.
        while (d.steps < r) {
            if (d.steps >= max_steps) {
                d.overflow = true;
                return d;
            }
            const auto b = static_cast<int>(std::min<std::uint64_t>(
                {64, static_cast<std::uint64_t>(std::max<std::int64_t>(s, 1)), r - d.steps, max_steps - d.steps}));
            s += bits.steps(b);
            d.steps += static_cast<std::uint64_t>(b);
            if (s < 0) break;
        }
    } else {
        while (d.steps < r) {
            if (d.steps >= max_steps) {
                d.overflow = true;
                return d;
            }
            s += static_cast<std::int64_t>(law.sample(rng)) - 1;
            ++d.steps;
            if (s < 0) break;
        }
    }
    d.population = d.steps;
    d.colonies = s < 0 ? 0 : static_cast<std::uint64_t>(1 + s);
    return d;
}

IslandDraw simulate_island_regrow(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                                  std::uint64_t max_steps, std::int64_t start) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    const auto top = static_cast<std::int64_t>(r) - 1;
    if (start < 0 || start > top) throw std::invalid_argument("start must lie in [0, r-1]");
    IslandDraw d;
    std::int64_t y = start;
    if (law.kind() == LawKind::binary_half) {
        BitBlocks bits(rng);
        for (;;) {
            if (d.steps >= max_steps) {
                d.overflow = true;
                break;
            }
            const auto left = static_cast<std::int64_t>(std::min<std::uint64_t>(max_steps - d.steps, 64));
            const std::int64_t b = std::min<std::int64_t>({left, y, top - y});
            if (b >= 1) {
                y += bits.steps(static_cast<int>(b));
                d.steps += static_cast<std::uint64_t>(b);
                continue;
            }
            y += bits.steps(1);
            ++d.steps;
            if (y < 0) break;
            if (y > top) {
                ++d.colonies;
                y = top;
            }
        }
    } else {
        for (;;) {
            if (d.steps >= max_steps) {
                d.overflow = true;
                break;
            }
            y += static_cast<std::int64_t>(law.sample(rng)) - 1;
            ++d.steps;
            if (y < 0) break;
            if (y > top) {
                d.colonies += static_cast<std::uint64_t>(y - top);
                y = top;
            }
        }
    }
    d.population = d.steps;
    return d;
}

bool walk_survives(const OffspringLaw& law, std::uint64_t n, RandomStream& rng) {
    if (n == 0) return true;
    return simulate_island_fossil(law, n, rng).colonies > 0;
}

bool walk_exceeds_before_extinction(const OffspringLaw& law, std::int64_t level, RandomStream& rng) {
    if (level < 0) return true;
    std::int64_t s = 0;
    for (;;) {
        s += static_cast<std::int64_t>(law.sample(rng)) - 1;
        if (s < 0) return false;
        if (s > level) return true;
    }
}

std::uint64_t ZTable::generation_total(std::uint32_t generation) const {
    std::uint64_t total = 0;
    for (auto it = counts.lower_bound({generation, 0}); it != counts.end() && it->first.first == generation; ++it)
        total += it->second;
    return total;
}

std::uint64_t rescaled_threshold(Model model, double c, std::uint64_t N) {
    if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
    const double n = static_cast<double>(N);
    const double r = std::floor(model == Model::fossil ? c * n * n : c * n);
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(r));
}

ReplicateResult simulate_forest(const SimulationOptions& o, std::uint64_t master_seed, std::uint64_t replicate) {
    if (o.N < 1) throw std::invalid_argument("N must be at least 1");
    if (o.r < 1) throw std::invalid_argument("r must be at least 1");
    for (const auto& f : o.fns) f.validate();
    ReplicateResult out;
    auto& sum = out.summary;
    sum.master_seed = master_seed;
    sum.replicate_index = replicate;
    sum.N = o.N;
    sum.r = o.r;
    sum.model = o.model;
    sum.integrals.assign(o.fns.size(), 0.0);

    const RandomStream base = RandomStream::for_replicate(master_seed, replicate);
    const double scale = 1.0 / (static_cast<double>(o.N) * static_cast<double>(o.N));
    struct Pending {
        std::uint64_t parent;
        std::uint32_t generation;
    };
    std::deque<Pending> queue;
    for (std::uint64_t i = 0; i < o.root_count(); ++i) queue.push_back({IslandRecord::kNoParent, 0});

    for (std::uint64_t k = 0; !queue.empty(); ++k) {
        const Pending job = queue.front();
        queue.pop_front();
        RandomStream rng = base.split(k);
        const std::uint64_t left = o.step_cap - sum.steps;
        const IslandDraw d = o.model == Model::fossil ? simulate_island_fossil(o.law, o.r, rng, left)
                                                      : simulate_island_regrow(o.law, o.r, rng, left);
        sum.steps += d.steps;
        if (d.overflow) {
            sum.overflow = true;
            break;
        }
        ++sum.islands;
        if (d.colonies > 0) ++sum.fertile;
        const double atom = static_cast<double>(d.population) * scale;
        bool saturated = o.saturation > 0.0 && !o.fns.empty();
        for (std::size_t j = 0; j < o.fns.size(); ++j) {
            sum.integrals[j] += o.fns[j](atom);
            saturated = saturated && sum.integrals[j] >= o.saturation;
        }
        if (o.keep_atoms) out.measure.atoms.push_back(atom);
        if (o.keep_ztable) ++out.ztable.counts[{job.generation, d.population}];
        if (o.keep_islands) out.islands.push_back({job.parent, job.generation, d.population, d.colonies});
        if (saturated) {
            sum.saturated = true;
            break;
        }
        if (job.generation < o.max_generation)
            for (std::uint64_t c = 0; c < d.colonies; ++c) queue.push_back({k, job.generation + 1});
    }
    return out;
}

std::vector<ReplicateResult> run_replicates(const SimulationOptions& options, std::uint64_t master_seed,
                                            std::uint64_t first, std::uint64_t count, unsigned workers) {
    std::vector<ReplicateResult> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = simulate_forest(options, master_seed, first + i); });
    return out;
}

namespace {

struct ForestIndex {
    std::vector<std::vector<std::uint64_t>> children;
    std::vector<std::uint64_t> roots;
};

void rank_children(std::vector<std::uint64_t>& ids, const std::vector<IslandRecord>& islands) {
    std::stable_sort(ids.begin(), ids.end(), [&](std::uint64_t a, std::uint64_t b) {
        const auto& x = islands[a];
        const auto& y = islands[b];
        if (x.population != y.population) return x.population > y.population;
        if (x.colonies != y.colonies) return x.colonies > y.colonies;
        return a < b;
    });
}

void build_prefix(PrefixNode& node, const std::vector<std::uint64_t>& ids, const ForestIndex& index,
                  const std::vector<IslandRecord>& islands, double pop_scale, double fert_scale,
                  std::size_t depth, std::size_t width) {
    if (depth == 0) return;
    for (std::size_t i = 0; i < ids.size() && i < width; ++i) {
        const auto& isl = islands[ids[i]];
        PrefixNode child{static_cast<double>(isl.population) * pop_scale,
                         static_cast<double>(isl.colonies) * fert_scale,
                         {}};
        build_prefix(child, index.children[ids[i]], index, islands, pop_scale, fert_scale, depth - 1, width);
        node.children.push_back(std::move(child));
    }
}

} // namespace

PrefixNode reorder_forest(const std::vector<IslandRecord>& islands, std::uint64_t N, std::uint64_t r,
                          std::size_t depth, std::size_t width) {
    if (depth < 1 || width < 1) throw std::invalid_argument("depth and width must be at least 1");
    const double n = static_cast<double>(N);
    ForestIndex index;
    index.children.resize(islands.size());
    for (std::uint64_t i = 0; i < islands.size(); ++i) {
        const auto p = islands[i].parent;
        if (p == IslandRecord::kNoParent)
            index.roots.push_back(i);
        else
            index.children.at(p).push_back(i);
    }
    rank_children(index.roots, islands);
    for (auto& c : index.children) rank_children(c, islands);
    PrefixNode root{static_cast<double>(r) / (n * n), 1.0, {}};
    build_prefix(root, index.roots, index, islands, 1.0 / (n * n), 1.0 / n, depth, width);
    return root;
}

} // namespace isleforge
