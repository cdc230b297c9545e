#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "isleforge/isles.hpp"
#include "isleforge/measure.hpp"
#include "isleforge/random.hpp"
#include "isleforge/trees.hpp"

namespace isleforge {

inline constexpr std::uint64_t kUnlimitedSteps = std::numeric_limits<std::uint64_t>::max();

// One island drawn from its exploration walk. `steps` is the number of walk
// steps taken; `overflow` means max_steps ran out first.
struct IslandDraw {
    std::uint64_t population = 0;
    std::uint64_t colonies = 0;
    std::uint64_t steps = 0;
    bool overflow = false;
};

// Model 1: min(tau, r) steps; colonies 1 + S_r when the walk outlives r.
IslandDraw simulate_island_fossil(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                                  std::uint64_t max_steps = kUnlimitedSteps);

// Model 2: steps taken from heights <= r-1 make the population; each
// excursion above r-1 adds its overshoot to the colonies and the walk resumes
// at r-1 (the migrants' subtrees are explored elsewhere). `start` is the
// initial height, 0 for a founder.
IslandDraw simulate_island_regrow(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                                  std::uint64_t max_steps = kUnlimitedSteps, std::int64_t start = 0);

// True when the walk from 0 survives n steps (tau > n).
bool walk_survives(const OffspringLaw& law, std::uint64_t n, RandomStream& rng);

// True when the walk from 0 exceeds level before hitting -1.
bool walk_exceeds_before_extinction(const OffspringLaw& law, std::int64_t level, RandomStream& rng);

struct ZTable {
    // (generation, population) -> number of islands
    std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> counts;

    std::uint64_t generation_total(std::uint32_t generation) const;
};

struct IslandRecord {
    static constexpr std::uint64_t kNoParent = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t parent = kNoParent;
    std::uint32_t generation = 0;
    std::uint64_t population = 0;
    std::uint64_t colonies = 0;
};

struct SimulationOptions {
    Model model = Model::fossil;
    OffspringLaw law = OffspringLaw::geometric_half();
    std::uint64_t N = 1;
    std::uint64_t r = 1;
    std::uint64_t step_cap = 100'000'000;
    // Root islands; 0 means N.
    std::uint64_t roots = 0;
    // Islands deeper than this are not simulated.
    std::uint32_t max_generation = std::numeric_limits<std::uint32_t>::max();
    std::vector<TestFunction> fns;
    // Stop once every integral reaches this value (0 disables).
    double saturation = 0.0;
    bool keep_atoms = false;
    bool keep_ztable = false;
    bool keep_islands = false;

    std::uint64_t root_count() const { return roots == 0 ? N : roots; }
};

struct ReplicateSummary {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate_index = 0;
    std::uint64_t N = 0;
    std::uint64_t r = 0;
    Model model = Model::fossil;
    std::vector<double> integrals;
    std::uint64_t islands = 0;
    std::uint64_t fertile = 0;
    bool overflow = false;
    bool saturated = false;
    std::uint64_t steps = 0;
};

struct ReplicateResult {
    ReplicateSummary summary;
    RescaledPointMeasure measure;
    ZTable ztable;
    // FIFO order; roots first.
    std::vector<IslandRecord> islands;
};

// r_N for the given model: floor(c N^2) (fossil) or floor(c N) (regrow).
std::uint64_t rescaled_threshold(Model model, double c, std::uint64_t N);

// One replicate. Islands are processed first-in first-out; island k uses
// stream k of the replicate stream, so results do not depend on threads.
ReplicateResult simulate_forest(const SimulationOptions& options, std::uint64_t master_seed,
                                std::uint64_t replicate);

std::vector<ReplicateResult> run_replicates(const SimulationOptions& options, std::uint64_t master_seed,
                                            std::uint64_t first, std::uint64_t count, unsigned workers);

// Islands ranked under a virtual root (population r/N^2, fertility 1):
// children by population descending, then fertility descending, then index.
PrefixNode reorder_forest(const std::vector<IslandRecord>& islands, std::uint64_t N, std::uint64_t r,
                          std::size_t depth, std::size_t width);

} // namespace isleforge
