#include "isleforge/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>

#include "isleforge/cumulant.hpp"
#include "isleforge/empirical.hpp"
#include "isleforge/exploration.hpp"
#include "isleforge/isles.hpp"
#include "isleforge/limits.hpp"
#include "isleforge/output.hpp"
#include "isleforge/stats.hpp"

namespace isleforge {

namespace {

// Sample sizes and tolerances.
constexpr std::size_t kA1Trees = 10'000;
constexpr std::size_t kOracleTrees = 10'000;
constexpr std::size_t kOracleMaxVertices = 2'000;
constexpr std::uint64_t kA4Trees = 1'000'000;
constexpr std::size_t kA5Trees = 10'000;
constexpr std::uint64_t kA5Threshold = 5;
constexpr std::uint64_t kA6N = 100;
constexpr std::uint64_t kA6Walks = 1'000'000;
constexpr std::uint64_t kA7Level = 10'000;
constexpr std::size_t kA7Samples = 10'000;
constexpr std::uint64_t kA8N = 100;
constexpr std::uint64_t kA8Replicates = 10'000;
constexpr std::uint64_t kA9Level = 2'000;
constexpr std::uint64_t kA9Walks = 1'000'000;
constexpr std::uint64_t kPoolNRef = 2'000;
constexpr std::size_t kPoolSize = 100'000;
constexpr std::uint64_t kA11Level = 10'000;
constexpr std::size_t kA11Cycles = 20'000;
constexpr std::uint64_t kA12N = 200;
constexpr std::uint64_t kA12Replicates = 1'000'000;
constexpr std::uint64_t kA12EtaDraws = 1'000'000;
constexpr double kA12Saturation = 50.0;
constexpr double kA12SupportMin = 0.01;
constexpr std::uint64_t kA13N = 500;
constexpr std::uint64_t kA13Replicates = 2'000;
constexpr std::size_t kA13Permutations = 1'000;
constexpr std::size_t kA14Draws = 10'000;
constexpr std::size_t kA14CountRuns = 100'000;
constexpr std::size_t kA14Permutations = 1'000;
constexpr std::size_t kA16Trials = 100;

constexpr double kRelTolerance = 0.10;       // A6, A8, A9, A12
constexpr double kLaplaceAllowance = 0.05;   // A10, A16
constexpr double kOvershootTolerance = 0.05; // A11
constexpr double kKsThreshold = 0.01;
constexpr double kCountThreshold = 0.001;
constexpr double kNullAcceptRate = 0.95;

using Clock = std::chrono::steady_clock;

std::string fmt(double x, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

// |est - target| <= 3 se + rel |target|
bool within(double est, double se, double target, double rel) {
    return std::abs(est - target) <= 3.0 * se + rel * std::abs(target);
}

std::string estimate_text(double est, double se, double target) {
    return fmt(est) + " +- " + fmt(se, 2) + " vs " + fmt(target);
}

std::pair<double, double> mean_se(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double m = 0.0;
    for (double v : x) m += v;
    m /= n;
    double s2 = 0.0;
    for (double v : x) s2 += (v - m) * (v - m);
    return {m, x.size() > 1 ? std::sqrt(s2 / (n - 1.0) / n) : 0.0};
}

struct Context {
    AcceptanceOptions opt;
    std::optional<PCPool> pool;
    std::optional<std::vector<double>> fertile_counts;

    LimitParams params(double c, double sigma2) const {
        return {c, sigma2, opt.double_lambda ? 2.0 : 1.0};
    }

    RandomStream stream(std::uint64_t tag, std::uint64_t id = 0) const {
        return RandomStream(splitmix64(opt.seed ^ splitmix64(tag)), id);
    }

    // Model-2 (P, C) pool: binary-half walks at N_ref, c = sigma = 1.
    const PCPool& pc_pool() {
        if (!pool) {
            PCMethod m;
            m.n_ref = kPoolNRef;
            m.law = OffspringLaw::binary_half();
            pool = build_pc_pool(LimitParams{1.0, 1.0, 1.0}, m, kPoolSize, opt.seed ^ 0xa10, opt.workers);
        }
        return *pool;
    }

    // Fertile root islands per fossil replicate at N = 100, c = 1, geometric-half.
    const std::vector<double>& fertile() {
        if (!fertile_counts) {
            SimulationOptions s;
            s.model = Model::fossil;
            s.law = OffspringLaw::geometric_half();
            s.N = kA8N;
            s.r = rescaled_threshold(Model::fossil, 1.0, kA8N);
            s.max_generation = 0;
            fertile_counts.emplace();
            fertile_counts->reserve(kA8Replicates);
            constexpr std::uint64_t chunk = 1000;
            for (std::uint64_t first = 0; first < kA8Replicates; first += chunk) {
                const auto reps = run_replicates(s, opt.seed ^ 0xa8, first, std::min(chunk, kA8Replicates - first),
                                                 opt.workers);
                for (const auto& r : reps) fertile_counts->push_back(static_cast<double>(r.summary.fertile));
            }
        }
        return *fertile_counts;
    }
};

ContinuousTree sample_capped_tree(const OffspringLaw& law, double mean_life, std::size_t cap, RandomStream& rng) {
    for (;;)
        if (auto t = sample_continuous_gw_tree(law, mean_life, rng, cap)) return std::move(*t);
}

// ---------------------------------------------------------------------------

CriterionResult a1(Context& ctx) {
    CriterionResult res{"A1", "walk hitting time equals tree size", false, "", 0, {}};
    auto rng = ctx.stream(1);
    const auto law = OffspringLaw::geometric_half();
    std::size_t mismatches = 0, walks = 0;
    for (std::size_t i = 0; i < kA1Trees; ++i) {
        const auto t = sample_capped_tree(law, 1.0, 100'000, rng);
        const auto& shape = t.shape();
        for (const auto& lab : {label_bfs(shape), label_dfs(shape), label_death_first(t)}) {
            ++walks;
            if (exploration_walk(shape, lab).hitting_time() != shape.size()) ++mismatches;
        }
    }
    res.pass = mismatches == 0;
    res.detail = std::to_string(walks) + " walks (BFS, depth-first, death-first), " + std::to_string(mismatches) +
                 " mismatches";
    res.data = {{"walks", walks}, {"mismatches", mismatches}};
    return res;
}

CriterionResult oracle(Context& ctx, bool regrow) {
    CriterionResult res{regrow ? "A3" : "A2",
                        regrow ? "model-2 walk formula equals direct isles" : "model-1 walk formula equals direct isles",
                        false, "", 0, {}};
    auto rng = ctx.stream(regrow ? 3 : 2);
    const auto law = OffspringLaw::geometric_half();
    std::size_t mismatches = 0, checks = 0;
    for (std::size_t i = 0; i < kOracleTrees; ++i) {
        const auto t = sample_capped_tree(law, 1.0, kOracleMaxVertices, rng);
        for (std::uint64_t r : {1, 2, 5, 20}) {
            ++checks;
            PopCol walk, direct;
            if (regrow) {
                walk = pop_col_regrow_walk(exploration_walk(t.shape(), label_regrow(t, r)), r);
                direct = pop_col_direct(t, r, Model::regrow);
            } else {
                walk = pop_col_fossil_walk(exploration_walk(t.shape(), label_bfs(t.shape())), r);
                direct = pop_col_direct(t.shape(), r);
            }
            if (!(walk == direct)) ++mismatches;
        }
    }
    res.pass = mismatches == 0;
    res.detail = std::to_string(checks) + " (tree, r) pairs, r in {1,2,5,20}, " + std::to_string(mismatches) +
                 " mismatches";
    res.data = {{"checks", checks}, {"mismatches", mismatches}};
    return res;
}

CriterionResult a4(Context& ctx) {
    CriterionResult res{"A4", "total progeny law (geometric-half)", true, "", 0, {}};
    auto rng = ctx.stream(4);
    const auto law = OffspringLaw::geometric_half();
    std::uint64_t hits[4] = {0, 0, 0, 0};
    for (std::uint64_t i = 0; i < kA4Trees; ++i)
        if (auto t = sample_gw_tree(law, rng, 3)) ++hits[t->size()];
    const double target[4] = {0.0, 0.5, 0.125, 0.0625};
    const double n = static_cast<double>(kA4Trees);
    for (int k = 1; k <= 3; ++k) {
        const double f = static_cast<double>(hits[k]) / n;
        const double se = std::sqrt(target[k] * (1.0 - target[k]) / n);
        const bool ok = within(f, se, target[k], 0.0);
        res.pass = res.pass && ok;
        res.detail += "P(" + std::to_string(k) + ")=" + fmt(f, 5) + (k < 3 ? ", " : "");
        res.data["p" + std::to_string(k)] = f;
    }
    res.detail += " vs 1/2, 1/8, 1/16 (3 SE, 1e6 trees)";
    return res;
}

CriterionResult a5(Context& ctx) {
    CriterionResult res{"A5", "lifetime invariance of (P_r, C_r)", false, "", 0, {}};
    const auto law = OffspringLaw::geometric_half();
    std::vector<std::vector<double>> samples[2];
    for (int k = 0; k < 2; ++k) {
        auto rng = ctx.stream(5, static_cast<std::uint64_t>(k));
        const double mean = k == 0 ? 1.0 : 5.0;
        for (std::size_t i = 0; i < kA5Trees; ++i) {
            const auto t = sample_capped_tree(law, mean, kOracleMaxVertices, rng);
            const auto pc = pop_col_direct(t, kA5Threshold, Model::regrow);
            samples[k].push_back({static_cast<double>(pc.population), static_cast<double>(pc.colonies)});
        }
    }
    const auto rep = fdd_compare(samples[0], samples[1], 1000, ctx.opt.seed ^ 0xa5, kKsThreshold);
    res.pass = rep.pass;
    res.detail = "model 2, r=5, lifetime means 1 vs 5: " + rep.detail;
    res.data = {{"min_adjusted_p", rep.p_value}};
    return res;
}

CriterionResult a6(Context& ctx) {
    CriterionResult res{"A6", "tail constant N P(tau > N^2)", false, "", 0, {}};
    auto rng = ctx.stream(6);
    const auto law = OffspringLaw::binary_half();
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < kA6Walks; ++i)
        if (walk_survives(law, kA6N * kA6N, rng)) ++hits;
    const double n = static_cast<double>(kA6Walks), N = static_cast<double>(kA6N);
    const double p = static_cast<double>(hits) / n;
    const double est = N * p, se = N * std::sqrt(p * (1.0 - p) / n);
    const double target = ctx.params(1.0, law.sigma2()).lambda2();
    res.pass = within(est, se, target, kRelTolerance);
    res.detail = "binary-half, N=100: " + estimate_text(est, se, target) + " (10% + 3 SE)";
    res.data = {{"estimate", est}, {"se", se}, {"target", target}};
    return res;
}

CriterionResult a7(Context& ctx) {
    CriterionResult res{"A7", "Rayleigh limit of the surviving walk", false, "", 0, {}};
    auto rng = ctx.stream(7);
    const auto law = OffspringLaw::geometric_half();
    const double scale = std::sqrt(law.sigma2() * static_cast<double>(kA7Level));
    std::vector<double> x;
    std::uint64_t walks = 0;
    while (x.size() < kA7Samples) {
        ++walks;
        const auto d = simulate_island_fossil(law, kA7Level, rng);
        if (d.colonies > 0) x.push_back(static_cast<double>(d.colonies - 1) / scale);
    }
    const auto rep = ks_one_sample(x, [](double v) { return v <= 0.0 ? 0.0 : -std::expm1(-0.5 * v * v); },
                                   kKsThreshold);
    res.pass = rep.pass;
    res.detail = "geometric-half, r=1e4, " + std::to_string(x.size()) + " of " + std::to_string(walks) +
                 " walks: D=" + fmt(rep.statistic) + ", p=" + fmt(rep.p_value);
    res.data = {{"D", rep.statistic}, {"p", rep.p_value}};
    return res;
}

CriterionResult a8(Context& ctx) {
    CriterionResult res{"A8", "fertile fraction N p_N", false, "", 0, {}};
    const auto& f = ctx.fertile();
    const double target = ctx.params(1.0, 2.0).lambda();
    const auto rep = mean_test(f, target, kRelTolerance);
    res.pass = rep.pass;
    const auto m = mean_se(f);
    res.detail = "fossil, N=100, c=1, geometric-half: " + estimate_text(m.first, m.second, target);
    res.data = {{"estimate", m.first}, {"se", m.second}, {"target", target}};
    return res;
}

CriterionResult a9(Context& ctx) {
    CriterionResult res{"A9", "model-2 colony probability r P(C > 0)", false, "", 0, {}};
    auto rng = ctx.stream(9);
    const auto law = OffspringLaw::geometric_half();
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < kA9Walks; ++i)
        if (walk_exceeds_before_extinction(law, static_cast<std::int64_t>(kA9Level) - 1, rng)) ++hits;
    const double n = static_cast<double>(kA9Walks), r = static_cast<double>(kA9Level);
    const double p = static_cast<double>(hits) / n;
    const double est = r * p, se = r * std::sqrt(p * (1.0 - p) / n);
    res.pass = within(est, se, 1.0, kRelTolerance);
    res.detail = "geometric-half, r=2000: " + estimate_text(est, se, 1.0) + " (10% + 3 SE)";
    res.data = {{"estimate", est}, {"se", se}};
    return res;
}

CriterionResult a10(Context& ctx) {
    CriterionResult res{"A10", "model-2 (P, C) Laplace transform", true, "", 0, {}};
    const auto& pool = ctx.pc_pool();
    const LimitParams p{1.0, 1.0, 1.0};
    const std::vector<LaplacePoint> grid{{0.5, 0}, {0, 1}, {0.5, 1}, {1, 0.5}, {2, 2}, {0.1, 0.1}};
    const auto reps = laplace_grid_compare(pool.samples, grid,
                                           [&](double a, double b) { return laplace_PC(a, b, p); },
                                           kLaplaceAllowance);
    std::size_t failed = 0;
    for (const auto& r : reps) {
        if (!r.pass) ++failed;
        res.data["grid"].push_back(r.detail);
    }
    std::vector<double> cs;
    cs.reserve(pool.samples.size());
    for (const auto& s : pool.samples) cs.push_back(s.C);
    const auto cmean = mean_test(cs, p.c, 0.0);
    const auto m = mean_se(cs);
    res.pass = failed == 0 && cmean.pass;
    res.detail = "N_ref=2000, 1e5 samples: " + std::to_string(grid.size() - failed) + "/" +
                 std::to_string(grid.size()) + " grid points within 3 SE + 5%; E[C]=" +
                 estimate_text(m.first, m.second, p.c);
    res.data["C_mean"] = m.first;
    return res;
}

CriterionResult a11(Context& ctx) {
    CriterionResult res{"A11", "mean overshoot sigma^2/2", false, "", 0, {}};
    auto rng = ctx.stream(11);
    const auto law = OffspringLaw::geometric_half();
    const auto floor = -static_cast<std::int64_t>(kA11Level);   // height -1 relative to r-1
    std::vector<double> excess;
    std::uint64_t lost = 0;
    while (excess.size() < kA11Cycles) {
        std::int64_t y = 0;
        for (;;) {
            y += static_cast<std::int64_t>(law.sample(rng)) - 1;
            if (y >= 0) {
                excess.push_back(static_cast<double>(y));
                break;
            }
            if (y <= floor) {
                ++lost;
                break;
            }
        }
    }
    const double target = law.sigma2() / 2.0;
    const auto rep = mean_test(excess, target, kOvershootTolerance);
    const auto m = mean_se(excess);
    res.pass = rep.pass;
    res.detail = "geometric-half, r=1e4, " + std::to_string(excess.size()) + " cycles (" + std::to_string(lost) +
                 " extinct): " + estimate_text(m.first, m.second, target) + " (5% + 3 SE)";
    res.data = {{"estimate", m.first}, {"se", m.second}, {"target", target}};
    return res;
}

struct ChainEstimates {
    CumulantEstimate sim, eta;
    double solver = 0.0;
    std::uint64_t sim_overflow = 0, eta_overflow = 0;
};

bool chain_agrees(const ChainEstimates& e, std::string& text) {
    auto pair_ok = [](double a, double sa, double b, double sb) {
        return std::abs(a - b) <= 3.0 * std::sqrt(sa * sa + sb * sb) + kRelTolerance * std::max(std::abs(a), std::abs(b));
    };
    const bool ok = pair_ok(e.sim.value, e.sim.se, e.eta.value, e.eta.se) &&
                    pair_ok(e.sim.value, e.sim.se, e.solver, 0.0) && pair_ok(e.eta.value, e.eta.se, e.solver, 0.0);
    text = "sim " + fmt(e.sim.value) + "+-" + fmt(e.sim.se, 2) + ", eta " + fmt(e.eta.value) + "+-" +
           fmt(e.eta.se, 2) + ", solver " + fmt(e.solver) + (ok ? "" : " [disagree]");
    return ok;
}

std::vector<ChainEstimates> cumulant_chain(Context& ctx, Model model) {
    const bool regrow = model == Model::regrow;
    const auto law = regrow ? OffspringLaw::binary_half() : OffspringLaw::geometric_half();
    const LimitParams p = ctx.params(1.0, law.sigma2());
    const auto fns = regrow ? std::vector<TestFunction>{{0.01, 0.02, 0.04, 0.06, 1.0},
                                                       {0.02, 0.05, 0.08, 0.12, 1.0},
                                                       {0.05, 0.1, 0.15, 0.2, 2.0}}
                            : std::vector<TestFunction>{{0.05, 0.1, 0.3, 0.5, 1.0},
                                                       {0.5, 0.8, 1.2, 1.5, 0.5},
                                                       {0.2, 0.4, 0.6, 0.9, 2.0}};
    const PCPool* pool = regrow ? &ctx.pc_pool() : nullptr;
    std::vector<ChainEstimates> out(fns.size());

    SimulationOptions s;
    s.model = model;
    s.law = law;
    s.N = kA12N;
    s.r = rescaled_threshold(model, 1.0, kA12N);
    s.roots = 1;
    s.fns = fns;
    s.saturation = kA12Saturation;
    std::vector<std::vector<double>> sim(fns.size());
    std::uint64_t sim_overflow = 0;
    constexpr std::uint64_t chunk = 10'000;
    const std::uint64_t seed = ctx.opt.seed ^ (regrow ? 0xa122 : 0xa121);
    for (std::uint64_t first = 0; first < kA12Replicates; first += chunk) {
        for (const auto& r : run_replicates(s, seed, first, chunk, ctx.opt.workers)) {
            if (r.summary.overflow) {
                ++sim_overflow;
                continue;
            }
            for (std::size_t j = 0; j < fns.size(); ++j) sim[j].push_back(r.summary.integrals[j]);
        }
    }

    std::vector<std::vector<double>> eta(fns.size());
    std::uint64_t eta_overflow = 0;
    auto rng = ctx.stream(regrow ? 122 : 121);
    for (std::uint64_t i = 0; i < kA12EtaDraws; ++i) {
        const auto d = sample_eta_integrals(p, regrow, fns, kA12SupportMin, kA12Saturation, rng, pool);
        if (d.budget_exceeded) {
            ++eta_overflow;
            continue;
        }
        for (std::size_t j = 0; j < fns.size(); ++j) eta[j].push_back(d.integrals[j]);
    }

    for (std::size_t j = 0; j < fns.size(); ++j) {
        out[j].sim = empirical_cumulant(sim[j], kA12N);
        out[j].eta = empirical_cumulant(eta[j]);
        out[j].solver = regrow ? solve_cumulant_regrow(fns[j], p, *pool) : solve_cumulant_fossil(fns[j], p);
        out[j].sim_overflow = sim_overflow;
        out[j].eta_overflow = eta_overflow;
    }
    return out;
}

CriterionResult a12(Context& ctx) {
    CriterionResult res{"A12", "cumulant consistency chains", true, "", 0, {}};
    for (Model model : {Model::fossil, Model::regrow}) {
        const auto est = cumulant_chain(ctx, model);
        res.detail += (model == Model::fossil ? "fossil [" : "; regrow [");
        for (std::size_t j = 0; j < est.size(); ++j) {
            std::string text;
            const bool ok = chain_agrees(est[j], text);
            res.pass = res.pass && ok;
            res.detail += (j ? " | " : "") + text;
            res.data[to_string(model)].push_back({{"sim", est[j].sim.value},
                                                  {"sim_se", est[j].sim.se},
                                                  {"eta", est[j].eta.value},
                                                  {"eta_se", est[j].eta.se},
                                                  {"solver", est[j].solver},
                                                  {"sim_overflow", est[j].sim_overflow},
                                                  {"eta_overflow", est[j].eta_overflow},
                                                  {"pass", ok}});
        }
        res.detail += "]";
    }
    return res;
}

CriterionResult a13(Context& ctx) {
    CriterionResult res{"A13", "reordered forest vs tree-indexed CSBP (depth 1, width 3)", false, "", 0, {}};
    const LimitParams p = ctx.params(1.0, 2.0);
    SimulationOptions s;
    s.model = Model::fossil;
    s.law = OffspringLaw::geometric_half();
    s.N = kA13N;
    s.r = rescaled_threshold(Model::fossil, 1.0, kA13N);
    s.max_generation = 0;
    s.keep_islands = true;
    std::vector<std::vector<double>> sim, lim;
    for (std::uint64_t first = 0; first < kA13Replicates; first += 100) {
        for (const auto& r : run_replicates(s, ctx.opt.seed ^ 0xa13, first, 100, ctx.opt.workers))
            sim.push_back(flatten_prefix(reorder_forest(r.islands, s.N, s.r, 1, 3), 1, 3));
    }
    auto rng = ctx.stream(13);
    for (std::uint64_t i = 0; i < kA13Replicates; ++i) lim.push_back(flatten_prefix(sample_csbp_prefix(p, 1, 3, rng), 1, 3));
    const auto rep = fdd_compare(sim, lim, kA13Permutations, ctx.opt.seed ^ 0xa13, kKsThreshold);
    res.pass = rep.pass;
    res.detail = "fossil N=500, c=1, geometric-half, 2000 vs 2000: " + rep.detail;
    res.data = {{"min_adjusted_p", rep.p_value}};
    return res;
}

CriterionResult a14(Context& ctx) {
    CriterionResult res{"A14", "ranked Poisson atoms vs thinning", false, "", 0, {}};
    const IntensityMeasure m{IntensityKind::mu_c, 1.0};
    const double scale = 2.0;
    auto rng = ctx.stream(14);
    std::vector<double> top, thin;
    for (std::size_t i = 0; i < kA14Draws; ++i) top.push_back(poisson_atoms_topk(scale, m, 1, rng).front());
    // Thinning: uniform proposals on [x_min, c) at the density's maximum there.
    const double x_min = 0.01, bound = m.density(x_min);
    for (std::size_t i = 0; i < kA14Draws; ++i) {
        const auto n = sample_poisson(rng, scale * bound * (m.c - x_min));
        double best = 0.0;
        for (std::uint64_t k = 0; k < n; ++k) {
            const double x = x_min + (m.c - x_min) * rng.uniform();
            if (rng.uniform() * bound < m.density(x)) best = std::max(best, x);
        }
        thin.push_back(best);
    }
    const auto ks = ks_two_sample(top, thin, kA14Permutations, ctx.opt.seed ^ 0xa14, kKsThreshold);

    const double cut = 0.1, mean = scale * m.tail(cut);
    constexpr std::size_t bins = 12;
    std::vector<std::uint64_t> counts(bins, 0);
    for (std::size_t i = 0; i < kA14CountRuns; ++i) {
        const auto atoms = poisson_atoms_topk(scale, m, 40, rng);
        const auto k = static_cast<std::size_t>(std::count_if(atoms.begin(), atoms.end(), [&](double a) { return a >= cut; }));
        ++counts[std::min(k, bins - 1)];
    }
    std::vector<double> probs(bins);
    double pk = std::exp(-mean), acc = 0.0;
    for (std::size_t k = 0; k + 1 < bins; ++k) {
        probs[k] = pk;
        acc += pk;
        pk *= mean / static_cast<double>(k + 1);
    }
    probs[bins - 1] = 1.0 - acc;
    const auto chi = chi_square_gof(counts, probs, kCountThreshold);
    res.pass = ks.pass && chi.pass;
    res.detail = "a_1 KS p=" + fmt(ks.p_value) + " (D=" + fmt(ks.statistic) + "); count >= 0.1 chi-square p=" +
                 fmt(chi.p_value);
    res.data = {{"ks_p", ks.p_value}, {"chi_p", chi.p_value}};
    return res;
}

std::string simulate_bytes(Model model, unsigned workers, std::uint64_t seed) {
    SimulationOptions s;
    s.model = model;
    s.law = OffspringLaw::geometric_half();
    s.N = 20;
    s.r = rescaled_threshold(model, 1.0, s.N);
    s.fns = {{0.05, 0.1, 0.3, 0.5, 1.0}, {0.5, 0.8, 1.2, 1.5, 0.5}};
    s.keep_atoms = true;
    const auto reps = run_replicates(s, seed, 0, 200, workers);
    std::ostringstream os;
    std::vector<ReplicateSummary> rows;
    for (const auto& r : reps) rows.push_back(r.summary);
    write_replicate_rows(os, rows, true);
    for (const auto& r : reps) write_atom_rows(os, "sim", r.summary.replicate_index, r.measure.atoms);
    return os.str();
}

CriterionResult a15(Context& ctx) {
    CriterionResult res{"A15", "byte-identical output at 1, 4, 16 workers", true, "", 0, {}};
    for (Model model : {Model::fossil, Model::regrow}) {
        const auto one = simulate_bytes(model, 1, ctx.opt.seed ^ 0xa15);
        const bool same = one == simulate_bytes(model, 4, ctx.opt.seed ^ 0xa15) &&
                          one == simulate_bytes(model, 16, ctx.opt.seed ^ 0xa15);
        res.pass = res.pass && same;
        res.detail += to_string(model) + ": " + std::to_string(one.size()) + " bytes " +
                      (same ? "identical" : "DIFFER") + (model == Model::fossil ? "; " : "");
    }
    return res;
}

CriterionResult a16(Context& ctx) {
    CriterionResult res{"A16", "null calibration and corrupted controls", false, "", 0, {}};
    const auto& pool = ctx.pc_pool();
    const LimitParams p{1.0, 1.0, 1.0};
    const std::vector<LaplacePoint> grid{{0.5, 0}, {0, 1}, {0.5, 1}, {1, 0.5}, {2, 2}, {0.1, 0.1}};
    auto target = [&](double a, double b) { return laplace_PC(a, b, p); };
    auto grid_pass = [&](std::span<const PCSample> s) {
        const auto reps = laplace_grid_compare(s, grid, target, kLaplaceAllowance);
        return std::all_of(reps.begin(), reps.end(), [](const ComparisonReport& r) { return r.pass; });
    };

    // Nulls: disjoint pool chunks vs the closed form; fertile-count chunks vs
    // lambda; two Rayleigh samples against each other.
    const std::size_t chunk = pool.samples.size() / kA16Trials;
    std::size_t laplace_ok = 0, mean_ok = 0, ks_ok = 0;
    const auto& fertile = ctx.fertile();
    const std::size_t fchunk = fertile.size() / kA16Trials;
    const double lambda = ctx.params(1.0, 2.0).lambda();
    auto rng = ctx.stream(16);
    for (std::size_t t = 0; t < kA16Trials; ++t) {
        if (grid_pass(std::span<const PCSample>(pool.samples).subspan(t * chunk, chunk))) ++laplace_ok;
        if (mean_test(std::span<const double>(fertile).subspan(t * fchunk, fchunk), lambda, kRelTolerance).pass)
            ++mean_ok;
        std::vector<double> a(500), b(500);
        for (auto& x : a) x = sample_rayleigh(rng);
        for (auto& x : b) x = sample_rayleigh(rng);
        if (ks_two_sample(a, b, 999, ctx.opt.seed + t, kKsThreshold).pass) ++ks_ok;
    }
    const auto need = static_cast<std::size_t>(std::ceil(kNullAcceptRate * static_cast<double>(kA16Trials)));

    // Corrupted controls must be rejected.
    std::vector<PCSample> doubled = pool.samples;
    for (auto& s : doubled) s.C *= 2.0;
    const bool c_rejected = !grid_pass(doubled);
    const bool lambda_rejected = !mean_test(fertile, 2.0 * lambda, kRelTolerance).pass;

    res.pass = laplace_ok >= need && mean_ok >= need && ks_ok >= need && c_rejected && lambda_rejected;
    res.detail = "null accept " + std::to_string(laplace_ok) + "/" + std::to_string(mean_ok) + "/" +
                 std::to_string(ks_ok) + " of 100 (Laplace grid, fertile mean, KS); doubled C " +
                 (c_rejected ? "rejected" : "ACCEPTED") + ", doubled lambda " +
                 (lambda_rejected ? "rejected" : "ACCEPTED");
    res.data = {{"null_laplace", laplace_ok},
                {"null_mean", mean_ok},
                {"null_ks", ks_ok},
                {"doubled_C_rejected", c_rejected},
                {"doubled_lambda_rejected", lambda_rejected}};
    return res;
}

} // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log) {
    Context ctx{options, {}, {}};
    using Fn = std::function<CriterionResult(Context&)>;
    const std::vector<std::pair<std::string, Fn>> all{
        {"A1", a1},
        {"A2", [](Context& c) { return oracle(c, false); }},
        {"A3", [](Context& c) { return oracle(c, true); }},
        {"A4", a4},   {"A5", a5},   {"A6", a6},   {"A7", a7},   {"A8", a8},
        {"A9", a9},   {"A10", a10}, {"A11", a11}, {"A12", a12}, {"A13", a13},
        {"A14", a14}, {"A15", a15}, {"A16", a16},
    };
    static const std::vector<std::string> quick_set{"A1", "A2", "A3", "A4", "A5"};
    std::vector<CriterionResult> out;
    for (const auto& [id, fn] : all) {
        if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end())
            continue;
        if (options.quick && std::find(quick_set.begin(), quick_set.end(), id) == quick_set.end()) continue;
        const auto t0 = Clock::now();
        CriterionResult r;
        try {
            r = fn(ctx);
        } catch (const std::exception& e) {
            r = CriterionResult{id, "error", false, std::string("exception: ") + e.what(), 0, {}};
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f s", r.seconds);
        log << r.id << (r.id.size() < 3 ? "  " : " ") << (r.pass ? "PASS" : "FAIL") << "  " << r.title << ": "
            << r.detail << " (" << buf << ")" << std::endl;
        out.push_back(std::move(r));
    }
    return out;
}

nlohmann::json acceptance_report(const std::vector<CriterionResult>& results) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : results)
        j.push_back({{"id", r.id},
                     {"title", r.title},
                     {"pass", r.pass},
                     {"detail", r.detail},
                     {"seconds", r.seconds},
                     {"data", r.data}});
    return j;
}

bool all_passed(const std::vector<CriterionResult>& results) {
    return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

} // namespace isleforge
