#include "isleforge/limits.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "isleforge/empirical.hpp"
#include "isleforge/parallel.hpp"

namespace isleforge {

void LimitParams::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("c must be positive");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be positive");
}

double IntensityMeasure::density(double x) const {
    if (x <= 0.0 || (kind == IntensityKind::mu_c && x >= c)) return 0.0;
    return 0.5 / (x * std::sqrt(x));
}

double IntensityMeasure::tail(double x) const {
    if (kind == IntensityKind::mu) return 1.0 / std::sqrt(x);
    return x >= c ? 0.0 : 1.0 / std::sqrt(x) - 1.0 / std::sqrt(c);
}

double IntensityMeasure::inverse_tail(double y) const {
    const double s = kind == IntensityKind::mu ? y : y + 1.0 / std::sqrt(c);
    return 1.0 / (s * s);
}

std::vector<double> poisson_atoms_topk(double scale, const IntensityMeasure& measure, std::size_t k,
                                       RandomStream& rng) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
    std::vector<double> out;
    out.reserve(k);
    double gamma = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        gamma += rng.exponential();
        out.push_back(measure.inverse_tail(gamma / scale));
    }
    return out;
}

std::vector<double> poisson_atoms_above(double scale, const IntensityMeasure& measure, double x_min,
                                        RandomStream& rng) {
    std::vector<double> out;
    if (!(scale > 0.0)) return out;
    const double mass = measure.tail(x_min);
    if (!(mass > 0.0)) return out;
    const std::uint64_t n = sample_poisson(rng, scale * mass);
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(measure.inverse_tail(rng.uniform_pos() * mass));
    return out;
}

double sample_rayleigh(RandomStream& rng) {
    // U in (0, 1) so the draw is finite and positive.
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u));
}

double sample_theta(const LimitParams& params, RandomStream& rng) {
    return std::sqrt(params.c) * params.sigma() * sample_rayleigh(rng);
}

std::uint64_t sample_cox_offspring(RandomStream& rng) {
    return sample_poisson(rng, std::sqrt(2.0 / std::numbers::pi) * sample_rayleigh(rng));
}

double laplace_PC(double alpha, double beta, const LimitParams& params) {
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("laplace_PC needs alpha, beta >= 0");
    const double x = std::sqrt(2.0 * alpha) * params.c_tilde();
    double x_over_sinh, x_coth;
    if (x < 1e-4) {
        const double x2 = x * x;
        x_over_sinh = 1.0 - x2 / 6.0;
        x_coth = 1.0 + x2 / 3.0;
    } else {
        const double e = std::exp(-2.0 * x);
        x_over_sinh = 2.0 * x * std::exp(-x) / (1.0 - e);
        x_coth = x * (1.0 + e) / (1.0 - e);
    }
    return x_over_sinh * x_over_sinh / (beta * params.c + x_coth);
}

std::string PCMethod::describe() const {
    std::ostringstream os;
    if (kind == Kind::walk)
        os << "walk-approx(N_ref=" << n_ref << ", law=" << law.name() << ")";
    else
        os << "excursion(dt=" << dt << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// Conditioned walk. Under the h-transform with h(x) = x + 1 the walk never
// hits -1; a step from x is an ordinary draw with probability x/(x+1) and a
// size-biased draw otherwise. Accepting with probability (r+1)/(S_tau+1) at
// the first time tau with S >= r yields the walk conditioned on reaching r
// before -1. Above r-1 only migrant subtrees are explored, so after each
// overshoot the walk restarts at r-1.

namespace {

class BitSource {
public:
    explicit BitSource(RandomStream& rng) : rng_(rng) {}
    // b in [1, 64] fresh bits.
    std::uint64_t take(int b) {
        if (n_ < b) {
            w_ = rng_();
            n_ = 64;
        }
        const std::uint64_t v = b == 64 ? w_ : (w_ & ((std::uint64_t{1} << b) - 1));
        w_ = b == 64 ? 0 : (w_ >> b);
        n_ -= b;
        return v;
    }

private:
    RandomStream& rng_;
    std::uint64_t w_ = 0;
    int n_ = 0;
};

// After the first passage above r-1 the island continues like any other
// from r-1.
RawPC finish_island(const OffspringLaw& law, std::uint64_t r, std::uint64_t population, std::uint64_t colonies,
                    RandomStream& rng) {
    const auto d = simulate_island_regrow(law, r, rng, kUnlimitedSteps, static_cast<std::int64_t>(r) - 1);
    return {population + d.population, colonies + d.colonies};
}

RawPC fertile_island_binary(std::uint64_t r, RandomStream& rng) {
    const auto ri = static_cast<std::int64_t>(r);
    BitSource bits(rng);
    std::int64_t x = 0;
    std::uint64_t t = 0;
    // Conditioned climb. Blocks of b fair steps are accepted with probability
    // (x_end+1)/(x+1+b), which is exact since b <= x keeps blocks off -1.
    while (x < ri) {
        const std::int64_t b = std::min<std::int64_t>({64, ri - x, (x + 1) / 8});
        if (b >= 2) {
            const auto pop = std::popcount(bits.take(static_cast<int>(b)));
            const std::int64_t xe = x + 2 * pop - b;
            if (rng.uniform() * static_cast<double>(x + 1 + b) < static_cast<double>(xe + 1)) {
                x = xe;
                t += static_cast<std::uint64_t>(b);
            }
        } else {
            x += rng.uniform() * static_cast<double>(2 * (x + 1)) < static_cast<double>(x + 2) ? 1 : -1;
            ++t;
        }
    }
    return finish_island(OffspringLaw::binary_half(), r, t, 1, rng);
}

RawPC fertile_island_generic(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                             std::uint64_t budget) {
    const auto ri = static_cast<std::int64_t>(r);
    for (std::uint64_t attempt = 0; attempt < budget; ++attempt) {
        std::int64_t x = 0;
        std::uint64_t t = 0;
        while (x < ri) {
            const bool plain = rng.uniform() * static_cast<double>(x + 1) < static_cast<double>(x);
            const std::uint32_t k = plain ? law.sample(rng) : law.sample_size_biased(rng);
            x += static_cast<std::int64_t>(k) - 1;
            ++t;
        }
        if (!(rng.uniform() * static_cast<double>(x + 1) < static_cast<double>(ri + 1))) continue;
        return finish_island(law, r, t, static_cast<std::uint64_t>(x - (ri - 1)), rng);
    }
    throw RejectionBudgetExceeded("conditioned walk rejected " + std::to_string(budget) + " times");
}

// 3-d Brownian motion; its norm is a Bessel-3 process.
struct Brownian3 {
    double x = 0.0, y = 0.0, z = 0.0;
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    void step(double s, RandomStream& rng) {
        x += s * rng.normal();
        y += s * rng.normal();
        z += s * rng.normal();
    }
    void rescale(double target) {
        const double n = norm();
        x *= target / n;
        y *= target / n;
        z *= target / n;
    }
};

PCSample excursion_pc(const LimitParams& params, double dt, RandomStream& rng) {
    if (!(dt > 0.0) || dt > 1e-4) throw std::invalid_argument("excursion method needs 0 < dt <= 1e-4");
    const double level = params.c_tilde();
    const double eps = std::sqrt(dt);
    const double s = std::sqrt(dt);
    const double max = level / ((static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53);
    // Above `ceiling` the path contributes nothing until it comes back to
    // `floor`; that return happens before reaching max with probability
    // (1/R - 1/max) / (1/floor - 1/max) (scale function -1/x).
    const double ceiling = 2.0 * level;
    const double floor = level + 2.0 * eps;
    double below = 0.0, band = 0.0;
    for (int leg = 0; leg < 2; ++leg) {
        Brownian3 b;
        double R = 0.0;
        for (;;) {
            if (R < level) below += dt;
            if (std::abs(R - level) <= eps) band += dt;
            b.step(s, rng);
            R = b.norm();
            if (R >= max) break;
            if (max > ceiling && R >= ceiling) {
                const double q = (1.0 / R - 1.0 / max) / (1.0 / floor - 1.0 / max);
                if (rng.uniform() < q) {
                    b.rescale(floor);
                    R = floor;
                } else {
                    break;
                }
            }
        }
    }
    const double local_time = band / (2.0 * eps);
    return {below, 0.5 * params.sigma() * local_time};
}

} // namespace

RawPC sample_fertile_island(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                            std::uint64_t rejection_budget) {
    if (r < 1) throw std::invalid_argument("r must be at least 1");
    if (law.kind() == LawKind::binary_half) return fertile_island_binary(r, rng);
    return fertile_island_generic(law, r, rng, rejection_budget);
}

PCSample sample_PC(const LimitParams& params, const PCMethod& method, RandomStream& rng) {
    if (method.kind == PCMethod::Kind::excursion) return excursion_pc(params, method.dt, rng);
    if (method.n_ref < 500) throw std::invalid_argument("walk method needs N_ref >= 500");
    if (std::abs(method.law.sigma2() - params.sigma2) > 1e-12)
        throw std::invalid_argument("walk law variance differs from params.sigma2");
    const auto r = static_cast<std::uint64_t>(std::floor(params.c * static_cast<double>(method.n_ref)));
    const auto raw = sample_fertile_island(method.law, r, rng, method.rejection_budget);
    const double n = static_cast<double>(method.n_ref);
    return {static_cast<double>(raw.population) / (n * n), static_cast<double>(raw.colonies) / n};
}

PCPool build_pc_pool(const LimitParams& params, const PCMethod& method, std::size_t n, std::uint64_t seed,
                     unsigned workers) {
    PCPool pool;
    pool.method = method.describe();
    pool.samples.resize(n);
    const std::uint64_t key = splitmix64(seed ^ 0x70c5a3e1d2b49f86ull);
    parallel_for(n, workers, [&](std::size_t i) {
        RandomStream rng(key, i);
        pool.samples[i] = sample_PC(params, method, rng);
    });
    return pool;
}

void write_pc_pool(std::ostream& os, const PCPool& pool) {
    os << "# method=" << pool.method << "\nP,C\n";
    char buf[64];
    for (const auto& s : pool.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.P, s.C);
        os << buf;
    }
}

PCPool read_pc_pool(std::istream& is) {
    PCPool pool;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# method=", 0) == 0) pool.method = line.substr(9);
            continue;
        }
        if (!header) {
            if (line != "P,C") throw std::runtime_error("PC pool: expected header 'P,C'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("PC pool: malformed row '" + line + "'");
        pool.samples.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    }
    if (pool.samples.empty()) throw std::runtime_error("PC pool is empty");
    return pool;
}

double sample_bessel3_hit(double level, double dt, RandomStream& rng) {
    if (!(level > 0.0)) throw std::invalid_argument("level must be positive");
    if (!(dt > 0.0) || dt > 1e-4 * level * level) throw std::invalid_argument("dt must be <= 1e-4 level^2");
    Brownian3 b;
    const double s = std::sqrt(dt), l2 = level * level;
    double t = 0.0;
    for (;;) {
        b.step(s, rng);
        t += dt;
        if (b.x * b.x + b.y * b.y + b.z * b.z >= l2) return t;
    }
}

// ---------------------------------------------------------------------------
// Fertility trees. The virtual root has fertility 1 and no atom of its own.

namespace {

// sink(x) returns true to stop the draw early.
template <class Sink>
void walk_eta(const LimitParams& p, bool regrow, double smin, RandomStream& rng, const PCPool* pool,
              std::uint64_t budget, Sink&& sink, std::uint64_t& nodes, bool& exceeded) {
    const IntensityMeasure nonfertile{regrow ? IntensityKind::mu : IntensityKind::mu_c, p.c};
    std::vector<double> fertility{1.0};
    nodes = 1;
    exceeded = false;
    for (std::size_t head = 0; head < fertility.size(); ++head) {
        const double f = fertility[head];
        for (double x : poisson_atoms_above(p.lambda2() * f, nonfertile, smin, rng))
            if (sink(x)) return;
        const std::uint64_t k = sample_poisson(rng, regrow ? f / p.c : p.lambda() * f);
        for (std::uint64_t i = 0; i < k; ++i) {
            if (++nodes > budget) {
                exceeded = true;
                return;
            }
            double population, child_fertility;
            if (regrow) {
                const auto& s = pool->samples[static_cast<std::size_t>(
                    (static_cast<unsigned __int128>(rng()) * pool->samples.size()) >> 64)];
                population = s.P;
                child_fertility = s.C;
            } else {
                population = p.c;
                child_fertility = sample_theta(p, rng);
            }
            fertility.push_back(child_fertility);
            if (population >= smin && population > 0.0 && sink(population)) return;
        }
    }
}

void check_eta_inputs(const LimitParams& p, double smin, bool regrow, const PCPool* pool) {
    p.validate();
    if (!(smin > 0.0)) throw std::invalid_argument("support_min must be positive");
    if (regrow && (!pool || pool->samples.empty())) throw std::invalid_argument("regrow eta needs a PC pool");
}

} // namespace

EtaSample sample_eta_fossil(const LimitParams& params, double support_min, RandomStream& rng,
                            std::uint64_t tree_budget) {
    check_eta_inputs(params, support_min, false, nullptr);
    EtaSample out;
    walk_eta(params, false, support_min, rng, nullptr, tree_budget,
             [&](double x) {
                 out.measure.atoms.push_back(x);
                 return false;
             },
             out.nodes, out.budget_exceeded);
    return out;
}

EtaSample sample_eta_regrow(const LimitParams& params, double support_min, RandomStream& rng, const PCPool& pool,
                            std::uint64_t tree_budget) {
    check_eta_inputs(params, support_min, true, &pool);
    EtaSample out;
    walk_eta(params, true, support_min, rng, &pool, tree_budget,
             [&](double x) {
                 out.measure.atoms.push_back(x);
                 return false;
             },
             out.nodes, out.budget_exceeded);
    return out;
}

EtaIntegrals sample_eta_integrals(const LimitParams& params, bool regrow, const std::vector<TestFunction>& fns,
                                  double support_min, double saturation, RandomStream& rng, const PCPool* pool,
                                  std::uint64_t tree_budget) {
    check_eta_inputs(params, support_min, regrow, pool);
    EtaIntegrals out;
    out.integrals.assign(fns.size(), 0.0);
    walk_eta(params, regrow, support_min, rng, pool, tree_budget,
             [&](double x) {
                 bool all = saturation > 0.0;
                 for (std::size_t j = 0; j < fns.size(); ++j) {
                     out.integrals[j] += fns[j](x);
                     all = all && out.integrals[j] >= saturation;
                 }
                 out.saturated = all;
                 return all;
             },
             out.nodes, out.budget_exceeded);
    return out;
}

namespace {

void grow_csbp(PrefixNode& node, const LimitParams& p, std::size_t depth, std::size_t width, RandomStream& rng) {
    if (depth == 0 || node.fertility <= 0.0) return;
    const std::uint64_t k = sample_poisson(rng, p.lambda() * node.fertility);
    std::vector<double> fert(k);
    for (auto& f : fert) f = sample_theta(p, rng);
    std::sort(fert.begin(), fert.end(), std::greater<>());
    const auto atoms =
        poisson_atoms_topk(p.lambda2() * node.fertility, IntensityMeasure{IntensityKind::mu_c, p.c}, width, rng);
    for (std::size_t i = 0; i < fert.size() && node.children.size() < width; ++i)
        node.children.push_back({p.c, fert[i], {}});
    for (std::size_t i = 0; node.children.size() < width; ++i) node.children.push_back({atoms[i], 0.0, {}});
    for (auto& child : node.children) grow_csbp(child, p, depth - 1, width, rng);
}

} // namespace

PrefixNode sample_csbp_prefix(const LimitParams& params, std::size_t depth, std::size_t width, RandomStream& rng) {
    if (depth < 1 || width < 1) throw std::invalid_argument("depth and width must be at least 1");
    params.validate();
    PrefixNode root{params.c, 1.0, {}};
    grow_csbp(root, params, depth, width, rng);
    return root;
}

} // namespace isleforge
