#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "isleforge/measure.hpp"
#include "isleforge/random.hpp"
#include "isleforge/trees.hpp"

namespace isleforge {

struct LimitParams {
    double c = 1.0;
    double sigma2 = 1.0;
    // Multiplies both intensity constants; only the sensitivity checks set it.
    double lambda_factor = 1.0;

    double sigma() const { return std::sqrt(sigma2); }
    // Fertile-island rate for the fossil model: p_N ~ lambda / N.
    double lambda() const { return lambda_factor * std::sqrt(2.0 / (std::numbers::pi * sigma2 * c)); }
    // Tail constant: N P(extinction time > a N^2) -> lambda2 / sqrt(a).
    double lambda2() const { return lambda_factor * std::sqrt(2.0 / (std::numbers::pi * sigma2)); }
    double c_tilde() const { return c / sigma(); }
    double theta_mean() const { return std::sqrt(c) * sigma() * std::sqrt(std::numbers::pi / 2.0); }
    void validate() const;
};

enum class IntensityKind { mu, mu_c };

// x -> 1/(2 x^{3/2}) on (0, inf), or restricted to (0, c).
struct IntensityMeasure {
    IntensityKind kind = IntensityKind::mu;
    double c = 1.0;

    double density(double x) const;
    // Mass of (x, inf) (or (x, c)).
    double tail(double x) const;
    // Inverse of tail on its range.
    double inverse_tail(double y) const;
};

// The k largest atoms of a Poisson measure with intensity scale * measure,
// descending. Uses a_j = tail^{-1}(Gamma_j / scale).
std::vector<double> poisson_atoms_topk(double scale, const IntensityMeasure& measure, std::size_t k,
                                       RandomStream& rng);

// All atoms >= x_min of the same Poisson measure, unordered.
std::vector<double> poisson_atoms_above(double scale, const IntensityMeasure& measure, double x_min,
                                        RandomStream& rng);

// sqrt(c) sigma W with W Rayleigh.
double sample_theta(const LimitParams& params, RandomStream& rng);
double sample_rayleigh(RandomStream& rng);

// Poisson with random parameter sqrt(2/pi) W.
std::uint64_t sample_cox_offspring(RandomStream& rng);

// E[exp(-alpha P - beta C)] for the model-2 fertile-island limit.
double laplace_PC(double alpha, double beta, const LimitParams& params);

struct PCSample {
    double P = 0.0;
    double C = 0.0;
};

struct PCMethod {
    enum class Kind { walk, excursion } kind = Kind::walk;
    std::uint64_t n_ref = 2000;
    OffspringLaw law = OffspringLaw::binary_half();
    double dt = 1e-4;
    // Attempts per accepted walk sample.
    std::uint64_t rejection_budget = 1000;

    std::string describe() const;
};

struct RejectionBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// walk: the offspring walk conditioned to exceed r - 1 = floor(c n_ref) - 1
// before -1, returning (time under r-1 / n_ref^2, overshoot sum / n_ref).
// excursion: Williams decomposition of an excursion conditioned to exceed
// c~, with Euler-discretized Bessel-3 legs.
PCSample sample_PC(const LimitParams& params, const PCMethod& method, RandomStream& rng);

// Integer (population, colonies) of one fertile island, walk method.
struct RawPC {
    std::uint64_t population = 0;
    std::uint64_t colonies = 0;
};
RawPC sample_fertile_island(const OffspringLaw& law, std::uint64_t r, RandomStream& rng,
                            std::uint64_t rejection_budget = 1000);

struct PCPool {
    std::vector<PCSample> samples;
    std::string method;
};

PCPool build_pc_pool(const LimitParams& params, const PCMethod& method, std::size_t n, std::uint64_t seed,
                     unsigned workers);
void write_pc_pool(std::ostream& os, const PCPool& pool);
PCPool read_pc_pool(std::istream& is);

double sample_bessel3_hit(double level, double dt, RandomStream& rng);

struct EtaSample {
    RescaledPointMeasure measure;
    std::uint64_t nodes = 0;   // fertility-tree size including the virtual root
    bool budget_exceeded = false;
};

inline constexpr std::uint64_t kDefaultTreeBudget = 1'000'000;

EtaSample sample_eta_fossil(const LimitParams& params, double support_min, RandomStream& rng,
                            std::uint64_t tree_budget = kDefaultTreeBudget);
EtaSample sample_eta_regrow(const LimitParams& params, double support_min, RandomStream& rng, const PCPool& pool,
                            std::uint64_t tree_budget = kDefaultTreeBudget);

// Integrals of several test functions against one draw of eta. With
// saturation > 0 the draw stops once every integral reaches it.
struct EtaIntegrals {
    std::vector<double> integrals;
    std::uint64_t nodes = 0;
    bool budget_exceeded = false;
    bool saturated = false;
};

EtaIntegrals sample_eta_integrals(const LimitParams& params, bool regrow, const std::vector<TestFunction>& fns,
                                  double support_min, double saturation, RandomStream& rng,
                                  const PCPool* pool = nullptr, std::uint64_t tree_budget = kDefaultTreeBudget);

// Root (c, 1); children of a fertile node are the fertile ones, (c, theta)
// sorted by fertility, followed by the largest Poisson atoms; first `width`
// kept, recursion to `depth`.
PrefixNode sample_csbp_prefix(const LimitParams& params, std::size_t depth, std::size_t width, RandomStream& rng);

} // namespace isleforge
