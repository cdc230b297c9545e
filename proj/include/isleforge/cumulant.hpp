#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "isleforge/isles.hpp"
#include "isleforge/limits.hpp"
#include "isleforge/measure.hpp"

namespace isleforge {

struct CumulantEstimate {
    double value = 0.0;
    double se = 0.0;
    std::uint64_t n_samples = 0;
};

struct DegenerateSample : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoBracket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -ln(mean of exp(-integral)), times scale_N when given (single-island
// samples of an N-island system). Standard error by the delta method.
CumulantEstimate empirical_cumulant(std::span<const double> integrals,
                                    std::optional<std::uint64_t> scale_N = std::nullopt);

// Integral of (1 - exp(-f)) against mu, or mu^c.
double mu_integral(const TestFunction& f, const IntensityMeasure& measure);

// E[exp(-a W)] for W Rayleigh, by 64-point Gauss-Legendre on [0, 9].
double rayleigh_laplace(double a);

// Right-hand sides of the cumulant equations kappa = RHS(kappa).
double cumulant_rhs_fossil(double kappa, const TestFunction& f, const LimitParams& params);
double cumulant_rhs_regrow(double kappa, const TestFunction& f, const LimitParams& params, const PCPool& pool);

double cumulant_residual(double kappa, const TestFunction& f, const LimitParams& params, Model model,
                         const PCPool* pool = nullptr);

double solve_cumulant_fossil(const TestFunction& f, const LimitParams& params, double tol = 1e-12);
double solve_cumulant_regrow(const TestFunction& f, const LimitParams& params, const PCPool& pool,
                             double tol = 1e-12);

// kappa <- (1 - damping) kappa + damping RHS(kappa) from kappa = 0.
double solve_cumulant_fixed_point(const TestFunction& f, const LimitParams& params, Model model,
                                  const PCPool* pool = nullptr, double damping = 0.5, double tol = 1e-13);

} // namespace isleforge
