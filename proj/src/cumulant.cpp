#include "isleforge/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace isleforge {

CumulantEstimate empirical_cumulant(std::span<const double> integrals, std::optional<std::uint64_t> scale_N) {
    if (integrals.empty()) throw std::invalid_argument("empirical_cumulant needs samples");
    const auto n = static_cast<double>(integrals.size());
    double m = 0.0;
    for (double v : integrals) {
        if (!(v >= 0.0)) throw std::invalid_argument("integrals must be nonnegative");
        m += std::exp(-v);
    }
    m /= n;
    if (!(m > 1e-300)) throw DegenerateSample("all exp(-integral) vanish");
    double s2 = 0.0;
    for (double v : integrals) s2 += (std::exp(-v) - m) * (std::exp(-v) - m);
    const double se_m = integrals.size() > 1 ? std::sqrt(s2 / (n - 1.0) / n) : 0.0;
    const double k = scale_N ? static_cast<double>(*scale_N) : 1.0;
    return {std::max(0.0, -k * std::log(m)), k * se_m / m, integrals.size()};
}

double mu_integral(const TestFunction& f, const IntensityMeasure& measure) {
    if (f.h <= 0.0) return 0.0;
    const double hi_cut = measure.kind == IntensityKind::mu_c ? measure.c : f.b;
    auto piece = [&](double lo, double hi, bool flat) {
        lo = std::max(lo, 0.0);
        hi = std::min(hi, hi_cut);
        if (!(hi > lo)) return 0.0;
        if (flat) return (1.0 - std::exp(-f.h)) * (1.0 / std::sqrt(lo) - 1.0 / std::sqrt(hi));
        auto g = [&](double x) { return -std::expm1(-f(x)) * measure.density(x); };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 15, 1e-14);
    };
    return piece(f.a, f.a_top, false) + piece(f.a_top, f.b_top, true) + piece(f.b_top, f.b, false);
}

double rayleigh_laplace(double a) {
    // Exact at 0 so that f = 0 gives RHS(0) = 0 rather than rounding noise.
    if (a == 0.0) return 1.0;
    auto g = [a](double w) { return std::exp(-a * w - 0.5 * w * w) * w; };
    return boost::math::quadrature::gauss<double, 64>::integrate(g, 0.0, 9.0);
}

double cumulant_rhs_fossil(double kappa, const TestFunction& f, const LimitParams& p) {
    const double non_fertile = p.lambda2() * mu_integral(f, {IntensityKind::mu_c, p.c});
    const double theta_scale = std::sqrt(p.c) * p.sigma();
    return non_fertile + p.lambda() * (1.0 - std::exp(-f(p.c)) * rayleigh_laplace(kappa * theta_scale));
}

namespace {

struct RegrowTerms {
    double mu_term;
    std::vector<double> fp;   // f(P) per pool entry
    const PCPool* pool;
};

RegrowTerms regrow_terms(const TestFunction& f, const LimitParams& p, const PCPool& pool) {
    if (pool.samples.empty()) throw std::invalid_argument("PC pool is empty");
    RegrowTerms t{p.lambda2() * mu_integral(f, {IntensityKind::mu, p.c}), {}, &pool};
    t.fp.reserve(pool.samples.size());
    for (const auto& s : pool.samples) t.fp.push_back(f(s.P));
    return t;
}

double regrow_rhs(double kappa, const RegrowTerms& t, const LimitParams& p) {
    double acc = 0.0;
    const auto& s = t.pool->samples;
    for (std::size_t i = 0; i < s.size(); ++i) acc += -std::expm1(-t.fp[i] - kappa * s[i].C);
    return t.mu_term + acc / (static_cast<double>(s.size()) * p.c);
}

double bisect(const std::function<double(double)>& rhs, double upper, double tol) {
    double lo = 0.0;
    if (rhs(0.0) <= 0.0) return 0.0;
    double hi = upper;
    if (hi - rhs(hi) < 0.0) throw NoBracket("cumulant equation has no sign change on [0, " + std::to_string(hi) + "]");
    while (hi - lo > tol * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (mid - rhs(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        if (mid == lo && mid == hi) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double cumulant_rhs_regrow(double kappa, const TestFunction& f, const LimitParams& p, const PCPool& pool) {
    return regrow_rhs(kappa, regrow_terms(f, p, pool), p);
}

double cumulant_residual(double kappa, const TestFunction& f, const LimitParams& p, Model model,
                         const PCPool* pool) {
    if (model == Model::fossil) return kappa - cumulant_rhs_fossil(kappa, f, p);
    if (!pool) throw std::invalid_argument("regrow residual needs a PC pool");
    return kappa - cumulant_rhs_regrow(kappa, f, p, *pool);
}

double solve_cumulant_fossil(const TestFunction& f, const LimitParams& p, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    f.validate();
    p.validate();
    const double upper = p.lambda2() * mu_integral(f, {IntensityKind::mu_c, p.c}) + p.lambda();
    return bisect([&](double k) { return cumulant_rhs_fossil(k, f, p); }, upper, tol);
}

double solve_cumulant_regrow(const TestFunction& f, const LimitParams& p, const PCPool& pool, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
    f.validate();
    p.validate();
    const auto terms = regrow_terms(f, p, pool);
    const double upper = terms.mu_term + 1.0 / p.c;
    return bisect([&](double k) { return regrow_rhs(k, terms, p); }, upper, tol);
}

double solve_cumulant_fixed_point(const TestFunction& f, const LimitParams& p, Model model, const PCPool* pool,
                                  double damping, double tol) {
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
    std::function<double(double)> rhs;
    std::optional<RegrowTerms> terms;
    if (model == Model::fossil) {
        rhs = [&](double k) { return cumulant_rhs_fossil(k, f, p); };
    } else {
        if (!pool) throw std::invalid_argument("regrow fixed point needs a PC pool");
        terms = regrow_terms(f, p, *pool);
        rhs = [&](double k) { return regrow_rhs(k, *terms, p); };
    }
    double k = 0.0;
    for (int it = 0; it < 10'000'000; ++it) {
        const double next = (1.0 - damping) * k + damping * rhs(k);
        if (std::abs(next - k) < tol) return next;
        k = next;
    }
    throw std::runtime_error("fixed-point iteration did not converge");
}

} // namespace isleforge
