#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "isleforge/limits.hpp"

namespace isleforge {

struct ComparisonReport {
    std::string test;
    double statistic = 0.0;
    double p_value = std::numeric_limits<double>::quiet_NaN(); // NaN for z-based tests
    double z = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;
};

// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_sf(double x);

// Upper tail of the chi-square law with df degrees of freedom.
double chi_square_sf(double x, double df);

// Two-sample KS with a permutation p-value, (1 + #{D* >= D}) / (1 + permutations).
// Ties are handled by evaluating the ECDF gap only between distinct values.
ComparisonReport ks_two_sample(std::span<const double> a, std::span<const double> b,
                               std::size_t permutations, std::uint64_t seed, double threshold = 0.01);

// One-sample KS against a continuous CDF, asymptotic p-value with the
// Stephens small-sample correction.
ComparisonReport ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf,
                               double threshold = 0.01);

// Pearson goodness of fit; probs must sum to 1 over the same bins as counts.
ComparisonReport chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs,
                                double threshold);

// Pearson homogeneity test on aligned category counts. Categories whose
// pooled count is below min_pooled are merged into one bin.
ComparisonReport chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                       double threshold, std::uint64_t min_pooled = 10);

// Pass iff |mean - target| <= 3 SE + tolerance_rel * |target|.
ComparisonReport mean_test(std::span<const double> samples, double target, double tolerance_rel);

struct LaplacePoint {
    double alpha = 0.0;
    double beta = 0.0;
};

// One report per grid point: pass iff |emp - target| <= 3 SE + allowance * target.
std::vector<ComparisonReport> laplace_grid_compare(std::span<const PCSample> samples,
                                                   std::span<const LaplacePoint> grid,
                                                   const std::function<double(double, double)>& target,
                                                   double allowance);

// Coordinate-wise permutation KS over flattened prefixes with Bonferroni
// adjustment over the non-degenerate coordinates. Pass iff every adjusted
// p-value exceeds threshold.
ComparisonReport fdd_compare(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                             std::size_t permutations, std::uint64_t seed, double threshold = 0.01);

} // namespace isleforge
