#include "isleforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "isleforge/random.hpp"

namespace isleforge {

double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

namespace {

// Sorted pooled sample with a group index marking runs of equal values.
struct Pooled {
    std::vector<std::uint8_t> labels;     // 0 = a, 1 = b, in sorted order
    std::vector<std::uint32_t> group_end; // one-past-end index of each tie group
};

Pooled pool(std::span<const double> a, std::span<const double> b) {
    std::vector<std::pair<double, std::uint8_t>> v;
    v.reserve(a.size() + b.size());
    for (double x : a) v.emplace_back(x, 0);
    for (double x : b) v.emplace_back(x, 1);
    std::sort(v.begin(), v.end());
    Pooled p;
    p.labels.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        p.labels.push_back(v[i].second);
        if (i + 1 == v.size() || v[i + 1].first != v[i].first) p.group_end.push_back(static_cast<std::uint32_t>(i + 1));
    }
    return p;
}

// max |na' nb - nb' na| over group ends (scaled KS statistic, exact integers).
std::int64_t scaled_ks(const std::vector<std::uint8_t>& labels, const std::vector<std::uint32_t>& ends,
                       std::int64_t na, std::int64_t nb) {
    std::int64_t ca = 0, cb = 0, best = 0;
    std::size_t i = 0;
    for (std::uint32_t e : ends) {
        for (; i < e; ++i) (labels[i] ? cb : ca) += 1;
        best = std::max(best, std::abs(ca * nb - cb * na));
    }
    return best;
}

std::uint64_t bounded(RandomStream& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

} // namespace

ComparisonReport ks_two_sample(std::span<const double> a, std::span<const double> b, std::size_t permutations,
                               std::uint64_t seed, double threshold) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample needs two nonempty samples");
    if (permutations < 999) throw std::invalid_argument("ks_two_sample needs at least 999 permutations");
    const auto na = static_cast<std::int64_t>(a.size()), nb = static_cast<std::int64_t>(b.size());
    auto p = pool(a, b);
    const std::int64_t observed = scaled_ks(p.labels, p.group_end, na, nb);
    RandomStream rng(seed, 0x6b73);
    std::size_t at_least = 0;
    auto labels = p.labels;
    for (std::size_t k = 0; k < permutations; ++k) {
        for (std::size_t i = labels.size() - 1; i > 0; --i) std::swap(labels[i], labels[bounded(rng, i + 1)]);
        if (scaled_ks(labels, p.group_end, na, nb) >= observed) ++at_least;
    }
    ComparisonReport r;
    r.test = "ks_two_sample";
    r.statistic = static_cast<double>(observed) / static_cast<double>(na * nb);
    r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + permutations);
    r.n_a = a.size();
    r.n_b = b.size();
    r.threshold = threshold;
    r.pass = r.p_value > threshold;
    return r;
}

ComparisonReport ks_one_sample(std::span<const double> a, const std::function<double(double)>& cdf,
                               double threshold) {
    if (a.empty()) throw std::invalid_argument("ks_one_sample needs a nonempty sample");
    std::vector<double> x(a.begin(), a.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    ComparisonReport r;
    r.test = "ks_one_sample";
    r.statistic = d;
    r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    r.n_a = x.size();
    r.threshold = threshold;
    r.pass = r.p_value > threshold;
    return r;
}

ComparisonReport chi_square_gof(std::span<const std::uint64_t> counts, std::span<const double> probs,
                                double threshold) {
    if (counts.size() != probs.size() || counts.size() < 2)
        throw std::invalid_argument("chi_square_gof needs matching bins (at least two)");
    const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
    double x2 = 0.0;
    std::size_t bins = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = n * probs[i];
        if (e <= 0.0) {
            if (counts[i] > 0) x2 = std::numeric_limits<double>::infinity();
            continue;
        }
        x2 += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
        ++bins;
    }
    ComparisonReport r;
    r.test = "chi_square_gof";
    r.statistic = x2;
    r.p_value = std::isfinite(x2) ? chi_square_sf(x2, static_cast<double>(bins - 1)) : 0.0;
    r.n_a = static_cast<std::size_t>(n);
    r.threshold = threshold;
    r.pass = r.p_value > threshold;
    return r;
}

ComparisonReport chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                       double threshold, std::uint64_t min_pooled) {
    if (a.size() != b.size()) throw std::invalid_argument("chi_square_two_sample needs aligned categories");
    std::vector<std::pair<double, double>> bins;
    std::pair<double, double> rest{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] + b[i] >= min_pooled)
            bins.emplace_back(static_cast<double>(a[i]), static_cast<double>(b[i]));
        else {
            rest.first += static_cast<double>(a[i]);
            rest.second += static_cast<double>(b[i]);
        }
    }
    if (rest.first + rest.second > 0.0) bins.push_back(rest);
    double na = 0.0, nb = 0.0;
    for (const auto& [x, y] : bins) {
        na += x;
        nb += y;
    }
    double x2 = 0.0;
    for (const auto& [x, y] : bins) {
        const double tot = x + y;
        const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
        x2 += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    ComparisonReport r;
    r.test = "chi_square_two_sample";
    r.statistic = x2;
    r.p_value = bins.size() < 2 ? 1.0 : chi_square_sf(x2, static_cast<double>(bins.size() - 1));
    r.n_a = static_cast<std::size_t>(na);
    r.n_b = static_cast<std::size_t>(nb);
    r.threshold = threshold;
    r.pass = r.p_value > threshold;
    return r;
}

ComparisonReport mean_test(std::span<const double> samples, double target, double tolerance_rel) {
    if (samples.empty()) throw std::invalid_argument("mean_test needs a nonempty sample");
    const double n = static_cast<double>(samples.size());
    double m = 0.0;
    for (double x : samples) m += x;
    m /= n;
    double s2 = 0.0;
    for (double x : samples) s2 += (x - m) * (x - m);
    const double se = samples.size() > 1 ? std::sqrt(s2 / (n - 1.0) / n) : 0.0;
    ComparisonReport r;
    r.test = "mean_test";
    r.statistic = m;
    r.z = se > 0.0 ? (m - target) / se : (m == target ? 0.0 : std::copysign(INFINITY, m - target));
    r.n_a = samples.size();
    r.threshold = tolerance_rel;
    r.pass = std::abs(m - target) <= 3.0 * se + tolerance_rel * std::abs(target);
    std::ostringstream os;
    os.precision(6);
    os << "mean " << m << " +- " << se << " vs target " << target;
    r.detail = os.str();
    return r;
}

std::vector<ComparisonReport> laplace_grid_compare(std::span<const PCSample> samples,
                                                   std::span<const LaplacePoint> grid,
                                                   const std::function<double(double, double)>& target,
                                                   double allowance) {
    if (samples.empty()) throw std::invalid_argument("laplace_grid_compare needs samples");
    std::vector<ComparisonReport> out;
    const double n = static_cast<double>(samples.size());
    for (const auto& g : grid) {
        if (g.alpha < 0.0 || g.beta < 0.0) throw std::invalid_argument("grid points must be nonnegative");
        double m = 0.0, m2 = 0.0;
        for (const auto& s : samples) {
            const double e = std::exp(-g.alpha * s.P - g.beta * s.C);
            m += e;
            m2 += e * e;
        }
        m /= n;
        const double var = std::max(0.0, m2 / n - m * m) * n / std::max(1.0, n - 1.0);
        const double se = std::sqrt(var / n);
        const double t = target(g.alpha, g.beta);
        ComparisonReport r;
        r.test = "laplace_grid";
        r.statistic = m;
        r.z = se > 0.0 ? (m - t) / se : 0.0;
        r.n_a = samples.size();
        r.threshold = allowance;
        r.pass = std::abs(m - t) <= 3.0 * se + allowance * t;
        std::ostringstream os;
        os.precision(6);
        os << "(alpha=" << g.alpha << ", beta=" << g.beta << ") empirical " << m << " +- " << se << " target " << t;
        r.detail = os.str();
        out.push_back(r);
    }
    return out;
}

ComparisonReport fdd_compare(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                             std::size_t permutations, std::uint64_t seed, double threshold) {
    if (a.empty() || b.empty()) throw std::invalid_argument("fdd_compare needs two nonempty samples");
    const std::size_t dim = a.front().size();
    for (const auto& v : a)
        if (v.size() != dim) throw std::invalid_argument("prefix dimensions differ");
    for (const auto& v : b)
        if (v.size() != dim) throw std::invalid_argument("prefix dimensions differ");

    std::vector<ComparisonReport> per;
    std::vector<std::size_t> coord;
    for (std::size_t j = 0; j < dim; ++j) {
        std::vector<double> x, y;
        for (const auto& v : a) x.push_back(v[j]);
        for (const auto& v : b) y.push_back(v[j]);
        const bool degenerate = std::all_of(x.begin(), x.end(), [&](double t) { return t == x[0]; }) &&
                                std::all_of(y.begin(), y.end(), [&](double t) { return t == x[0]; });
        if (degenerate) continue;
        per.push_back(ks_two_sample(x, y, permutations, seed + 7919 * j, threshold));
        coord.push_back(j);
    }
    ComparisonReport r;
    r.test = "fdd_compare";
    r.n_a = a.size();
    r.n_b = b.size();
    r.threshold = threshold;
    r.p_value = 1.0;
    r.pass = true;
    std::ostringstream os;
    os.precision(4);
    const double m = static_cast<double>(per.size());
    for (std::size_t i = 0; i < per.size(); ++i) {
        // At the permutation floor the Bonferroni factor alone can exceed the
        // threshold; the asymptotic tail (conservative under ties) resolves it.
        double p = per[i].p_value;
        if (p <= 1.0 / static_cast<double>(permutations + 1)) {
            const double na = static_cast<double>(per[i].n_a), nb = static_cast<double>(per[i].n_b);
            p = std::min(p, kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * per[i].statistic));
        }
        const double adj = std::min(1.0, p * m);
        r.statistic = std::max(r.statistic, per[i].statistic);
        r.p_value = std::min(r.p_value, adj);
        if (!(adj > threshold)) r.pass = false;
        os << (i ? " " : "") << "c" << coord[i] << ":D=" << per[i].statistic << ",p_adj=" << adj;
    }
    r.detail = os.str();
    return r;
}

} // namespace isleforge
