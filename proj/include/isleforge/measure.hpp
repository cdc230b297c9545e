#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace isleforge {

// Trapezoid: 0 on (0,a], rises to h on [a,a'], flat on [a',b'], falls to 0
// on [b',b]. h = 0 gives the zero function.
struct TestFunction {
    double a = 0.0;
    double a_top = 0.0;
    double b_top = 0.0;
    double b = 0.0;
    double h = 0.0;

    double operator()(double x) const {
        if (x <= a || x >= b) return 0.0;
        if (x < a_top) return h * (x - a) / (a_top - a);
        if (x <= b_top) return h;
        return h * (b - x) / (b - b_top);
    }

    // Empty string when valid, else the reason.
    std::string invalid_reason() const;
    void validate() const;
};

// Multiset of positive atoms.
struct RescaledPointMeasure {
    std::vector<double> atoms;

    double integrate(const TestFunction& f) const {
        double s = 0.0;
        for (double x : atoms) s += f(x);
        return s;
    }
};

// Node of a ranked (population, fertility) tree prefix: used for reordered
// forests and for tree-indexed CSBP prefixes.
struct PrefixNode {
    double population = 0.0;
    double fertility = 0.0;
    std::vector<PrefixNode> children;
};

// Coordinates (population, fertility) of the children of the root in the
// complete width-ary tree of the given depth, in breadth-first rank order.
// Absent nodes contribute (0, 0).
std::vector<double> flatten_prefix(const PrefixNode& root, std::size_t depth, std::size_t width);

} // namespace isleforge
