#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace scrip {

// Fraction of agents at each holdings level. Indexed by level (whole-token
// bucket in most of the harness, base-unit level inside the chain oracle).
struct DistributionVector {
    std::vector<double> p;

    DistributionVector() = default;
    explicit DistributionVector(std::vector<double> values) : p(std::move(values)) {}
    explicit DistributionVector(size_t levels) : p(levels, 0.0) {}

    size_t levels() const { return p.size(); }
    double operator[](size_t i) const { return i < p.size() ? p[i] : 0.0; }

    double sum() const {
        double s = 0;
        for (double x : p) s += x;
        return s;
    }

    bool is_normalized(double eps = 1e-12) const { return std::abs(sum() - 1.0) <= eps; }

    double mean() const {
        double m = 0;
        for (size_t i = 0; i < p.size(); ++i) m += static_cast<double>(i) * p[i];
        return m;
    }

    // Total mass strictly below `level`.
    double mass_below(size_t level) const {
        double m = 0;
        for (size_t i = 0; i < p.size() && i < level; ++i) m += p[i];
        return m;
    }
};

// sqrt(sum of squared per-level differences); the shorter vector is padded
// with zeros.
inline double euclidean_distance(const DistributionVector& a, const DistributionVector& b) {
    size_t levels = std::max(a.levels(), b.levels());
    double s = 0;
    for (size_t i = 0; i < levels; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace scrip
