#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "scrip/distribution.hpp"
#include "scrip/error.hpp"

namespace scrip {

// Entropy-maximizing distribution on levels {0..cap} with a fixed mean:
// p(x) proportional to exp(-lambda x), lambda solved by bisection until the
// mean matches to 1e-10. lambda is 0 (uniform) exactly at mean = cap/2 and
// changes sign around it; the boundary means collapse to point masses.
inline DistributionVector max_entropy_distribution(long long cap, double mean) {
    if (cap < 0) throw InfeasibleMean("support must contain level 0");
    const size_t levels = static_cast<size_t>(cap) + 1;
    if (mean < 0.0 || mean > static_cast<double>(cap))
        throw InfeasibleMean("mean outside [0, cap]");

    DistributionVector d(levels);
    if (cap == 0 || mean == 0.0) {
        d.p[0] = 1.0;
        return d;
    }
    if (mean == static_cast<double>(cap)) {
        d.p[levels - 1] = 1.0;
        return d;
    }

    auto fill = [&](double lambda) {
        // exp(-lambda x - logsumexp) keeps the tail stable for large |lambda|.
        double mx = lambda >= 0 ? 0.0 : -lambda * static_cast<double>(cap);
        double z = 0.0;
        for (size_t x = 0; x < levels; ++x) z += std::exp(-lambda * static_cast<double>(x) - mx);
        double logz = std::log(z) + mx;
        double m = 0.0;
        for (size_t x = 0; x < levels; ++x) {
            d.p[x] = std::exp(-lambda * static_cast<double>(x) - logz);
            m += static_cast<double>(x) * d.p[x];
        }
        return m;
    };

    // mean(lambda) decreases from cap to 0; expand until bracketed, then bisect.
    double lo = -1.0, hi = 1.0;
    while (fill(lo) < mean) lo *= 2.0;
    while (fill(hi) > mean) hi *= 2.0;
    double m = fill(0.5 * (lo + hi));
    for (int it = 0; it < 500 && std::abs(m - mean) > 1e-10; ++it) {
        double mid = 0.5 * (lo + hi);
        if (m > mean)
            lo = mid;
        else
            hi = mid;
        m = fill(0.5 * (lo + hi));
    }
    fill(0.5 * (lo + hi));
    return d;
}

}  // namespace scrip
