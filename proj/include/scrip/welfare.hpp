#pragma once

#include "scrip/error.hpp"

namespace scrip {

// Per-round social welfare with and without monitoring, given the cost C the
// system bears for each norm violation that reaches the public.
struct WelfareReport {
    double monitoring_welfare = 0.0;
    double no_monitoring_welfare = 0.0;
    double c_threshold = 0.0;  // violation cost above which monitoring wins
    bool monitoring_preferred = false;
};

inline WelfareReport welfare_inadvertent(double b, double alpha, double violation_cost) {
    WelfareReport r;
    r.no_monitoring_welfare = 1.0 - b * violation_cost;
    r.monitoring_welfare = 1.0 - b - alpha;
    r.c_threshold = (b + alpha) / b;
    r.monitoring_preferred = violation_cost > r.c_threshold;
    return r;
}

inline WelfareReport welfare_strategic(double kappa, double alpha, double violation_cost) {
    if (!(kappa > 1.0)) throw RangeError("kappa must exceed 1");
    WelfareReport r;
    r.no_monitoring_welfare = kappa - violation_cost;
    r.monitoring_welfare = 1.0 - (1.0 - 1.0 / kappa) * alpha;
    r.c_threshold = kappa - 1.0 + (1.0 - 1.0 / kappa) * alpha;
    r.monitoring_preferred = violation_cost > r.c_threshold;
    return r;
}

// Largest average token density that still guarantees a volunteer in every
// posted round when all agents use threshold k.
inline double volunteer_density_bound(int k, int n) {
    if (k < 1 || n < 2) throw RangeError("volunteer bound needs k >= 1, n >= 2");
    return static_cast<double>(k) - static_cast<double>(k - 1) / n;
}

}  // namespace scrip
