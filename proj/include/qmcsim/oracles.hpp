#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "qmcsim/tuning.hpp"

namespace qmcsim {

// Reference implementations used by the reproduction claim table to check
// the production algorithms. Deliberately brute-force and simple.

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Largest number of intervals stabbable by one point, trying every
// endpoint (the optimum of a closed-interval stabbing is at an endpoint).
inline std::size_t brute_force_stab_count(
    const std::vector<FrequencyInterval>& ivals) {
    std::size_t best = 0;
    for (const auto& cand : ivals) {
        for (double x : {cand.lo_ghz, cand.hi_ghz}) {
            std::size_t c = 0;
            for (const auto& iv : ivals) {
                if (iv.contains(x)) ++c;
            }
            best = std::max(best, c);
        }
    }
    return best;
}

// Exhaustive maximum matching by branching on the lowest unmatched vertex.
inline std::size_t brute_force_max_matching(
    const std::vector<std::vector<bool>>& adjacent) {
    const std::size_t n = adjacent.size();
    std::vector<bool> used(n, false);
    std::function<std::size_t(std::size_t)> go = [&](std::size_t v) -> std::size_t {
        while (v < n && used[v]) ++v;
        if (v >= n) return 0;
        used[v] = true;
        std::size_t best = go(v + 1);  // leave v unmatched
        for (std::size_t u = v + 1; u < n; ++u) {
            if (used[u] || !adjacent[v][u]) continue;
            used[u] = true;
            best = std::max(best, 1 + go(v + 1));
            used[u] = false;
        }
        used[v] = false;
        return best;
    };
    return go(0);
}

// Probability that two sampled reachable intervals intersect, by
// Gauss-Legendre quadrature over the two log-uniform strain magnitudes;
// the offset-difference integral is analytic through the normal CDF.
inline double pair_coverage_quadrature(const SpeciesParams& species,
                                       const ActuatorConfig& actuator,
                                       int nodes = 64) {
    const double sigma = fwhm_to_sigma(species.inhom_spread_ghz);
    const double sigma_diff = sigma * std::numbers::sqrt2;
    const double kc = species.strain_k_center_ghz_per_v2;
    const double lo = std::log(kc / std::sqrt(10.0));
    const double hi = std::log(kc * std::sqrt(10.0));

    // Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
    std::vector<double> x(nodes), w(nodes);
    for (int i = 0; i < nodes; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (nodes + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= nodes; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = nodes * (t * p1 - p0) / (t * t - 1.0);
            const double t_new = t - p1 / dp;
            if (std::abs(t_new - t) < 1e-15) {
                t = t_new;
                break;
            }
            t = t_new;
        }
        x[i] = t;
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= nodes; ++k) {
            const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = nodes * (t * p1 - p0) / (t * t - 1.0);
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }

    // Given reaches r1, r2 and a sign combination, the set of offset
    // differences D with intersecting intervals is one interval [A, B].
    auto prob_given = [&](double r1, double r2, int s1, int s2) {
        double a, b;
        if (s1 > 0 && s2 > 0) {
            a = -r2;
            b = r1;
        } else if (s1 > 0 && s2 < 0) {
            a = 0.0;
            b = r1 + r2;
        } else if (s1 < 0 && s2 > 0) {
            a = -(r1 + r2);
            b = 0.0;
        } else {
            a = -r1;
            b = r2;
        }
        return normal_cdf(b / sigma_diff) - normal_cdf(a / sigma_diff);
    };

    double total = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double u1 = 0.5 * (hi - lo) * x[i] + 0.5 * (hi + lo);
        const double k1 = std::exp(u1);
        const double r1 = std::min(k1 * actuator.v_max * actuator.v_max,
                                   actuator.cap_ghz);
        for (int jn = 0; jn < nodes; ++jn) {
            const double u2 = 0.5 * (hi - lo) * x[jn] + 0.5 * (hi + lo);
            const double k2 = std::exp(u2);
            const double r2 = std::min(k2 * actuator.v_max * actuator.v_max,
                                       actuator.cap_ghz);
            double p = 0.0;
            for (int s1 : {+1, -1}) {
                for (int s2 : {+1, -1}) {
                    p += 0.25 * prob_given(r1, r2, s1, s2);
                }
            }
            // log-uniform density is uniform in u; GL weights need the
            // normalized measure du/(hi - lo) for each axis.
            total += w[i] * w[jn] * 0.25 * p;
        }
    }
    return total;
}

}  // namespace qmcsim
