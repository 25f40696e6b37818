#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmcsim/csv.hpp"
#include "qmcsim/emitters.hpp"
#include "qmcsim/rng.hpp"
#include "qmcsim/species.hpp"
#include "qmcsim/units.hpp"

namespace qmcsim {

struct ActuatorConfig {
    double v_max = 80.0;
    double cap_ghz = 100.0;       // stiction-limited maximum |shift|
    double electrode_gap_um = 1.5;  // reporting only

    void validate() const {
        if (!(v_max > 0.0)) {
            throw std::invalid_argument("ActuatorConfig.v_max must be positive");
        }
        if (!(cap_ghz >= 0.0)) {
            throw std::invalid_argument("ActuatorConfig.cap_ghz must be >= 0");
        }
    }
};

// Quadratic electrostatic strain response with a hard stiction cap:
// f(V) = f0 + sign(k) * min(|k| V^2, cap).
inline double strained_frequency(double f0_ghz, double k_ghz_per_v2, double v,
                                 double cap_ghz) {
    if (!(v >= 0.0)) {
        throw std::domain_error("strained_frequency: voltage must be >= 0");
    }
    const double shift = std::min(std::abs(k_ghz_per_v2) * v * v, cap_ghz);
    return f0_ghz + std::copysign(shift, k_ghz_per_v2);
}

inline double strained_frequency(const Emitter& e, double v,
                                 const ActuatorConfig& actuator) {
    return strained_frequency(e.zpl_offset_ghz, e.strain_coeff_ghz_per_v2, v,
                              actuator.cap_ghz);
}

struct Crossing {
    enum class Status { ok, parallel, diverging, beyond_vmax, cap_clamped };
    Status status = Status::ok;
    double voltage = 0.0;

    bool ok() const { return status == Status::ok; }
};

inline std::string to_string(Crossing::Status s) {
    switch (s) {
        case Crossing::Status::ok: return "ok";
        case Crossing::Status::parallel: return "parallel";
        case Crossing::Status::diverging: return "diverging";
        case Crossing::Status::beyond_vmax: return "beyond_vmax";
        case Crossing::Status::cap_clamped: return "cap_clamped";
    }
    return "?";
}

// Shared-voltage crossing: f_i + k_i V^2 = f_j + k_j V^2. Valid only when
// the solution lies within the voltage range and neither emitter has hit
// its stiction cap below that voltage.
inline Crossing crossing_voltage(const Emitter& e_i, const Emitter& e_j,
                                 const ActuatorConfig& actuator) {
    actuator.validate();
    const double df = e_j.zpl_offset_ghz - e_i.zpl_offset_ghz;
    const double dk = e_i.strain_coeff_ghz_per_v2 - e_j.strain_coeff_ghz_per_v2;
    if (df == 0.0) return {Crossing::Status::ok, 0.0};
    if (dk == 0.0) return {Crossing::Status::parallel, 0.0};
    const double v_sq = df / dk;
    if (v_sq < 0.0) return {Crossing::Status::diverging, 0.0};
    const double v = std::sqrt(v_sq);
    if (v > actuator.v_max) return {Crossing::Status::beyond_vmax, v};
    if (std::abs(e_i.strain_coeff_ghz_per_v2) * v_sq > actuator.cap_ghz ||
        std::abs(e_j.strain_coeff_ghz_per_v2) * v_sq > actuator.cap_ghz) {
        return {Crossing::Status::cap_clamped, v};
    }
    return {Crossing::Status::ok, v};
}

struct FrequencyInterval {
    double lo_ghz = 0.0;
    double hi_ghz = 0.0;

    bool contains(double f) const { return lo_ghz <= f && f <= hi_ghz; }
    bool intersects(const FrequencyInterval& o) const {
        return lo_ghz <= o.hi_ghz && o.lo_ghz <= hi_ghz;
    }
};

// One-sided reach from f0: the sign of k fixes the direction, the cap and
// the voltage range limit the magnitude.
inline FrequencyInterval reachable_interval(const Emitter& e,
                                            const ActuatorConfig& actuator) {
    actuator.validate();
    const double f0 = e.zpl_offset_ghz;
    const double f1 = strained_frequency(e, actuator.v_max, actuator);
    return {std::min(f0, f1), std::max(f0, f1)};
}

struct TuningPlanMember {
    std::size_t emitter_index = 0;
    double f0_ghz = 0.0;
    double k_ghz_per_v2 = 0.0;
    double voltage = 0.0;
};

struct TuningPlan {
    double target_freq_ghz = 0.0;
    std::vector<TuningPlanMember> members;

    std::size_t size() const { return members.size(); }

    // Re-verification pass: every member must land on the target within
    // 1e-6 GHz at a voltage inside [0, v_max].
    void verify(const ActuatorConfig& actuator) const {
        for (const auto& m : members) {
            if (!(m.voltage >= 0.0 && m.voltage <= actuator.v_max)) {
                throw std::logic_error("TuningPlan: voltage out of range");
            }
            const double f = strained_frequency(m.f0_ghz, m.k_ghz_per_v2,
                                                m.voltage, actuator.cap_ghz);
            if (std::abs(f - target_freq_ghz) > 1e-6) {
                throw std::logic_error("TuningPlan: member misses target");
            }
        }
    }
};

namespace detail {

// Voltage that moves (f0, k) onto target; target must lie inside the
// emitter's reachable interval.
inline double voltage_for_target(double f0, double k, double target,
                                 const ActuatorConfig& actuator) {
    const double delta = target - f0;
    if (delta == 0.0) return 0.0;
    const double need = std::abs(delta);
    const double v = std::sqrt(need / std::abs(k));
    return std::min(v, actuator.v_max);
}

}  // namespace detail

// The frequency stabbing the maximum number of reachable intervals, by an
// endpoint sweep over interval starts; ties go to the lowest frequency.
// For closed intervals the optimum is always attained at some interval's
// lower endpoint.
inline TuningPlan max_mutually_resonant_set(std::span<const Emitter> emitters,
                                            const ActuatorConfig& actuator) {
    if (emitters.empty()) {
        throw std::invalid_argument("max_mutually_resonant_set: no emitters");
    }
    const std::size_t n = emitters.size();
    std::vector<FrequencyInterval> ivals(n);
    std::vector<double> los(n), his(n);
    for (std::size_t i = 0; i < n; ++i) {
        ivals[i] = reachable_interval(emitters[i], actuator);
        los[i] = ivals[i].lo_ghz;
        his[i] = ivals[i].hi_ghz;
    }
    std::vector<double> lo_sorted = los, hi_sorted = his;
    std::sort(lo_sorted.begin(), lo_sorted.end());
    std::sort(hi_sorted.begin(), hi_sorted.end());

    // count(x) = #{lo_i <= x} - #{hi_i < x}
    auto active_at = [&](double x) {
        const auto n_lo = std::upper_bound(lo_sorted.begin(), lo_sorted.end(), x) -
                          lo_sorted.begin();
        const auto n_hi = std::lower_bound(hi_sorted.begin(), hi_sorted.end(), x) -
                          hi_sorted.begin();
        return static_cast<long>(n_lo - n_hi);
    };

    double best_f = lo_sorted.front();
    long best_count = 0;
    for (double x : lo_sorted) {
        const long c = active_at(x);
        if (c > best_count) {  // strict: first (lowest) maximum wins
            best_count = c;
            best_f = x;
        }
    }

    TuningPlan plan;
    plan.target_freq_ghz = best_f;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ivals[i].contains(best_f)) continue;
        TuningPlanMember m;
        m.emitter_index = i;
        m.f0_ghz = emitters[i].zpl_offset_ghz;
        m.k_ghz_per_v2 = emitters[i].strain_coeff_ghz_per_v2;
        m.voltage = detail::voltage_for_target(m.f0_ghz, m.k_ghz_per_v2, best_f,
                                               actuator);
        plan.members.push_back(m);
    }
    plan.verify(actuator);
    return plan;
}

// Maximum-cardinality matching on the interval-intersection graph.
// Intervals are processed by increasing right endpoint; when one closes
// unmatched it pairs with the alive unmatched interval that dies soonest.
// An exchange argument shows this greedy is optimal on interval graphs;
// the tests verify it against an exhaustive oracle.
inline std::vector<std::pair<std::size_t, std::size_t>> max_resonant_pairs(
    std::span<const Emitter> emitters, const ActuatorConfig& actuator) {
    if (emitters.empty()) {
        throw std::invalid_argument("max_resonant_pairs: no emitters");
    }
    const std::size_t n = emitters.size();
    std::vector<FrequencyInterval> ivals(n);
    for (std::size_t i = 0; i < n; ++i) {
        ivals[i] = reachable_interval(emitters[i], actuator);
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (ivals[a].hi_ghz != ivals[b].hi_ghz) {
            return ivals[a].hi_ghz < ivals[b].hi_ghz;
        }
        if (ivals[a].lo_ghz != ivals[b].lo_ghz) {
            return ivals[a].lo_ghz < ivals[b].lo_ghz;
        }
        return a < b;
    });

    std::vector<bool> matched(n, false);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t oi = 0; oi < n; ++oi) {
        const std::size_t i = order[oi];
        if (matched[i]) continue;
        const double close = ivals[i].hi_ghz;
        std::size_t best = n;
        for (std::size_t oj = 0; oj < n; ++oj) {
            const std::size_t j = order[oj];
            if (j == i || matched[j]) continue;
            if (ivals[j].lo_ghz <= close && ivals[j].hi_ghz >= close) {
                if (best == n || ivals[j].hi_ghz < ivals[best].hi_ghz) best = j;
            }
        }
        if (best != n) {
            matched[i] = matched[best] = true;
            pairs.emplace_back(std::min(i, best), std::max(i, best));
        }
    }
    return pairs;
}

// ZPL centre offsets: Normal with FWHM = inhom_spread_ghz.
inline std::vector<double> sample_inhomogeneous(const SpeciesParams& species,
                                                long long n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("sample_inhomogeneous: n must be >= 1");
    }
    const double sigma = fwhm_to_sigma(species.inhom_spread_ghz);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    Rng rng(derive_seed(seed, "inhom"));
    for (long long i = 0; i < n; ++i) out.push_back(rng.normal(0.0, sigma));
    return out;
}

// Log-uniform magnitude over a decade around the species centre value,
// random sign (orientation-dependent strain response).
inline double sample_strain_coeff(const SpeciesParams& species, Rng& rng) {
    const double kc = species.strain_k_center_ghz_per_v2;
    const double mag = rng.log_uniform(kc / std::sqrt(10.0), kc * std::sqrt(10.0));
    return rng.bernoulli(0.5) ? mag : -mag;
}

// Probability that a random emitter pair can be tuned into mutual
// resonance: Monte Carlo over offset pairs and strain coefficients.
inline double pair_coverage(const SpeciesParams& species,
                            const ActuatorConfig& actuator, long long trials,
                            std::uint64_t seed) {
    if (trials < 1) {
        throw std::invalid_argument("pair_coverage: trials must be >= 1");
    }
    actuator.validate();
    const double sigma = fwhm_to_sigma(species.inhom_spread_ghz);
    long long hits = 0;
    for (long long t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, "pair", static_cast<std::uint64_t>(t)));
        Emitter a, b;
        a.zpl_offset_ghz = rng.normal(0.0, sigma);
        a.strain_coeff_ghz_per_v2 = sample_strain_coeff(species, rng);
        b.zpl_offset_ghz = rng.normal(0.0, sigma);
        b.strain_coeff_ghz_per_v2 = sample_strain_coeff(species, rng);
        if (reachable_interval(a, actuator)
                .intersects(reachable_interval(b, actuator))) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

inline void write_tuning_plan_csv(const std::string& path, const TuningPlan& plan) {
    CsvWriter w(path);
    w.header({"emitter_id", "f0_ghz", "k_ghz_per_v2", "voltage",
              "f_target_ghz"});
    for (const auto& m : plan.members) {
        w.field(static_cast<long long>(m.emitter_index))
            .field(m.f0_ghz)
            .field(m.k_ghz_per_v2)
            .field(m.voltage)
            .field(plan.target_freq_ghz);
        w.end_row();
    }
}

}  // namespace qmcsim
