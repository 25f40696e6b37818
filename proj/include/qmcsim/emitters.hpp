#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qmcsim/species.hpp"

namespace qmcsim {

// Lifetime limit Gamma0 = 1/(2*pi*tau), returned in MHz for tau in ns.
inline double lifetime_limited_linewidth(double tau_ns) {
    if (!(tau_ns > 0.0)) {
        throw std::domain_error(
            "lifetime_limited_linewidth: lifetime must be positive");
    }
    return 1000.0 / (2.0 * std::numbers::pi * tau_ns);
}

// Gamma = Gamma0 + 2*Gamma_d.
inline double total_linewidth(double gamma0_mhz, double gamma_d_mhz) {
    if (!(gamma0_mhz >= 0.0) || !(gamma_d_mhz >= 0.0)) {
        throw std::domain_error("total_linewidth: rates must be non-negative");
    }
    return gamma0_mhz + 2.0 * gamma_d_mhz;
}

struct Emitter {
    Species species = Species::GeV;
    std::array<double, 3> position_nm{0.0, 0.0, 0.0};
    double lifetime_ns = 4.973591971621731;  // GeV lifetime limit, 32 MHz
    double dephasing_mhz = 0.0;
    double zpl_offset_ghz = 0.0;
    double beta_ideal = 0.8;
    double strain_coeff_ghz_per_v2 = 0.0;
    bool stable = true;

    double gamma0_mhz() const { return lifetime_limited_linewidth(lifetime_ns); }
    double gamma_mhz() const {
        return total_linewidth(gamma0_mhz(), dephasing_mhz);
    }
    // Dephasing dilutes the coherent coupling: beta_eff = beta * Gamma0/Gamma.
    double beta_effective() const { return beta_ideal * gamma0_mhz() / gamma_mhz(); }

    void validate() const {
        if (!(lifetime_ns > 0.0)) {
            throw std::invalid_argument("Emitter.lifetime_ns must be positive");
        }
        if (!(dephasing_mhz >= 0.0)) {
            throw std::invalid_argument(
                "Emitter.dephasing_mhz must be non-negative");
        }
        if (!(beta_ideal >= 0.0 && beta_ideal <= 1.0)) {
            throw std::invalid_argument("Emitter.beta_ideal must be in [0, 1]");
        }
    }
};

struct CouplingFigures {
    double transmission_on_resonance = 1.0;  // T in [0, 1]
    double beta_observed = 0.0;              // in [0, 1)
    double cooperativity = 0.0;              // C = beta/(1 - beta)
};

// Inversion of the single-mode extinction relation T = (1 - beta)^2.
inline CouplingFigures extinction_to_coupling(double transmission_on_resonance) {
    const double t = transmission_on_resonance;
    if (!(t > 0.0 && t <= 1.0)) {
        throw std::domain_error(
            "extinction_to_coupling: transmission must be in (0, 1]");
    }
    CouplingFigures f;
    f.transmission_on_resonance = t;
    f.beta_observed = 1.0 - std::sqrt(t);
    f.cooperativity = f.beta_observed / (1.0 - f.beta_observed);
    return f;
}

struct CorrectedBeta {
    double beta_dipole = 0.0;
    bool clamped = false;  // correction exceeded unity and was capped
};

// Undoes residual broadening (Gamma/Gamma0) and the ZPL emission fraction
// to recover the dipole-waveguide efficiency. Reported value is capped at
// 1 with a warning flag; the underlying quantity is a lower bound anyway.
inline CorrectedBeta correct_beta(double beta_observed, double gamma_mhz,
                                  double gamma0_mhz, double debye_waller) {
    if (!(gamma0_mhz > 0.0) || gamma_mhz < gamma0_mhz) {
        throw std::domain_error(
            "correct_beta: requires gamma >= gamma0 > 0 (no unphysical "
            "narrowing)");
    }
    if (!(debye_waller > 0.0 && debye_waller <= 1.0)) {
        throw std::domain_error("correct_beta: debye_waller must be in (0, 1]");
    }
    if (!(beta_observed >= 0.0 && beta_observed < 1.0)) {
        throw std::domain_error("correct_beta: beta_observed must be in [0, 1)");
    }
    CorrectedBeta out;
    out.beta_dipole = beta_observed * (gamma_mhz / gamma0_mhz) / debye_waller;
    if (out.beta_dipole > 1.0) {
        out.beta_dipole = 1.0;
        out.clamped = true;
    }
    return out;
}

// Two-level single-exponential antibunching model.
inline double g2_model(double delay_ns, double g2_zero, double tau_corr_ns) {
    if (!(g2_zero >= 0.0)) {
        throw std::domain_error("g2_model: g2_zero must be non-negative");
    }
    if (!(tau_corr_ns > 0.0)) {
        throw std::domain_error("g2_model: tau_corr must be positive");
    }
    return 1.0 - (1.0 - g2_zero) * std::exp(-std::abs(delay_ns) / tau_corr_ns);
}

// g2(0) floor from uncorrelated background at a given signal-to-background
// ratio: rho = S/(S+B), g2(0) = 1 - rho^2.
inline double background_to_g2(double signal_to_background_db) {
    if (std::isnan(signal_to_background_db)) {
        throw std::domain_error("background_to_g2: input must not be NaN");
    }
    if (std::isinf(signal_to_background_db)) {
        return signal_to_background_db > 0.0 ? 0.0 : 1.0;
    }
    const double sb = std::pow(10.0, signal_to_background_db / 10.0);
    const double rho = sb / (sb + 1.0);
    return 1.0 - rho * rho;
}

// |1 - beta_eff/(1 + 2i*delta/Gamma)|^2; on resonance (1 - beta_eff)^2.
inline double transmission_point(double detuning_mhz, double beta_eff,
                                 double gamma_mhz) {
    if (!(gamma_mhz > 0.0)) {
        throw std::domain_error("transmission_point: linewidth must be positive");
    }
    const std::complex<double> denom(1.0, 2.0 * detuning_mhz / gamma_mhz);
    return std::norm(1.0 - beta_eff / denom);
}

inline std::vector<double> transmission_spectrum(
    const Emitter& emitter, const std::vector<double>& detunings_mhz) {
    const double gamma = emitter.gamma_mhz();
    const double beta_eff = emitter.beta_effective();
    std::vector<double> out;
    out.reserve(detunings_mhz.size());
    for (double d : detunings_mhz) {
        out.push_back(transmission_point(d, beta_eff, gamma));
    }
    return out;
}

}  // namespace qmcsim
