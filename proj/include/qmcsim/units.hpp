#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qmcsim {

// 2*sqrt(2*ln 2): FWHM of a Gaussian divided by its sigma.
inline constexpr double kFwhmPerSigma = 2.354820045030949;

// Unit convention across the library: linewidths in MHz, ZPL offsets and
// tuning shifts in GHz, lifetimes and delays in ns, lengths in nm,
// voltages in V. Conversions happen exactly here, at the boundary.

inline double fwhm_to_sigma(double fwhm) {
    if (!(fwhm > 0.0)) {
        throw std::domain_error("fwhm_to_sigma: fwhm must be positive");
    }
    return fwhm / kFwhmPerSigma;
}

inline double sigma_to_fwhm(double sigma) { return sigma * kFwhmPerSigma; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) {
    if (!(ratio > 0.0)) {
        throw std::domain_error("linear_to_db: ratio must be positive");
    }
    return 10.0 * std::log10(ratio);
}

}  // namespace qmcsim
