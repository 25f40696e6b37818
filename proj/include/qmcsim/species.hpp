#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace qmcsim {

enum class Species { GeV, SiV };

inline std::string to_string(Species s) {
    return s == Species::GeV ? "GeV" : "SiV";
}

inline Species species_from_string(const std::string& s) {
    if (s == "GeV") return Species::GeV;
    if (s == "SiV") return Species::SiV;
    throw std::invalid_argument("unknown species: " + s);
}

// Half-normal scale that puts the mean normalised linewidth
// Gamma/Gamma0 = 1 + 2*E[Gamma_d]/Gamma0 at ratio_mean.
inline double dephasing_scale_for_ratio(double gamma0_mean_mhz,
                                        double ratio_mean) {
    return (ratio_mean - 1.0) / 2.0 * gamma0_mean_mhz *
           std::sqrt(std::numbers::pi / 2.0);
}

// Per-species physical constants plus the population-sampling knobs the
// generators use. The sampling fields are simulator parameters, not
// measured constants; defaults are chosen so generated populations match
// the reported chiplet statistics.
struct SpeciesParams {
    Species name = Species::GeV;
    double zpl_wavelength_nm = 602.0;
    double gamma0_mean_mhz = 32.0;
    double debye_waller = 0.6;
    double inhom_spread_ghz = 85.0;  // FWHM of the ZPL centre distribution
    double implant_depth_nm = 74.0;
    double straggle_nm = 12.0;
    double lateral_fwhm_nm = 40.0;

    // Population model (see implant generator).
    double lifetime_rel_sigma = 0.10;
    double dephasing_scale_mhz = dephasing_scale_for_ratio(32.0, 1.7);
    double beta_ideal = 0.8;
    double strain_k_center_ghz_per_v2 = 0.0167;

    double mean_lifetime_ns() const {
        return 1000.0 / (2.0 * std::numbers::pi * gamma0_mean_mhz);
    }

    void validate() const {
        auto positive = [](double v, const char* field) {
            if (!(v > 0.0)) {
                throw std::invalid_argument(std::string("SpeciesParams.") +
                                            field + " must be positive");
            }
        };
        positive(zpl_wavelength_nm, "zpl_wavelength_nm");
        positive(gamma0_mean_mhz, "gamma0_mean_mhz");
        positive(inhom_spread_ghz, "inhom_spread_ghz");
        positive(implant_depth_nm, "implant_depth_nm");
        positive(straggle_nm, "straggle_nm");
        positive(lateral_fwhm_nm, "lateral_fwhm_nm");
        positive(strain_k_center_ghz_per_v2, "strain_k_center_ghz_per_v2");
        if (!(debye_waller > 0.0 && debye_waller <= 1.0)) {
            throw std::invalid_argument(
                "SpeciesParams.debye_waller must be in (0, 1]");
        }
        if (!(lifetime_rel_sigma >= 0.0) || !(dephasing_scale_mhz >= 0.0)) {
            throw std::invalid_argument(
                "SpeciesParams sampling scales must be non-negative");
        }
        if (!(beta_ideal >= 0.0 && beta_ideal <= 1.0)) {
            throw std::invalid_argument(
                "SpeciesParams.beta_ideal must be in [0, 1]");
        }
    }
};

inline SpeciesParams gev_params() { return SpeciesParams{}; }

inline SpeciesParams siv_params() {
    SpeciesParams p;
    p.name = Species::SiV;
    p.zpl_wavelength_nm = 737.0;
    p.gamma0_mean_mhz = 93.0;
    p.debye_waller = 0.7;
    p.inhom_spread_ghz = 30.0;
    p.implant_depth_nm = 113.0;
    p.straggle_nm = 19.0;
    p.lateral_fwhm_nm = 50.0;
    p.dephasing_scale_mhz = dephasing_scale_for_ratio(93.0, 1.6);
    return p;
}

inline SpeciesParams species_params(Species s) {
    return s == Species::GeV ? gev_params() : siv_params();
}

}  // namespace qmcsim
