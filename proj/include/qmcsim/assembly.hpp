#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmcsim/csv.hpp"
#include "qmcsim/rng.hpp"
#include "qmcsim/units.hpp"

namespace qmcsim {

// Gaussian mode-overlap roll-off of the inverse-taper coupling versus
// transverse offset: eta = eta0 * exp(-(offset/w)^2).
struct TaperModel {
    std::map<int, double> eta0_by_wavelength_nm{{602, 0.97}, {737, 0.98}};
    double rolloff_w_nm = 117.06973974092183;  // calibrated: 10% drop at 38 nm

    void validate() const {
        if (eta0_by_wavelength_nm.empty()) {
            throw std::invalid_argument("TaperModel: empty efficiency map");
        }
        for (const auto& [wl, eta] : eta0_by_wavelength_nm) {
            if (!(eta > 0.0 && eta <= 1.0)) {
                throw std::invalid_argument(
                    "TaperModel: eta0 at " + std::to_string(wl) +
                    " nm must be in (0, 1]");
            }
        }
        if (!(rolloff_w_nm > 0.0)) {
            throw std::invalid_argument("TaperModel.rolloff_w_nm must be positive");
        }
    }
};

// Solves exp(-(offset_ref/w)^2) = 1 - drop for w.
inline double calibrate_rolloff(double offset_ref_nm, double drop_fraction) {
    if (!(offset_ref_nm > 0.0)) {
        throw std::domain_error("calibrate_rolloff: offset_ref must be positive");
    }
    if (!(drop_fraction > 0.0 && drop_fraction < 1.0)) {
        throw std::domain_error("calibrate_rolloff: drop must be in (0, 1)");
    }
    return offset_ref_nm / std::sqrt(std::log(1.0 / (1.0 - drop_fraction)));
}

inline double coupling_efficiency(double offset_nm, const TaperModel& taper,
                                  int wavelength_nm) {
    if (!(offset_nm >= 0.0)) {
        throw std::domain_error("coupling_efficiency: offset must be >= 0");
    }
    const auto it = taper.eta0_by_wavelength_nm.find(wavelength_nm);
    if (it == taper.eta0_by_wavelength_nm.end()) {
        throw std::out_of_range("coupling_efficiency: no taper efficiency at " +
                                std::to_string(wavelength_nm) + " nm");
    }
    const double ratio = offset_nm / taper.rolloff_w_nm;
    return it->second * std::exp(-ratio * ratio);
}

struct PlacementModel {
    double success_prob = 0.90;
    double offset_mean_nm = 38.0;
    double offset_std_nm = 16.0;

    void validate() const {
        if (!(success_prob >= 0.0 && success_prob <= 1.0)) {
            throw std::invalid_argument(
                "PlacementModel.success_prob must be in [0, 1]");
        }
        if (!(offset_std_nm >= 0.0)) {
            throw std::invalid_argument("PlacementModel.offset_std_nm must be >= 0");
        }
    }
};

// End-to-end ZPL photon budget: dipole coupling, ZPL fraction, coherent
// fraction, taper transmission, and any lumped extra loss in dB.
inline double channel_budget(double beta_dipole, double debye_waller,
                             double gamma0_mhz, double gamma_mhz,
                             double eta_taper, double extra_loss_db) {
    if (!(beta_dipole >= 0.0 && beta_dipole <= 1.0) ||
        !(debye_waller > 0.0 && debye_waller <= 1.0) ||
        !(eta_taper >= 0.0 && eta_taper <= 1.0)) {
        throw std::domain_error("channel_budget: factors out of range");
    }
    if (!(gamma0_mhz > 0.0) || gamma_mhz < gamma0_mhz) {
        throw std::domain_error("channel_budget: requires gamma >= gamma0 > 0");
    }
    return beta_dipole * debye_waller * (gamma0_mhz / gamma_mhz) * eta_taper *
           std::pow(10.0, -extra_loss_db / 10.0);
}

struct BudgetParams {
    double beta_dipole = 0.8;
    double debye_waller = 0.6;
    double gamma0_mhz = 24.0;
    double gamma_mhz = 24.0;
    double extra_loss_db = 0.0;
    int wavelength_nm = 602;
};

struct SocketResult {
    long long socket_id = 0;
    bool placed = false;
    // Signed transverse placement error; Normal(mean, std). The magnitude
    // enters the taper roll-off.
    double offset_nm = 0.0;
    double eta_602 = 0.0;
    double eta_737 = 0.0;
    double budget = 0.0;
};

inline std::vector<SocketResult> simulate_assembly(
    long long sockets, const PlacementModel& placement, const TaperModel& taper,
    std::uint64_t seed, const BudgetParams& budget = {}) {
    placement.validate();
    taper.validate();
    if (sockets < 1) {
        throw std::invalid_argument("simulate_assembly: sockets must be >= 1");
    }
    std::vector<SocketResult> out;
    out.reserve(static_cast<std::size_t>(sockets));
    for (long long i = 0; i < sockets; ++i) {
        Rng rng(derive_seed(seed, "socket", static_cast<std::uint64_t>(i)));
        SocketResult r;
        r.socket_id = i;
        r.placed = rng.bernoulli(placement.success_prob);
        if (r.placed) {
            r.offset_nm =
                rng.normal(placement.offset_mean_nm, placement.offset_std_nm);
            const double mag = std::abs(r.offset_nm);
            r.eta_602 = coupling_efficiency(mag, taper, 602);
            r.eta_737 = coupling_efficiency(mag, taper, 737);
            const double eta =
                coupling_efficiency(mag, taper, budget.wavelength_nm);
            r.budget = channel_budget(budget.beta_dipole, budget.debye_waller,
                                      budget.gamma0_mhz, budget.gamma_mhz, eta,
                                      budget.extra_loss_db);
        } else {
            r.offset_nm = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(r);
    }
    return out;
}

inline void write_assembly_csv(const std::string& path,
                               const std::vector<SocketResult>& sockets) {
    CsvWriter w(path);
    w.header({"socket_id", "placed", "offset_nm", "eta_602", "eta_737", "budget"});
    for (const auto& r : sockets) {
        w.field(r.socket_id)
            .field(r.placed)
            .field(r.offset_nm)
            .field(r.eta_602)
            .field(r.eta_737)
            .field(r.budget);
        w.end_row();
    }
}

}  // namespace qmcsim
