#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmcsim/csv.hpp"
#include "qmcsim/emitters.hpp"
#include "qmcsim/rng.hpp"
#include "qmcsim/species.hpp"
#include "qmcsim/units.hpp"

namespace qmcsim {

struct ImplantSpec {
    SpeciesParams species;
    double pitch_nm = 1000.0;
    int grid_cols = 8;
    int grid_rows = 1;
    double mean_emitters_per_spot = 2.2;  // lambda, calibrated by chiplet yield
    double stable_fraction = 0.9;

    void validate() const {
        species.validate();
        if (!(pitch_nm > 0.0)) {
            throw std::invalid_argument("ImplantSpec.pitch_nm must be positive");
        }
        if (grid_cols < 1 || grid_rows < 1) {
            throw std::invalid_argument("ImplantSpec grid dims must be >= 1");
        }
        if (!(mean_emitters_per_spot >= 0.0)) {
            throw std::invalid_argument(
                "ImplantSpec.mean_emitters_per_spot must be >= 0");
        }
        if (!(stable_fraction >= 0.0 && stable_fraction <= 1.0)) {
            throw std::invalid_argument(
                "ImplantSpec.stable_fraction must be in [0, 1]");
        }
    }
};

struct ImplantSpot {
    int col = 0;
    int row = 0;
    double nominal_x_nm = 0.0;
    double nominal_y_nm = 0.0;
    std::vector<Emitter> emitters;
};

// Draws everything about one emitter except its position offsets.
// Lifetime: Normal around the species lifetime limit, truncated positive.
// Dephasing: half-normal; ZPL offset: Normal with the species FWHM;
// strain coefficient: log-uniform over a decade, random sign.
inline Emitter sample_emitter(const SpeciesParams& sp, Rng& rng) {
    Emitter e;
    e.species = sp.name;
    const double tau_mean = sp.mean_lifetime_ns();
    e.lifetime_ns = sp.lifetime_rel_sigma > 0.0
                        ? rng.normal_positive(tau_mean,
                                              sp.lifetime_rel_sigma * tau_mean)
                        : tau_mean;
    e.dephasing_mhz =
        sp.dephasing_scale_mhz > 0.0 ? rng.half_normal(sp.dephasing_scale_mhz) : 0.0;
    e.zpl_offset_ghz = rng.normal(0.0, fwhm_to_sigma(sp.inhom_spread_ghz));
    e.beta_ideal = sp.beta_ideal;
    const double kc = sp.strain_k_center_ghz_per_v2;
    const double mag = rng.log_uniform(kc / std::sqrt(10.0), kc * std::sqrt(10.0));
    e.strain_coeff_ghz_per_v2 = rng.bernoulli(0.5) ? mag : -mag;
    return e;
}

// Poisson counts per spot, Gaussian lateral straggle, truncated Gaussian
// depth. Every spot and every emitter has its own substream keyed by
// (seed, col, row[, index]) so parallel generation reproduces sequential
// output, and so the count draw stays fixed when only lambda changes.
inline std::vector<ImplantSpot> generate_spots(const ImplantSpec& spec,
                                               std::uint64_t seed) {
    spec.validate();
    const SpeciesParams& sp = spec.species;
    const double sigma_lat = fwhm_to_sigma(sp.lateral_fwhm_nm);
    std::vector<ImplantSpot> spots;
    spots.reserve(static_cast<std::size_t>(spec.grid_cols) * spec.grid_rows);
    for (int col = 0; col < spec.grid_cols; ++col) {
        for (int row = 0; row < spec.grid_rows; ++row) {
            ImplantSpot spot;
            spot.col = col;
            spot.row = row;
            spot.nominal_x_nm = col * spec.pitch_nm;
            spot.nominal_y_nm = row * spec.pitch_nm;
            const std::uint64_t spot_seed = derive_seed(seed, "spot",
                                                        static_cast<std::uint64_t>(col),
                                                        static_cast<std::uint64_t>(row));
            Rng count_rng(derive_seed(spot_seed, "count"));
            const long long n = count_rng.poisson(spec.mean_emitters_per_spot);
            spot.emitters.reserve(static_cast<std::size_t>(n));
            for (long long k = 0; k < n; ++k) {
                Rng rng(derive_seed(spot_seed, "emitter",
                                    static_cast<std::uint64_t>(k)));
                const double dx = rng.normal(0.0, sigma_lat);
                const double dy = rng.normal(0.0, sigma_lat);
                const double z =
                    rng.normal_positive(sp.implant_depth_nm, sp.straggle_nm);
                const bool stable = rng.bernoulli(spec.stable_fraction);
                Emitter e = sample_emitter(sp, rng);
                e.position_nm = {spot.nominal_x_nm + dx, spot.nominal_y_nm + dy, z};
                e.stable = stable;
                spot.emitters.push_back(e);
            }
            spots.push_back(std::move(spot));
        }
    }
    return spots;
}

struct SpotStatistics {
    double mean_count = 0.0;
    double count_variance = 0.0;
    double depth_mean = 0.0;
    double depth_std = 0.0;
    double lateral_fwhm_est = 0.0;
    double stable_fraction = 0.0;
    long long total_emitters = 0;
};

inline SpotStatistics spot_statistics(const std::vector<ImplantSpot>& spots) {
    if (spots.empty()) {
        throw std::invalid_argument("spot_statistics: empty spot list");
    }
    SpotStatistics s;
    double count_sum = 0.0, count_sq = 0.0;
    double z_sum = 0.0, z_sq = 0.0;
    double lat_sq = 0.0;
    long long n_lat = 0;
    long long n_stable = 0;
    for (const auto& spot : spots) {
        const double c = static_cast<double>(spot.emitters.size());
        count_sum += c;
        count_sq += c * c;
        for (const auto& e : spot.emitters) {
            z_sum += e.position_nm[2];
            z_sq += e.position_nm[2] * e.position_nm[2];
            const double ddx = e.position_nm[0] - spot.nominal_x_nm;
            const double ddy = e.position_nm[1] - spot.nominal_y_nm;
            lat_sq += ddx * ddx + ddy * ddy;
            n_lat += 2;
            if (e.stable) ++n_stable;
        }
        s.total_emitters += static_cast<long long>(spot.emitters.size());
    }
    const double n_spots = static_cast<double>(spots.size());
    s.mean_count = count_sum / n_spots;
    s.count_variance = count_sq / n_spots - s.mean_count * s.mean_count;
    if (s.total_emitters > 0) {
        const double n_e = static_cast<double>(s.total_emitters);
        s.depth_mean = z_sum / n_e;
        s.depth_std = std::sqrt(std::max(0.0, z_sq / n_e - s.depth_mean * s.depth_mean));
        s.lateral_fwhm_est =
            kFwhmPerSigma * std::sqrt(lat_sq / static_cast<double>(n_lat));
        s.stable_fraction = static_cast<double>(n_stable) / n_e;
    }
    return s;
}

inline const std::vector<std::string>& spots_csv_columns() {
    static const std::vector<std::string> cols = {
        "spot_col", "spot_row",  "emitter_idx",  "x_nm",
        "y_nm",     "z_nm",      "stable",       "tau_ns",
        "gamma_d_mhz", "f_offset_ghz", "beta_ideal", "strain_k_ghz_per_v2"};
    return cols;
}

inline void write_spots_csv(const std::string& path,
                            const std::vector<ImplantSpot>& spots) {
    CsvWriter w(path);
    w.header(spots_csv_columns());
    for (const auto& spot : spots) {
        for (std::size_t k = 0; k < spot.emitters.size(); ++k) {
            const Emitter& e = spot.emitters[k];
            w.field(spot.col)
                .field(spot.row)
                .field(static_cast<long long>(k))
                .field(e.position_nm[0])
                .field(e.position_nm[1])
                .field(e.position_nm[2])
                .field(e.stable)
                .field(e.lifetime_ns)
                .field(e.dephasing_mhz)
                .field(e.zpl_offset_ghz)
                .field(e.beta_ideal)
                .field(e.strain_coeff_ghz_per_v2);
            w.end_row();
        }
    }
}

// Rebuilds spots from a CSV written by write_spots_csv. Species-level
// fields that are not serialized (species id, position pitch grid) come
// from the spec argument.
inline std::vector<ImplantSpot> read_spots_csv(const std::string& path,
                                               const ImplantSpec& spec) {
    const CsvTable t = read_csv(path);
    const int c_col = t.column_index("spot_col");
    const int c_row = t.column_index("spot_row");
    const int c_x = t.column_index("x_nm");
    const int c_y = t.column_index("y_nm");
    const int c_z = t.column_index("z_nm");
    const int c_stable = t.column_index("stable");
    const int c_tau = t.column_index("tau_ns");
    const int c_gd = t.column_index("gamma_d_mhz");
    const int c_off = t.column_index("f_offset_ghz");
    const int c_beta = t.column_index("beta_ideal");
    const int c_k = t.column_index("strain_k_ghz_per_v2");

    std::vector<ImplantSpot> spots(
        static_cast<std::size_t>(spec.grid_cols) * spec.grid_rows);
    for (int col = 0; col < spec.grid_cols; ++col) {
        for (int row = 0; row < spec.grid_rows; ++row) {
            ImplantSpot& s = spots[static_cast<std::size_t>(col) * spec.grid_rows + row];
            s.col = col;
            s.row = row;
            s.nominal_x_nm = col * spec.pitch_nm;
            s.nominal_y_nm = row * spec.pitch_nm;
        }
    }
    for (const auto& r : t.rows) {
        const int col = static_cast<int>(parse_int(r[c_col]));
        const int row = static_cast<int>(parse_int(r[c_row]));
        if (col < 0 || col >= spec.grid_cols || row < 0 || row >= spec.grid_rows) {
            throw std::runtime_error("spots csv: spot index outside grid");
        }
        Emitter e;
        e.species = spec.species.name;
        e.position_nm = {parse_double(r[c_x]), parse_double(r[c_y]),
                         parse_double(r[c_z])};
        e.stable = parse_int(r[c_stable]) != 0;
        e.lifetime_ns = parse_double(r[c_tau]);
        e.dephasing_mhz = parse_double(r[c_gd]);
        e.zpl_offset_ghz = parse_double(r[c_off]);
        e.beta_ideal = parse_double(r[c_beta]);
        e.strain_coeff_ghz_per_v2 = parse_double(r[c_k]);
        spots[static_cast<std::size_t>(col) * spec.grid_rows + row].emitters.push_back(e);
    }
    return spots;
}

}  // namespace qmcsim
