#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qmcsim/assembly.hpp"
#include "qmcsim/chiplet.hpp"
#include "qmcsim/implant.hpp"
#include "qmcsim/spectra.hpp"
#include "qmcsim/tuning.hpp"

namespace qmcsim {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    SpeciesParams species;
    ImplantSpec implant;
    ChipletDesign chiplet;
    AlignmentModel alignment;
    PlacementModel placement;
    TaperModel taper;
    BudgetParams budget;
    ScanConfig scan;
    ActuatorConfig actuator;
    std::uint64_t seed = 42;
    long long trials = 100000;
    std::string output_dir = "out";

    void validate() const {
        try {
            species.validate();
            ImplantSpec i = implant;
            i.species = species;
            i.validate();
            chiplet.validate();
            alignment.validate();
            placement.validate();
            taper.validate();
            scan.validate();
            actuator.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
    }
};

inline RunConfig default_config() {
    RunConfig c;
    c.implant.species = c.species;
    return c;
}

namespace detail {

using json = nlohmann::json;

class SectionReader {
  public:
    SectionReader(const json& j, std::string prefix)
        : j_(j), prefix_(std::move(prefix)) {}

    ~SectionReader() = default;

    double number(const std::string& key, double fallback, double lo,
                  double hi, bool lo_open = false) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) {
            throw ConfigError(prefix_ + key + ": expected a number");
        }
        const double x = v.get<double>();
        const bool lo_ok = lo_open ? x > lo : x >= lo;
        if (!lo_ok || x > hi) {
            throw ConfigError(prefix_ + key + ": value " + format_double(x) +
                              " outside [" + format_double(lo) + ", " +
                              format_double(hi) + "]" +
                              (lo_open ? " (exclusive lower bound)" : ""));
        }
        return x;
    }

    long long integer(const std::string& key, long long fallback, long long lo,
                      long long hi) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(prefix_ + key + ": expected an integer");
        }
        const long long x = v.get<long long>();
        if (x < lo || x > hi) {
            throw ConfigError(prefix_ + key + ": value " + std::to_string(x) +
                              " outside [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "]");
        }
        return x;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        seen_.insert(key);
        if (!j_.contains(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) {
            throw ConfigError(prefix_ + key + ": expected a string");
        }
        return v.get<std::string>();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                throw ConfigError("unknown key: " + prefix_ + key);
            }
        }
    }

  private:
    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

inline const json kEmpty = json::object();

inline const json& section(const json& j, const std::string& name) {
    if (!j.contains(name)) return kEmpty;
    const json& s = j.at(name);
    if (!s.is_object()) {
        throw ConfigError("section " + name + " must be a JSON object");
    }
    return s;
}

}  // namespace detail

// Strict parse: unknown keys are rejected, every numeric field is range
// checked against the owning module's preconditions, and errors name the
// offending key. Missing fields take documented defaults.
inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    RunConfig c = default_config();
    const double inf = std::numeric_limits<double>::infinity();

    {
        detail::SectionReader r(detail::section(j, "species"), "species.");
        const std::string name = r.text("name", "GeV");
        try {
            c.species = species_params(species_from_string(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("species.name: ") + e.what());
        }
        c.species.zpl_wavelength_nm =
            r.number("zpl_wavelength_nm", c.species.zpl_wavelength_nm, 0, inf, true);
        c.species.gamma0_mean_mhz =
            r.number("gamma0_mean_mhz", c.species.gamma0_mean_mhz, 0, inf, true);
        c.species.debye_waller = r.number("debye_waller", c.species.debye_waller,
                                          0, 1, true);
        c.species.inhom_spread_ghz =
            r.number("inhom_spread_ghz", c.species.inhom_spread_ghz, 0, inf, true);
        c.species.implant_depth_nm =
            r.number("implant_depth_nm", c.species.implant_depth_nm, 0, inf, true);
        c.species.straggle_nm =
            r.number("straggle_nm", c.species.straggle_nm, 0, inf, true);
        c.species.lateral_fwhm_nm =
            r.number("lateral_fwhm_nm", c.species.lateral_fwhm_nm, 0, inf, true);
        c.species.lifetime_rel_sigma =
            r.number("lifetime_rel_sigma", c.species.lifetime_rel_sigma, 0, 1);
        c.species.dephasing_scale_mhz =
            r.number("dephasing_scale_mhz", c.species.dephasing_scale_mhz, 0, inf);
        c.species.beta_ideal = r.number("beta_ideal", c.species.beta_ideal, 0, 1);
        c.species.strain_k_center_ghz_per_v2 =
            r.number("strain_k_center_ghz_per_v2",
                     c.species.strain_k_center_ghz_per_v2, 0, inf, true);
        r.finish();
    }
    {
        detail::SectionReader r(detail::section(j, "implant"), "implant.");
        c.implant.pitch_nm = r.number("pitch_nm", c.implant.pitch_nm, 0, inf, true);
        c.implant.grid_cols =
            static_cast<int>(r.integer("grid_cols", c.implant.grid_cols, 1, 4096));
        c.implant.grid_rows =
            static_cast<int>(r.integer("grid_rows", c.implant.grid_rows, 1, 4096));
        c.implant.mean_emitters_per_spot =
            r.number("mean_emitters_per_spot", c.implant.mean_emitters_per_spot,
                     0, 500);
        c.implant.stable_fraction =
            r.number("stable_fraction", c.implant.stable_fraction, 0, 1);
        r.finish();
    }
    {
        detail::SectionReader r(detail::section(j, "chiplet"), "chiplet.");
        c.chiplet.n_channels =
            static_cast<int>(r.integer("n_channels", c.chiplet.n_channels, 1, 4096));
        c.chiplet.waveguide_width_nm =
            r.number("waveguide_width_nm", c.chiplet.waveguide_width_nm, 0, inf, true);
        c.chiplet.waveguide_height_nm =
            r.number("waveguide_height_nm", c.chiplet.waveguide_height_nm, 0, inf, true);
        c.chiplet.channel_pitch_nm =
            r.number("channel_pitch_nm", c.chiplet.channel_pitch_nm, 0, inf, true);
        c.chiplet.min_emitters_per_channel = static_cast<int>(
            r.integer("min_emitters_per_channel", c.chiplet.min_emitters_per_channel,
                      1, 1000));
        c.alignment.sigma_offset_nm =
            r.number("sigma_offset_nm", c.alignment.sigma_offset_nm, 0, inf);
        c.alignment.rotation_mrad_sigma =
            r.number("rotation_mrad_sigma", c.alignment.rotation_mrad_sigma, 0, inf);
        r.finish();
    }
    {
        detail::SectionReader r(detail::section(j, "assembly"), "assembly.");
        c.placement.success_prob =
            r.number("success_prob", c.placement.success_prob, 0, 1);
        c.placement.offset_mean_nm =
            r.number("offset_mean_nm", c.placement.offset_mean_nm, 0, inf);
        c.placement.offset_std_nm =
            r.number("offset_std_nm", c.placement.offset_std_nm, 0, inf);
        c.taper.eta0_by_wavelength_nm[602] =
            r.number("eta0_602", c.taper.eta0_by_wavelength_nm[602], 0, 1, true);
        c.taper.eta0_by_wavelength_nm[737] =
            r.number("eta0_737", c.taper.eta0_by_wavelength_nm[737], 0, 1, true);
        c.taper.rolloff_w_nm =
            r.number("rolloff_w_nm", c.taper.rolloff_w_nm, 0, inf, true);
        c.budget.extra_loss_db =
            r.number("extra_loss_db", c.budget.extra_loss_db, 0, inf);
        r.finish();
    }
    {
        detail::SectionReader r(detail::section(j, "scan"), "scan.");
        c.scan.center_offset_ghz =
            r.number("center_offset_ghz", c.scan.center_offset_ghz, -inf, inf);
        c.scan.span_mhz = r.number("span_mhz", c.scan.span_mhz, 0, inf, true);
        c.scan.n_points =
            static_cast<int>(r.integer("n_points", c.scan.n_points, 5, 100000));
        c.scan.repeats =
            static_cast<int>(r.integer("repeats", c.scan.repeats, 1, 10000000));
        c.scan.peak_rate_cps =
            r.number("peak_rate_cps", c.scan.peak_rate_cps, 0, inf);
        c.scan.background_cps =
            r.number("background_cps", c.scan.background_cps, 0, inf);
        c.scan.dwell_s = r.number("dwell_s", c.scan.dwell_s, 0, inf, true);
        r.finish();
    }
    {
        detail::SectionReader r(detail::section(j, "actuator"), "actuator.");
        c.actuator.v_max = r.number("v_max", c.actuator.v_max, 0, inf, true);
        c.actuator.cap_ghz = r.number("cap_ghz", c.actuator.cap_ghz, 0, inf);
        c.actuator.electrode_gap_um =
            r.number("electrode_gap_um", c.actuator.electrode_gap_um, 0, inf, true);
        r.finish();
    }
    {
        static const std::set<std::string> top_keys = {
            "species", "implant", "chiplet", "assembly",
            "scan",    "actuator", "seed",   "trials",
            "output_dir"};
        for (const auto& [key, value] : j.items()) {
            if (!top_keys.contains(key)) {
                throw ConfigError("unknown key: " + key);
            }
        }
        if (j.contains("seed")) {
            if (!j.at("seed").is_number_integer()) {
                throw ConfigError("seed: expected an integer");
            }
            c.seed = j.at("seed").get<std::uint64_t>();
        }
        if (j.contains("trials")) {
            if (!j.at("trials").is_number_integer()) {
                throw ConfigError("trials: expected an integer");
            }
            c.trials = j.at("trials").get<long long>();
            if (c.trials < 1) throw ConfigError("trials: must be >= 1");
        }
        if (j.contains("output_dir")) {
            if (!j.at("output_dir").is_string()) {
                throw ConfigError("output_dir: expected a string");
            }
            c.output_dir = j.at("output_dir").get<std::string>();
        }
    }

    c.implant.species = c.species;
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config file not found: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace qmcsim
