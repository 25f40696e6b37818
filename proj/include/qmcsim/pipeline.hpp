#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmcsim/assembly.hpp"
#include "qmcsim/chiplet.hpp"
#include "qmcsim/config.hpp"
#include "qmcsim/implant.hpp"
#include "qmcsim/oracles.hpp"
#include "qmcsim/spectra.hpp"
#include "qmcsim/tuning.hpp"

namespace qmcsim {

class OrchestrationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr ||
        EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, len) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    return sha256_hex(bytes.data(), bytes.size());
}

enum class Stage { implant, yield, assemble, spectra, tune };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::implant: return "implant";
        case Stage::yield: return "yield";
        case Stage::assemble: return "assemble";
        case Stage::spectra: return "spectra";
        case Stage::tune: return "tune";
    }
    return "?";
}

inline Stage stage_from_string(const std::string& s) {
    if (s == "implant") return Stage::implant;
    if (s == "yield") return Stage::yield;
    if (s == "assemble") return Stage::assemble;
    if (s == "spectra") return Stage::spectra;
    if (s == "tune") return Stage::tune;
    throw OrchestrationError("unknown stage: " + s);
}

inline std::set<Stage> parse_stages(const std::string& csv_list) {
    std::set<Stage> stages;
    std::stringstream ss(csv_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) stages.insert(stage_from_string(item));
    }
    if (stages.empty()) throw OrchestrationError("empty stage list");
    return stages;
}

struct ArtifactInfo {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct PipelineResult {
    std::vector<ArtifactInfo> artifacts;
    std::string manifest_path;
};

namespace detail {

inline std::uint64_t stage_seed(const RunConfig& config, Stage s) {
    return derive_seed(config.seed, "stage:" + to_string(s));
}

// Stable emitters sitting within half a waveguide width of their channel
// centre at zero misalignment; the channel's "device emitter" is the
// first such one in spot order.
inline std::vector<std::optional<Emitter>> select_channel_emitters(
    const std::vector<ImplantSpot>& spots, const RunConfig& config) {
    std::vector<std::optional<Emitter>> chans(
        static_cast<std::size_t>(config.chiplet.n_channels));
    const double half_width = config.chiplet.waveguide_width_nm / 2.0;
    const double pitch = config.chiplet.channel_pitch_nm;
    for (const auto& spot : spots) {
        for (const auto& e : spot.emitters) {
            if (!e.stable) continue;
            const double j = std::round(e.position_nm[0] / pitch);
            if (j < 0.0 || j >= static_cast<double>(config.chiplet.n_channels)) {
                continue;
            }
            if (std::abs(e.position_nm[0] - j * pitch) > half_width) continue;
            auto& slot = chans[static_cast<std::size_t>(j)];
            if (!slot.has_value()) slot = e;
        }
    }
    return chans;
}

inline void add_artifact(std::vector<ArtifactInfo>& artifacts,
                         const std::filesystem::path& dir,
                         const std::string& name) {
    ArtifactInfo info;
    info.name = name;
    const auto path = dir / name;
    info.sha256 = sha256_file(path.string());
    info.bytes = std::filesystem::file_size(path);
    artifacts.push_back(info);
}

}  // namespace detail

inline void write_manifest(const std::filesystem::path& dir,
                           std::vector<ArtifactInfo> artifacts,
                           const std::string& manifest_name = "manifest.json") {
    std::sort(artifacts.begin(), artifacts.end(),
              [](const ArtifactInfo& a, const ArtifactInfo& b) {
                  return a.name < b.name;
              });
    nlohmann::ordered_json j;
    j["files"] = nlohmann::ordered_json::array();
    for (const auto& a : artifacts) {
        nlohmann::ordered_json f;
        f["name"] = a.name;
        f["sha256"] = a.sha256;
        f["bytes"] = a.bytes;
        j["files"].push_back(f);
    }
    std::ofstream out(dir / manifest_name);
    out << j.dump(2) << '\n';
}

// Executes the requested stages in dependency order. Later stages read
// their inputs back from the predecessor CSVs, so a stage whose inputs
// are missing (not requested now, not produced earlier) fails loudly.
inline PipelineResult run_pipeline(const RunConfig& config,
                                   const std::set<Stage>& stages,
                                   int n_threads = 1) {
    config.validate();
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    PipelineResult result;

    ImplantSpec spec = config.implant;
    spec.species = config.species;

    if (stages.contains(Stage::implant)) {
        const auto spots =
            generate_spots(spec, detail::stage_seed(config, Stage::implant));
        write_spots_csv((dir / "spots.csv").string(), spots);
        const SpotStatistics st = spot_statistics(spots);
        CsvWriter w((dir / "spot_stats.csv").string());
        w.header({"n_spots", "mean_count", "count_variance", "depth_mean_nm",
                  "depth_std_nm", "lateral_fwhm_est_nm", "stable_fraction",
                  "total_emitters"});
        w.field(static_cast<long long>(spots.size()))
            .field(st.mean_count)
            .field(st.count_variance)
            .field(st.depth_mean)
            .field(st.depth_std)
            .field(st.lateral_fwhm_est)
            .field(st.stable_fraction)
            .field(st.total_emitters);
        w.end_row();
        detail::add_artifact(result.artifacts, dir, "spots.csv");
        detail::add_artifact(result.artifacts, dir, "spot_stats.csv");
    }

    if (stages.contains(Stage::yield)) {
        const std::uint64_t seed = detail::stage_seed(config, Stage::yield);
        const std::vector<int> channel_counts = {1, config.chiplet.n_channels,
                                                 2 * config.chiplet.n_channels};
        const auto rows = yield_vs_channels(config.chiplet, spec, config.alignment,
                                            channel_counts, config.trials, seed,
                                            n_threads);
        write_yield_csv((dir / "yield.csv").string(), rows);
        detail::add_artifact(result.artifacts, dir, "yield.csv");
    }

    if (stages.contains(Stage::assemble)) {
        const std::uint64_t seed = detail::stage_seed(config, Stage::assemble);
        BudgetParams budget = config.budget;
        budget.wavelength_nm = static_cast<int>(config.species.zpl_wavelength_nm);
        const auto sockets =
            simulate_assembly(config.trials, config.placement, config.taper,
                              seed, budget);
        write_assembly_csv((dir / "assembly.csv").string(), sockets);
        detail::add_artifact(result.artifacts, dir, "assembly.csv");
    }

    const bool needs_spots =
        stages.contains(Stage::spectra) || stages.contains(Stage::tune);
    std::vector<ImplantSpot> spots;
    if (needs_spots) {
        const auto path = dir / "spots.csv";
        if (!std::filesystem::exists(path)) {
            throw OrchestrationError(
                "stage dependency missing: spots.csv (run the implant stage "
                "first)");
        }
        spots = read_spots_csv(path.string(), spec);
    }

    if (stages.contains(Stage::spectra)) {
        const std::uint64_t seed = detail::stage_seed(config, Stage::spectra);
        const auto chans = detail::select_channel_emitters(spots, config);
        std::vector<Emitter> emitters;
        std::vector<int> channel_ids;
        for (std::size_t i = 0; i < chans.size(); ++i) {
            if (chans[i].has_value()) {
                emitters.push_back(*chans[i]);
                channel_ids.push_back(static_cast<int>(i));
            }
        }
        if (emitters.empty()) {
            throw OrchestrationError(
                "spectra stage: no stable coupled emitter in any channel");
        }
        LinewidthReport report =
            chiplet_linewidth_report(emitters, config.scan, seed);
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            report.rows[i].channel = channel_ids[i];
        }
        write_linewidth_report_csv((dir / "ple_fits.csv").string(), report);

        {
            CsvWriter w((dir / "ple_spectra.csv").string());
            w.header({"channel", "detuning_mhz", "counts"});
            for (std::size_t i = 0; i < emitters.size(); ++i) {
                ScanConfig scan = config.scan;
                scan.center_offset_ghz = emitters[i].zpl_offset_ghz;
                const Spectrum s = synthesize_ple(
                    emitters[i], scan,
                    derive_seed(seed, "channel", static_cast<std::uint64_t>(i)));
                for (std::size_t p = 0; p < s.detuning_mhz.size(); ++p) {
                    w.field(channel_ids[i]).field(s.detuning_mhz[p]).field(s.counts[p]);
                    w.end_row();
                }
            }
        }

        {
            // Transmission dip through the first channel's emitter.
            ScanConfig scan = config.scan;
            scan.center_offset_ghz = emitters.front().zpl_offset_ghz;
            scan.peak_rate_cps = std::max(scan.peak_rate_cps, 200.0);
            const TransmissionScan ts = synthesize_transmission_scan(
                emitters.front(), scan, derive_seed(seed, "transmission"));
            CsvWriter w((dir / "transmission_scan.csv").string());
            w.header({"detuning_mhz", "counts", "transmission"});
            for (std::size_t p = 0; p < ts.detuning_mhz.size(); ++p) {
                w.field(ts.detuning_mhz[p]).field(ts.counts[p]).field(ts.transmission[p]);
                w.end_row();
            }
            const DipFitResult dip = fit_transmission_dip(ts);
            CsvWriter wf((dir / "transmission_fit.csv").string());
            wf.header({"center_mhz", "gamma_mhz", "gamma_err", "depth",
                       "depth_err", "beta_observed", "converged"});
            wf.field(dip.center_mhz)
                .field(dip.gamma_mhz)
                .field(dip.gamma_err)
                .field(dip.depth)
                .field(dip.depth_err)
                .field(dip.beta_observed)
                .field(dip.converged);
            wf.end_row();
        }

        {
            // Photon statistics: off-resonant and resonant pumping levels.
            const CorrelationHistogram off = synthesize_g2_histogram(
                0.19, 10.0, 200.0, 100.0, 25, derive_seed(seed, "g2_offres"));
            const CorrelationHistogram res = synthesize_g2_histogram(
                0.06, 10.0, 200.0, 100.0, 25, derive_seed(seed, "g2_res"));
            write_histogram_csv((dir / "g2_hist_offres.csv").string(), off);
            write_histogram_csv((dir / "g2_hist_res.csv").string(), res);
            const G2FitResult f_off = fit_g2(off);
            const G2FitResult f_res = fit_g2(res);
            CsvWriter w((dir / "g2_fits.csv").string());
            w.header({"dataset", "g2_zero", "g2_zero_err", "tau_corr_ns",
                      "tau_corr_err", "converged", "tau_identifiable"});
            w.field(std::string("off_resonant"))
                .field(f_off.g2_zero)
                .field(f_off.g2_zero_err)
                .field(f_off.tau_corr_ns)
                .field(f_off.tau_corr_err)
                .field(f_off.converged)
                .field(f_off.tau_identifiable);
            w.end_row();
            w.field(std::string("resonant"))
                .field(f_res.g2_zero)
                .field(f_res.g2_zero_err)
                .field(f_res.tau_corr_ns)
                .field(f_res.tau_corr_err)
                .field(f_res.converged)
                .field(f_res.tau_identifiable);
            w.end_row();
        }

        detail::add_artifact(result.artifacts, dir, "ple_fits.csv");
        detail::add_artifact(result.artifacts, dir, "ple_spectra.csv");
        detail::add_artifact(result.artifacts, dir, "transmission_scan.csv");
        detail::add_artifact(result.artifacts, dir, "transmission_fit.csv");
        detail::add_artifact(result.artifacts, dir, "g2_hist_offres.csv");
        detail::add_artifact(result.artifacts, dir, "g2_hist_res.csv");
        detail::add_artifact(result.artifacts, dir, "g2_fits.csv");
    }

    if (stages.contains(Stage::tune)) {
        const std::uint64_t seed = detail::stage_seed(config, Stage::tune);
        std::vector<Emitter> emitters;
        for (const auto& spot : spots) {
            for (const auto& e : spot.emitters) {
                if (e.stable) emitters.push_back(e);
            }
        }
        if (emitters.empty()) {
            throw OrchestrationError("tune stage: no stable emitters");
        }
        const TuningPlan plan =
            max_mutually_resonant_set(emitters, config.actuator);
        write_tuning_plan_csv((dir / "tuning_plan.csv").string(), plan);

        const auto pairs = max_resonant_pairs(emitters, config.actuator);
        {
            CsvWriter w((dir / "resonant_pairs.csv").string());
            w.header({"emitter_a", "emitter_b", "crossing_voltage",
                      "crossing_status"});
            for (const auto& [a, b] : pairs) {
                const Crossing cr =
                    crossing_voltage(emitters[a], emitters[b], config.actuator);
                w.field(static_cast<long long>(a))
                    .field(static_cast<long long>(b))
                    .field(cr.voltage)
                    .field(to_string(cr.status));
                w.end_row();
            }
        }
        {
            const double cov =
                pair_coverage(config.species, config.actuator,
                              std::min<long long>(config.trials, 200000),
                              derive_seed(seed, "coverage"));
            CsvWriter w((dir / "coverage.csv").string());
            w.header({"species", "cap_ghz", "v_max", "trials", "coverage"});
            w.field(to_string(config.species.name))
                .field(config.actuator.cap_ghz)
                .field(config.actuator.v_max)
                .field(std::min<long long>(config.trials, 200000))
                .field(cov);
            w.end_row();
        }
        detail::add_artifact(result.artifacts, dir, "tuning_plan.csv");
        detail::add_artifact(result.artifacts, dir, "resonant_pairs.csv");
        detail::add_artifact(result.artifacts, dir, "coverage.csv");
    }

    write_manifest(dir, result.artifacts);
    result.manifest_path = (dir / "manifest.json").string();
    return result;
}

}  // namespace qmcsim
