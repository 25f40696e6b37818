// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 15 drives the installed CLI binary (--cli <path>).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qmcsim/qmcsim.hpp"

namespace fs = std::filesystem;
using namespace qmcsim;

namespace {

struct Criterion {
    int id;
    std::string name;
    std::function<std::string()> run;  // returns detail; throws on failure
};

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw Failure(msg);
}

std::string num(double v) { return format_double(v); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- independent test-side oracles (criterion 14) -------------------------

std::size_t oracle_stab(const std::vector<FrequencyInterval>& ivals) {
    std::size_t best = 0;
    for (const auto& a : ivals) {
        for (double x : {a.lo_ghz, a.hi_ghz}) {
            std::size_t c = 0;
            for (const auto& b : ivals) {
                if (b.lo_ghz <= x && x <= b.hi_ghz) ++c;
            }
            best = std::max(best, c);
        }
    }
    return best;
}

std::size_t oracle_matching_rec(const std::vector<std::vector<bool>>& adj,
                                std::vector<bool>& used, std::size_t v) {
    const std::size_t n = adj.size();
    while (v < n && used[v]) ++v;
    if (v >= n) return 0;
    used[v] = true;
    std::size_t best = oracle_matching_rec(adj, used, v + 1);
    for (std::size_t u = v + 1; u < n; ++u) {
        if (used[u] || !adj[v][u]) continue;
        used[u] = true;
        best = std::max(best, 1 + oracle_matching_rec(adj, used, v + 1));
        used[u] = false;
    }
    used[v] = false;
    return best;
}

std::size_t oracle_matching(const std::vector<std::vector<bool>>& adj) {
    std::vector<bool> used(adj.size(), false);
    return oracle_matching_rec(adj, used, 0);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double q = 0.0;
    for (double x : v) q += (x - m) * (x - m);
    return std::sqrt(q / static_cast<double>(v.size() - 1));
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli_path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") cli_path = argv[i + 1];
    }

    std::vector<Criterion> criteria;

    criteria.push_back({1, "extinction inversion T=0.62", [] {
        const CouplingFigures f = extinction_to_coupling(0.62);
        require(std::abs(f.beta_observed - 0.213) <= 0.001,
                "beta " + num(f.beta_observed));
        require(std::abs(f.cooperativity - 0.270) <= 0.001,
                "C " + num(f.cooperativity));
        return "beta=" + num(f.beta_observed) + " C=" + num(f.cooperativity);
    }});

    criteria.push_back({2, "corrected coupling in [0.51, 0.59]", [] {
        std::string detail;
        for (double gamma : {35.0, 37.0, 40.0}) {
            const double b = correct_beta(0.21, gamma, 24.0, 0.6).beta_dipole;
            require(b >= 0.51 && b <= 0.59,
                    "beta_dipole(" + num(gamma) + ")=" + num(b));
            detail += num(b) + " ";
        }
        require(0.51 <= 0.55 && 0.55 <= 0.59, "band must contain 0.55");
        return "beta_dipole {35,37,40} MHz = " + detail;
    }});

    criteria.push_back({3, "linewidth algebra", [] {
        const double g0 = lifetime_limited_linewidth(6.63);
        require(std::abs(g0 - 24.0) <= 0.1, "Gamma0 " + num(g0));
        const double g = total_linewidth(24.0, 6.5);
        require(std::abs(g - 37.0) <= 1e-9, "Gamma " + num(g));
        return "Gamma0=" + num(g0) + " Gamma=" + num(g);
    }});

    criteria.push_back({4, "yield calibration closes the loop", [] {
        ChipletDesign design;
        ImplantSpec spec;
        AlignmentModel alignment;  // sigma 100 nm
        CalibrationOptions opt;
        const CalibrationResult cal =
            calibrate_lambda(design, spec, alignment, 0.40, 4242, opt);
        ImplantSpec calibrated = spec;
        calibrated.mean_emitters_per_spot = cal.lambda_star;
        const YieldEstimate y8 =
            defect_free_yield(design, calibrated, alignment, 100000, 4243);
        require(std::abs(y8.yield_fraction - 0.40) <= 0.02,
                "8-channel yield " + num(y8.yield_fraction));
        ChipletDesign d16 = design;
        d16.n_channels = 16;
        const YieldEstimate y16 =
            defect_free_yield(d16, calibrated, alignment, 100000, 4243);
        const double sep =
            (y8.yield_fraction - y16.yield_fraction) /
            std::sqrt(y8.stderr_ * y8.stderr_ + y16.stderr_ * y16.stderr_);
        require(sep >= 3.0, "separation " + num(sep));
        return "lambda*=" + num(cal.lambda_star) + " y8=" +
               num(y8.yield_fraction) + " y16=" + num(y16.yield_fraction) +
               " sep=" + num(sep) + " sigma";
    }});

    criteria.push_back({5, "independent-channel closed form", [] {
        ChipletDesign design;
        ImplantSpec spec;
        spec.stable_fraction = 1.0;
        AlignmentModel perfect;
        perfect.sigma_offset_nm = 0.0;
        CalibrationOptions opt;
        const CalibrationResult cal =
            calibrate_lambda(design, spec, perfect, 0.40, 5252, opt);
        ImplantSpec calibrated = spec;
        calibrated.mean_emitters_per_spot = cal.lambda_star;
        const YieldEstimate y =
            defect_free_yield(design, calibrated, perfect, 100000, 5253);
        const double sigma_lat = fwhm_to_sigma(spec.species.lateral_fwhm_nm);
        const double q =
            normal_cdf(170.0 / sigma_lat) - normal_cdf(-170.0 / sigma_lat);
        const double per_channel = 1.0 - std::exp(-cal.lambda_star * q);
        require(std::abs(per_channel - 0.8918) <= 0.01,
                "per-channel " + num(per_channel));
        const double closed = std::pow(per_channel, 8.0);
        require(std::abs(y.yield_fraction - closed) <= 3.0 * y.stderr_,
                "yield " + num(y.yield_fraction) + " vs closed " + num(closed));
        return "per-channel=" + num(per_channel) + " closed=" + num(closed) +
               " mc=" + num(y.yield_fraction);
    }});

    criteria.push_back({6, "coupling roll-off calibration", [] {
        const double w = calibrate_rolloff(38.0, 0.10);
        require(std::abs(w - 117.07) <= 0.01, "w " + num(w));
        TaperModel taper;
        taper.rolloff_w_nm = w;
        const double eta0 = coupling_efficiency(0.0, taper, 602);
        require(std::abs(eta0 - 0.97) <= 1e-12, "eta0 " + num(eta0));
        const double ratio = coupling_efficiency(38.0, taper, 602) / eta0;
        require(std::abs(ratio - 0.900) <= 0.001, "ratio " + num(ratio));
        const double db = -10.0 * std::log10(ratio);
        require(std::abs(db - 0.458) <= 0.002, "penalty " + num(db));
        return "w=" + num(w) + " ratio=" + num(ratio) + " dB=" + num(db);
    }});

    criteria.push_back({7, "assembly statistics", [] {
        PlacementModel placement;
        TaperModel taper;
        const auto sockets = simulate_assembly(100000, placement, taper, 777);
        std::vector<double> offsets;
        long long placed = 0;
        for (const auto& s : sockets) {
            if (s.placed) {
                ++placed;
                offsets.push_back(s.offset_nm);
            }
        }
        const double frac = static_cast<double>(placed) / 100000.0;
        require(std::abs(frac - 0.900) <= 0.003, "placed " + num(frac));
        const double mean = mean_of(offsets);
        const double sd = std_of(offsets);
        require(std::abs(mean - 38.0) <= 0.2, "offset mean " + num(mean));
        require(std::abs(sd - 16.0) <= 0.2, "offset std " + num(sd));
        return "placed=" + num(frac) + " mean=" + num(mean) + " std=" + num(sd);
    }});

    criteria.push_back({8, "linewidth fit recovery coverage", [] {
        Emitter e;
        e.lifetime_ns = 1000.0 / (2.0 * std::numbers::pi * 24.0);
        e.dephasing_mhz = 6.5;
        ScanConfig scan;
        int covered = 0;
        std::vector<double> sigmas;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            const Spectrum s = synthesize_ple(
                e, scan, derive_seed(888, "cov", static_cast<std::uint64_t>(t)));
            const FitResult f = fit_lorentzian(s);
            require(f.converged, "fit did not converge at trial " +
                                     std::to_string(t));
            sigmas.push_back(f.gamma_err);
            if (std::abs(f.gamma_mhz - 37.0) <= 3.0 * f.gamma_err) ++covered;
        }
        const double coverage = covered / 200.0;
        require(coverage >= 0.95, "coverage " + num(coverage));
        const double mean_sigma = mean_of(sigmas);
        require(mean_sigma >= 2.0 && mean_sigma <= 4.0,
                "mean sigma " + num(mean_sigma));
        return "coverage=" + num(coverage) + " mean_sigma=" + num(mean_sigma);
    }});

    criteria.push_back({9, "g2 recovery", [] {
        // fit noise (sigma ~ 0.008 at these counts) sits well below the
        // paper uncertainties being asserted
        const CorrelationHistogram h6 =
            synthesize_g2_histogram(0.06, 10.0, 800.0, 100.0, 25, 999);
        const G2FitResult f6 = fit_g2(h6);
        require(std::abs(f6.g2_zero - 0.06) <= 0.02, "g2(0) " + num(f6.g2_zero));
        const CorrelationHistogram h19 =
            synthesize_g2_histogram(0.19, 10.0, 800.0, 100.0, 25, 1000);
        const G2FitResult f19 = fit_g2(h19);
        require(std::abs(f19.g2_zero - 0.19) <= 0.07,
                "g2(0) " + num(f19.g2_zero));
        return "fit(0.06)=" + num(f6.g2_zero) + " fit(0.19)=" + num(f19.g2_zero);
    }});

    criteria.push_back({10, "background to photon purity", [] {
        const double g = background_to_g2(18.0);
        require(std::abs(g - 0.031) <= 0.001, "g2 " + num(g));
        return "g2(0)=" + num(g);
    }});

    criteria.push_back({11, "chiplet linewidth statistics", [] {
        auto stats = [](const SpeciesParams& sp, const ScanConfig& scan,
                        std::uint64_t seed, double& mean_g, double& mean_r) {
            std::vector<double> gs, rs;
            for (int c = 0; c < 16; ++c) {
                std::vector<Emitter> emitters;
                Rng rng(derive_seed(seed, "pop", static_cast<std::uint64_t>(c)));
                for (int i = 0; i < 8; ++i) {
                    emitters.push_back(sample_emitter(sp, rng));
                }
                const LinewidthReport rep = chiplet_linewidth_report(
                    emitters, scan,
                    derive_seed(seed, "scan", static_cast<std::uint64_t>(c)));
                for (const auto& row : rep.rows) {
                    if (row.converged) {
                        gs.push_back(row.gamma_mhz);
                        rs.push_back(row.ratio);
                    }
                }
            }
            mean_g = mean_of(gs);
            mean_r = mean_of(rs);
        };
        ScanConfig gev_scan;
        double g_gev = 0.0, r_gev = 0.0;
        stats(gev_params(), gev_scan, 1111, g_gev, r_gev);
        require(g_gev >= 44.0 && g_gev <= 64.0, "GeV mean " + num(g_gev));
        require(r_gev >= 1.4 && r_gev <= 2.0, "GeV ratio " + num(r_gev));
        ScanConfig siv_scan;
        siv_scan.span_mhz = 1200.0;
        siv_scan.n_points = 121;
        double g_siv = 0.0, r_siv = 0.0;
        stats(siv_params(), siv_scan, 1112, g_siv, r_siv);
        require(g_siv >= 131.0 && g_siv <= 161.0, "SiV mean " + num(g_siv));
        return "GeV=" + num(g_gev) + " ratio=" + num(r_gev) +
               " SiV=" + num(g_siv);
    }});

    criteria.push_back({12, "inhomogeneous sampling FWHM", [] {
        auto fwhm_of = [](const std::vector<double>& v) {
            return sigma_to_fwhm(std_of(v));
        };
        const double gev =
            fwhm_of(sample_inhomogeneous(gev_params(), 100000, 1212));
        require(std::abs(gev - 85.0) <= 2.0, "GeV FWHM " + num(gev));
        const double siv =
            fwhm_of(sample_inhomogeneous(siv_params(), 100000, 1213));
        require(std::abs(siv - 30.0) <= 1.0, "SiV FWHM " + num(siv));
        return "GeV=" + num(gev) + " SiV=" + num(siv);
    }});

    criteria.push_back({13, "strain-tuning crossing anchors", [] {
        ActuatorConfig act;
        Emitter a, b;
        a.zpl_offset_ghz = 0.0;
        a.strain_coeff_ghz_per_v2 = 0.016660;
        b.zpl_offset_ghz = 10.0;
        b.strain_coeff_ghz_per_v2 = 0.0;
        const Crossing cr = crossing_voltage(a, b, act);
        require(cr.ok(), "status " + to_string(cr.status));
        require(std::abs(cr.voltage - 24.5) <= 0.01, "V* " + num(cr.voltage));
        const double diff = std::abs(strained_frequency(a, cr.voltage, act) -
                                     strained_frequency(b, cr.voltage, act));
        require(diff < 1e-9, "frequency mismatch " + num(diff));
        return "V*=" + num(cr.voltage) + " |df|=" + num(diff);
    }});

    criteria.push_back({14, "planner oracles on 1000 instances", [] {
        const auto sp = gev_params();
        for (int t = 0; t < 1000; ++t) {
            Rng rng(derive_seed(1414, "inst", static_cast<std::uint64_t>(t)));
            const int n = 2 + static_cast<int>(rng.next_u64() % 9);
            ActuatorConfig act;
            act.v_max = rng.uniform(10.0, 90.0);
            act.cap_ghz = rng.uniform(1.0, 120.0);
            std::vector<Emitter> es;
            for (int i = 0; i < n; ++i) {
                Emitter e;
                e.zpl_offset_ghz = rng.normal(0.0, 36.0);
                e.strain_coeff_ghz_per_v2 = sample_strain_coeff(sp, rng);
                es.push_back(e);
            }
            std::vector<FrequencyInterval> ivals;
            for (const auto& e : es) ivals.push_back(reachable_interval(e, act));
            const TuningPlan plan = max_mutually_resonant_set(es, act);
            require(plan.size() == oracle_stab(ivals),
                    "stabbing mismatch at instance " + std::to_string(t));
            std::vector<std::vector<bool>> adj(
                n, std::vector<bool>(static_cast<std::size_t>(n), false));
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    adj[i][j] = adj[j][i] = ivals[i].intersects(ivals[j]);
                }
            }
            require(max_resonant_pairs(es, act).size() == oracle_matching(adj),
                    "matching mismatch at instance " + std::to_string(t));
        }
        return "1000/1000 instances match";
    }});

    criteria.push_back({15, "reproduce determinism across thread counts", [&] {
        require(!cli_path.empty(), "no --cli argument given");
        const fs::path base = fs::temp_directory_path() / "qmcsim_accept15";
        fs::remove_all(base);
        fs::create_directories(base);
        const fs::path out1 = base / "t1";
        const fs::path out4 = base / "t4";
        auto run = [&](const fs::path& out, int threads) {
            std::ostringstream cmd;
            cmd << '"' << cli_path << '"' << " reproduce --seed 42 --out "
                << '"' << out.string() << '"' << " --threads " << threads
                << " > " << '"' << (out.string() + ".log") << '"' << " 2>&1";
            const int rc = std::system(cmd.str().c_str());
            require(rc == 0, "reproduce exited with " + std::to_string(rc));
        };
        run(out1, 1);
        run(out4, 4);
        const std::string m1 = slurp(out1 / "manifest.json");
        const std::string m4 = slurp(out4 / "manifest.json");
        require(m1 == m4, "manifests differ between 1 and 4 threads");
        require(slurp(out1 / "repro_report.csv") ==
                    slurp(out4 / "repro_report.csv"),
                "claim tables differ");
        fs::remove_all(base);
        return "manifests byte-identical (1 vs 4 threads)";
    }});

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        std::printf("%s criterion %2d: %s  [%s] (%lld ms)\n",
                    ok ? "PASS" : "FAIL", c.id, c.name.c_str(), detail.c_str(),
                    static_cast<long long>(ms));
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
