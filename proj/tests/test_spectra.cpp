#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "qmcsim/implant.hpp"
#include "qmcsim/spectra.hpp"

using namespace qmcsim;
using Catch::Approx;

namespace {

Emitter paper_line_emitter() {
    // Gamma0 = 24 MHz, Gamma_d = 6.5 MHz -> Gamma = 37 MHz
    Emitter e;
    e.lifetime_ns = 1000.0 / (2.0 * std::numbers::pi * 24.0);
    e.dephasing_mhz = 6.5;
    return e;
}

}  // namespace

TEST_CASE("ple synthesis expectation", "[spectra]") {
    ScanConfig scan;
    const Emitter e = paper_line_emitter();

    // flat background when the peak rate is zero
    ScanConfig flat = scan;
    flat.peak_rate_cps = 0.0;
    const Spectrum s = synthesize_ple(e, flat, 4);
    const double expected = flat.background_cps * flat.dwell_s * flat.repeats;
    double mean = 0.0;
    for (long long c : s.counts) mean += static_cast<double>(c);
    mean /= static_cast<double>(s.counts.size());
    CHECK(mean == Approx(expected).margin(3.0 * std::sqrt(expected / 61.0)));

    // lineshape maximum: rate at zero detuning is peak + background
    CHECK(lorentzian(0.0, 0.0, 37.0, 16.0, 2.0) == Approx(18.0).margin(1e-12));
    // Lorentzian half width: half-max points at +-Gamma/2
    const double half = 2.0 + 16.0 / 2.0;
    CHECK(lorentzian(18.5, 0.0, 37.0, 16.0, 2.0) == Approx(half).margin(1e-12));
    CHECK(lorentzian(-18.5, 0.0, 37.0, 16.0, 2.0) == Approx(half).margin(1e-12));

    // counts are non-negative integers on a strictly increasing grid
    const Spectrum s2 = synthesize_ple(e, scan, 5);
    s2.validate();
}

TEST_CASE("lorentzian fit recovers exact data", "[spectra]") {
    Spectrum s;
    for (int i = 0; i < 81; ++i) {
        const double d = -200.0 + 5.0 * i;
        s.detuning_mhz.push_back(d);
        s.counts.push_back(static_cast<long long>(
            std::llround(lorentzian(d, 12.0, 37.0, 40000.0, 500.0))));
    }
    const FitResult f = fit_lorentzian(s);
    CHECK(f.converged);
    CHECK(f.gamma_mhz == Approx(37.0).margin(0.1));
    CHECK(f.center_mhz == Approx(12.0).margin(0.1));
    CHECK(f.background == Approx(500.0).epsilon(0.01));
}

TEST_CASE("fit at paper-like counts lands near 37(3)", "[spectra]") {
    ScanConfig scan;
    const Emitter e = paper_line_emitter();
    int covered = 0;
    double sigma_sum = 0.0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const Spectrum s =
            synthesize_ple(e, scan, derive_seed(100, "cov", static_cast<std::uint64_t>(t)));
        const FitResult f = fit_lorentzian(s);
        REQUIRE(f.converged);
        sigma_sum += f.gamma_err;
        if (std::abs(f.gamma_mhz - 37.0) <= 3.0 * f.gamma_err) ++covered;
    }
    CHECK(covered >= 19);
    CHECK(sigma_sum / trials == Approx(3.0).margin(1.0));
}

TEST_CASE("flat spectrum raises NoPeak", "[spectra]") {
    Emitter dark = paper_line_emitter();
    ScanConfig scan;
    scan.peak_rate_cps = 0.0;
    const Spectrum s = synthesize_ple(dark, scan, 6);
    CHECK_THROWS_AS(fit_lorentzian(s), NoPeakError);
}

TEST_CASE("count scaling leaves center and width unchanged", "[spectra]") {
    ScanConfig scan;
    const Emitter e = paper_line_emitter();
    const Spectrum s = synthesize_ple(e, scan, 7);
    Spectrum scaled = s;
    for (auto& c : scaled.counts) c *= 64;
    const FitResult a = fit_lorentzian(s);
    const FitResult b = fit_lorentzian(scaled);
    CHECK(b.center_mhz == Approx(a.center_mhz).margin(1e-6 * std::max(1.0, std::abs(a.center_mhz))));
    CHECK(b.gamma_mhz == Approx(a.gamma_mhz).epsilon(1e-6));
}

TEST_CASE("fit objective descends monotonically", "[spectra]") {
    ScanConfig scan;
    const Emitter e = paper_line_emitter();
    const Spectrum s = synthesize_ple(e, scan, 8);
    std::vector<double> xs = s.detuning_mhz, ys, ws;
    for (long long c : s.counts) {
        ys.push_back(static_cast<double>(c));
        ws.push_back(1.0 / std::max<double>(static_cast<double>(c), 1.0));
    }
    LmOptions opt;
    opt.scales = {40.0, 40.0, 100.0, 10.0};
    const LmFit fit = levenberg_marquardt(
        [](const std::vector<double>& p, double x) {
            return lorentzian(x, p[0], p[1], p[2], p[3]);
        },
        xs, ys, ws, {10.0, 60.0, 50.0, 5.0}, opt);
    REQUIRE(fit.cost_history.size() > 1);
    for (std::size_t i = 1; i < fit.cost_history.size(); ++i) {
        CHECK(fit.cost_history[i] <= fit.cost_history[i - 1]);
    }
}

TEST_CASE("transmission scan statistics", "[spectra]") {
    ScanConfig scan;
    scan.peak_rate_cps = 400.0;

    // no emitter coupling: flat unity transmission
    Emitter none = paper_line_emitter();
    none.beta_ideal = 0.0;
    const TransmissionScan flat = synthesize_transmission_scan(none, scan, 9);
    for (double t : flat.transmission) {
        CHECK(t == Approx(1.0).margin(5.0 * std::sqrt(1.0 / flat.baseline_counts)));
    }

    // paper-like extinction recovered by the dip fit
    Emitter e = paper_line_emitter();
    e.beta_ideal = 0.213 * e.gamma_mhz() / e.gamma0_mhz();  // beta_eff = 0.213
    const TransmissionScan ts = synthesize_transmission_scan(e, scan, 10);
    const DipFitResult dip = fit_transmission_dip(ts);
    CHECK(dip.converged);
    CHECK(dip.depth == Approx(0.38).margin(0.04));
    CHECK(dip.beta_observed == Approx(0.213).margin(0.03));
}

TEST_CASE("shot-noise limit recovers the analytic lineshape", "[spectra]") {
    ScanConfig scan;
    scan.n_points = 31;
    scan.peak_rate_cps = 8e5;  // ~4e6 expected counts per point
    Emitter e = paper_line_emitter();
    e.beta_ideal = 0.213 * e.gamma_mhz() / e.gamma0_mhz();
    const TransmissionScan ts = synthesize_transmission_scan(e, scan, 11);
    double rms = 0.0;
    for (std::size_t i = 0; i < ts.transmission.size(); ++i) {
        const double analytic =
            transmission_point(ts.detuning_mhz[i], 0.213, e.gamma_mhz());
        rms += (ts.transmission[i] - analytic) * (ts.transmission[i] - analytic);
    }
    rms = std::sqrt(rms / static_cast<double>(ts.transmission.size()));
    CHECK(rms < 1e-3);
}

TEST_CASE("g2 fits recover the paper's antibunching values", "[spectra]") {
    const CorrelationHistogram h6 =
        synthesize_g2_histogram(0.06, 10.0, 200.0, 100.0, 25, 12);
    h6.validate();
    const G2FitResult f6 = fit_g2(h6);
    CHECK(f6.converged);
    CHECK(f6.tau_identifiable);
    CHECK(f6.g2_zero == Approx(0.06).margin(0.02));

    const CorrelationHistogram h19 =
        synthesize_g2_histogram(0.19, 10.0, 200.0, 100.0, 25, 13);
    const G2FitResult f19 = fit_g2(h19);
    CHECK(f19.converged);
    CHECK(f19.g2_zero == Approx(0.19).margin(0.07));
}

TEST_CASE("degenerate g2 data is flagged", "[spectra]") {
    // perfectly flat histogram: g2 ~ 1 and tau unidentifiable
    CorrelationHistogram flat;
    for (int i = -10; i <= 10; ++i) {
        flat.delay_bins_ns.push_back(10.0 * i);
        flat.coincidences.push_back(500);
    }
    const G2FitResult f = fit_g2(flat);
    CHECK(f.g2_zero == Approx(1.0).margin(0.05));
    CHECK_FALSE(f.tau_identifiable);

    CorrelationHistogram empty;
    for (int i = -5; i <= 5; ++i) {
        empty.delay_bins_ns.push_back(10.0 * i);
        empty.coincidences.push_back(0);
    }
    CHECK_THROWS_AS(fit_g2(empty), DegenerateDataError);

    CorrelationHistogram tiny;
    tiny.delay_bins_ns = {-1.0, 0.0, 1.0};
    tiny.coincidences = {5, 5, 5};
    CHECK_THROWS_AS(fit_g2(tiny), std::invalid_argument);
}

TEST_CASE("chiplet linewidth report", "[spectra]") {
    ScanConfig scan;

    // lifetime-limited channels: mean ratio of one
    std::vector<Emitter> ideal(8);
    const LinewidthReport lifetime_limited =
        chiplet_linewidth_report(ideal, scan, 14);
    CHECK(lifetime_limited.mean_ratio == Approx(1.0).margin(0.1));
    CHECK(lifetime_limited.rows.size() == 8);

    // sampled GeV population lands at the chiplet statistics
    const auto sp = gev_params();
    std::vector<double> gammas, ratios;
    for (int c = 0; c < 8; ++c) {
        std::vector<Emitter> emitters;
        Rng rng(derive_seed(15, "pop", static_cast<std::uint64_t>(c)));
        for (int i = 0; i < 8; ++i) emitters.push_back(sample_emitter(sp, rng));
        const LinewidthReport rep = chiplet_linewidth_report(
            emitters, scan, derive_seed(15, "scan", static_cast<std::uint64_t>(c)));
        for (const auto& row : rep.rows) {
            if (row.converged) {
                gammas.push_back(row.gamma_mhz);
                ratios.push_back(row.ratio);
            }
        }
        CHECK(rep.inhom_spread_ghz > 0.0);
    }
    double g_mean = 0.0, r_mean = 0.0;
    for (double g : gammas) g_mean += g;
    for (double r : ratios) r_mean += r;
    g_mean /= static_cast<double>(gammas.size());
    r_mean /= static_cast<double>(ratios.size());
    CHECK(g_mean == Approx(54.0).margin(10.0));
    CHECK(r_mean == Approx(1.7).margin(0.3));
}

TEST_CASE("spectrum and histogram CSV round trips", "[spectra]") {
    ScanConfig scan;
    const Spectrum s = synthesize_ple(paper_line_emitter(), scan, 16);
    const auto dir = std::filesystem::temp_directory_path();
    const auto spath = dir / "qmcsim_spectrum_test.csv";
    write_spectrum_csv(spath.string(), s);
    const Spectrum s2 = read_spectrum_csv(spath.string());
    CHECK(s2.detuning_mhz == s.detuning_mhz);  // bit-exact
    CHECK(s2.counts == s.counts);
    std::filesystem::remove(spath);

    const CorrelationHistogram h =
        synthesize_g2_histogram(0.1, 8.0, 150.0, 80.0, 20, 17);
    const auto hpath = dir / "qmcsim_hist_test.csv";
    write_histogram_csv(hpath.string(), h);
    const CorrelationHistogram h2 = read_histogram_csv(hpath.string());
    CHECK(h2.delay_bins_ns == h.delay_bins_ns);
    CHECK(h2.coincidences == h.coincidences);
    std::filesystem::remove(hpath);
}

TEST_CASE("scan validation", "[spectra]") {
    ScanConfig scan;
    scan.span_mhz = -1.0;
    CHECK_THROWS_AS(scan.validate(), std::invalid_argument);
    scan = ScanConfig{};
    scan.n_points = 3;
    CHECK_THROWS_AS(scan.validate(), std::invalid_argument);
    scan = ScanConfig{};
    scan.repeats = 0;
    CHECK_THROWS_AS(scan.validate(), std::invalid_argument);

    Spectrum bad;
    bad.detuning_mhz = {0.0, 0.0, 1.0, 2.0, 3.0};
    bad.counts = {1, 1, 1, 1, 1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
