#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmcsim/csv.hpp"
#include "qmcsim/emitters.hpp"
#include "qmcsim/lm.hpp"
#include "qmcsim/rng.hpp"

namespace qmcsim {

class NoPeakError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DegenerateDataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Defaults give a reported linewidth uncertainty of about 3 MHz for a
// 37 MHz line, matching the quoted fit uncertainty.
struct ScanConfig {
    double center_offset_ghz = 0.0;
    double span_mhz = 300.0;
    int n_points = 61;
    int repeats = 5000;
    double peak_rate_cps = 16.0;
    double background_cps = 2.0;
    double dwell_s = 0.001;

    void validate() const {
        if (!(span_mhz > 0.0)) {
            throw std::invalid_argument("ScanConfig.span_mhz must be positive");
        }
        if (n_points < 5) {
            throw std::invalid_argument("ScanConfig.n_points must be >= 5");
        }
        if (repeats < 1) {
            throw std::invalid_argument("ScanConfig.repeats must be >= 1");
        }
        if (!(peak_rate_cps >= 0.0) || !(background_cps >= 0.0)) {
            throw std::invalid_argument("ScanConfig rates must be >= 0");
        }
        if (!(dwell_s > 0.0)) {
            throw std::invalid_argument("ScanConfig.dwell_s must be positive");
        }
    }

    std::vector<double> detuning_grid() const {
        std::vector<double> d(static_cast<std::size_t>(n_points));
        for (int i = 0; i < n_points; ++i) {
            d[static_cast<std::size_t>(i)] =
                -span_mhz / 2.0 +
                span_mhz * static_cast<double>(i) / static_cast<double>(n_points - 1);
        }
        return d;
    }
};

// Detunings are relative to the scan centre, in MHz, strictly increasing.
struct Spectrum {
    std::vector<double> detuning_mhz;
    std::vector<long long> counts;

    void validate() const {
        if (detuning_mhz.size() != counts.size()) {
            throw std::invalid_argument("Spectrum: list length mismatch");
        }
        for (std::size_t i = 1; i < detuning_mhz.size(); ++i) {
            if (!(detuning_mhz[i] > detuning_mhz[i - 1])) {
                throw std::invalid_argument(
                    "Spectrum: detunings must be strictly increasing");
            }
        }
        for (long long c : counts) {
            if (c < 0) throw std::invalid_argument("Spectrum: negative counts");
        }
    }
};

struct FitResult {
    double center_mhz = 0.0, center_err = 0.0;
    double gamma_mhz = 0.0, gamma_err = 0.0;
    double amplitude = 0.0, amplitude_err = 0.0;
    double background = 0.0, background_err = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
    int iterations = 0;
};

inline double lorentzian(double detuning_mhz, double center_mhz,
                         double gamma_mhz, double amplitude,
                         double background) {
    const double hw = gamma_mhz / 2.0;
    const double d = detuning_mhz - center_mhz;
    return amplitude * hw * hw / (d * d + hw * hw) + background;
}

// Expected rate is a Lorentzian peak over flat background; counts are
// Poisson over the total integration time dwell * repeats.
inline Spectrum synthesize_ple(const Emitter& emitter, const ScanConfig& scan,
                               std::uint64_t seed) {
    scan.validate();
    const double gamma = emitter.gamma_mhz();
    const double line_mhz =
        (emitter.zpl_offset_ghz - scan.center_offset_ghz) * 1000.0;
    const double integration = scan.dwell_s * scan.repeats;
    Spectrum s;
    s.detuning_mhz = scan.detuning_grid();
    s.counts.reserve(s.detuning_mhz.size());
    Rng rng(derive_seed(seed, "ple"));
    for (double d : s.detuning_mhz) {
        const double rate = lorentzian(d, line_mhz, gamma, scan.peak_rate_cps,
                                       scan.background_cps);
        s.counts.push_back(rng.poisson(rate * integration));
    }
    return s;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Background from the outer quartile of points, peak from the argmax bin
// (ties resolved to the lowest detuning), width from the empirical FWHM.
struct LorentzianInit {
    double center, gamma, amplitude, background;
};

inline LorentzianInit init_lorentzian(const std::vector<double>& d,
                                      const std::vector<double>& y,
                                      double span) {
    const std::size_t n = d.size();
    const std::size_t k = std::max<std::size_t>(1, n / 8);
    std::vector<double> outer;
    for (std::size_t i = 0; i < k; ++i) outer.push_back(y[i]);
    for (std::size_t i = n - k; i < n; ++i) outer.push_back(y[i]);
    LorentzianInit init{};
    init.background = median_of(outer);
    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    init.center = d[peak];
    init.amplitude = y[peak] - init.background;

    const double half = init.background + init.amplitude / 2.0;
    double left = d.front(), right = d.back();
    bool found_left = false, found_right = false;
    for (std::size_t i = peak; i-- > 0;) {
        if (y[i] < half) {
            const double f = (half - y[i]) / (y[i + 1] - y[i]);
            left = d[i] + f * (d[i + 1] - d[i]);
            found_left = true;
            break;
        }
    }
    for (std::size_t i = peak + 1; i < n; ++i) {
        if (y[i] < half) {
            const double f = (y[i - 1] - half) / (y[i - 1] - y[i]);
            right = d[i - 1] + f * (d[i] - d[i - 1]);
            found_right = true;
            break;
        }
    }
    init.gamma = (found_left && found_right && right > left) ? right - left
                                                             : span / 4.0;
    return init;
}

}  // namespace detail

// Weighted nonlinear least squares for {center, gamma, amplitude,
// background} with Poisson-motivated weights 1/max(counts, 1).
// Uncertainties come from the local quadratic model of the objective.
inline FitResult fit_lorentzian(const Spectrum& spectrum) {
    spectrum.validate();
    const std::size_t n = spectrum.counts.size();
    if (n < 5) {
        throw std::invalid_argument("fit_lorentzian: need at least 5 points");
    }
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<double>(spectrum.counts[i]);
        w[i] = 1.0 / std::max(y[i], 1.0);
    }
    const double span = spectrum.detuning_mhz.back() - spectrum.detuning_mhz.front();
    const auto init = detail::init_lorentzian(spectrum.detuning_mhz, y, span);

    if (init.amplitude < 5.0 * std::sqrt(std::max(init.background, 1.0))) {
        throw NoPeakError("fit_lorentzian: no peak above 5 sigma of background");
    }

    LmOptions opt;
    opt.scales = {std::max(init.gamma, 1e-3), std::max(init.gamma, 1e-3),
                  std::max(init.amplitude, 1.0), std::max(init.background, 1.0)};
    const auto lm = levenberg_marquardt(
        [](const std::vector<double>& p, double x) {
            return lorentzian(x, p[0], p[1], p[2], p[3]);
        },
        spectrum.detuning_mhz, y, w,
        {init.center, init.gamma, init.amplitude, init.background}, opt);

    FitResult r;
    r.center_mhz = lm.params[0];
    r.center_err = lm.sigmas[0];
    r.gamma_mhz = std::abs(lm.params[1]);  // model is even in gamma
    r.gamma_err = lm.sigmas[1];
    r.amplitude = lm.params[2];
    r.amplitude_err = lm.sigmas[2];
    r.background = lm.params[3];
    r.background_err = lm.sigmas[3];
    r.converged = lm.converged && lm.covariance_ok;
    r.residual_norm = lm.residual_norm;
    r.iterations = lm.iterations;
    return r;
}

// Transmission scan: raw transmitted counts per point, normalized by the
// far-detuned baseline expectation. peak_rate_cps acts as the probe rate.
struct TransmissionScan {
    std::vector<double> detuning_mhz;
    std::vector<long long> counts;
    double baseline_counts = 0.0;
    std::vector<double> transmission;
};

inline TransmissionScan synthesize_transmission_scan(const Emitter& emitter,
                                                     const ScanConfig& scan,
                                                     std::uint64_t seed) {
    scan.validate();
    const double gamma = emitter.gamma_mhz();
    const double beta_eff = emitter.beta_effective();
    const double line_mhz =
        (emitter.zpl_offset_ghz - scan.center_offset_ghz) * 1000.0;
    const double integration = scan.dwell_s * scan.repeats;
    TransmissionScan t;
    t.detuning_mhz = scan.detuning_grid();
    t.baseline_counts = scan.peak_rate_cps * integration;
    Rng rng(derive_seed(seed, "transmission"));
    for (double d : t.detuning_mhz) {
        const double tr = transmission_point(d - line_mhz, beta_eff, gamma);
        const long long c = rng.poisson(tr * t.baseline_counts);
        t.counts.push_back(c);
        t.transmission.push_back(static_cast<double>(c) / t.baseline_counts);
    }
    return t;
}

struct DipFitResult {
    double center_mhz = 0.0, center_err = 0.0;
    double gamma_mhz = 0.0, gamma_err = 0.0;
    double depth = 0.0, depth_err = 0.0;  // relative dip depth = 1 - T(0)/T(inf)
    double baseline = 1.0;
    double beta_observed = 0.0;
    bool converged = false;
};

// The coherent-extinction lineshape is an exact Lorentzian dip:
// T(d) = b * (1 - depth * L(d)), depth = 1 - (1 - beta)^2.
inline DipFitResult fit_transmission_dip(const TransmissionScan& scan) {
    const std::size_t n = scan.transmission.size();
    if (n < 5) {
        throw std::invalid_argument("fit_transmission_dip: need >= 5 points");
    }
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = scan.transmission[i];
        // Poisson noise on counts maps to var(T) = T/baseline.
        w[i] = scan.baseline_counts / std::max(y[i], 1e-6);
    }
    // Fit the inverted spectrum as a peak.
    const std::size_t k = std::max<std::size_t>(1, n / 8);
    std::vector<double> outer;
    for (std::size_t i = 0; i < k; ++i) outer.push_back(y[i]);
    for (std::size_t i = n - k; i < n; ++i) outer.push_back(y[i]);
    const double base = detail::median_of(outer);
    const std::size_t dip =
        static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
    const double amp0 = base - y[dip];
    const double span = scan.detuning_mhz.back() - scan.detuning_mhz.front();

    LmOptions opt;
    const double g0 = span / 8.0;
    opt.scales = {g0, g0, std::max(amp0, 1e-3), std::max(base, 1e-3)};
    const auto lm = levenberg_marquardt(
        [](const std::vector<double>& p, double x) {
            return lorentzian(x, p[0], p[1], -p[2], p[3]);
        },
        scan.detuning_mhz, y, w, {scan.detuning_mhz[dip], g0, amp0, base}, opt);

    DipFitResult r;
    r.center_mhz = lm.params[0];
    r.center_err = lm.sigmas[0];
    r.gamma_mhz = std::abs(lm.params[1]);
    r.gamma_err = lm.sigmas[1];
    r.baseline = lm.params[3];
    r.depth = lm.params[2] / lm.params[3];
    r.depth_err = lm.sigmas[2] / lm.params[3];
    const double t_res = std::clamp(1.0 - r.depth, 1e-12, 1.0);
    r.beta_observed = 1.0 - std::sqrt(t_res);
    r.converged = lm.converged && lm.covariance_ok;
    return r;
}

struct CorrelationHistogram {
    std::vector<double> delay_bins_ns;
    std::vector<long long> coincidences;

    void validate() const {
        if (delay_bins_ns.size() != coincidences.size()) {
            throw std::invalid_argument("CorrelationHistogram: length mismatch");
        }
        const std::size_t n = delay_bins_ns.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(delay_bins_ns[i] + delay_bins_ns[n - 1 - i]) > 1e-9) {
                throw std::invalid_argument(
                    "CorrelationHistogram: bins must be symmetric about 0");
            }
        }
    }
};

inline CorrelationHistogram synthesize_g2_histogram(
    double g2_zero, double tau_corr_ns, double asymptote_counts,
    double max_delay_ns, int bins_per_side, std::uint64_t seed) {
    if (bins_per_side < 3) {
        throw std::invalid_argument("synthesize_g2_histogram: need >= 3 bins per side");
    }
    CorrelationHistogram h;
    Rng rng(derive_seed(seed, "g2"));
    for (int i = -bins_per_side; i <= bins_per_side; ++i) {
        const double tau =
            max_delay_ns * static_cast<double>(i) / static_cast<double>(bins_per_side);
        h.delay_bins_ns.push_back(tau);
        const double mu = asymptote_counts * g2_model(tau, g2_zero, tau_corr_ns);
        h.coincidences.push_back(rng.poisson(mu));
    }
    return h;
}

struct G2FitResult {
    double g2_zero = 0.0, g2_zero_err = 0.0;
    double tau_corr_ns = 0.0, tau_corr_err = 0.0;
    double asymptote = 0.0, asymptote_err = 0.0;
    bool converged = false;
    bool tau_identifiable = true;
};

// Least-squares fit of the antibunching model scaled by the histogram's
// asymptotic level: c(tau) = A * (1 - (1 - g2) * exp(-|tau|/tau_c)).
inline G2FitResult fit_g2(const CorrelationHistogram& hist) {
    hist.validate();
    const std::size_t n = hist.coincidences.size();
    if (n < 7) {
        throw std::invalid_argument("fit_g2: need at least 7 bins");
    }
    long long total = 0;
    for (long long c : hist.coincidences) total += c;
    if (total <= 0) {
        throw DegenerateDataError("fit_g2: no coincidences");
    }
    std::vector<double> y(n), w(n);
    const double max_abs_tau =
        std::max(std::abs(hist.delay_bins_ns.front()), hist.delay_bins_ns.back());
    double asym = 0.0;
    int n_asym = 0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<double>(hist.coincidences[i]);
        w[i] = 1.0 / std::max(y[i], 1.0);
        if (std::abs(hist.delay_bins_ns[i]) >= 0.75 * max_abs_tau) {
            asym += y[i];
            ++n_asym;
        }
    }
    asym /= std::max(n_asym, 1);
    if (!(asym > 0.0)) {
        throw DegenerateDataError("fit_g2: zero asymptotic level");
    }
    const double min_c = *std::min_element(y.begin(), y.end());
    const double g2_init = std::clamp(min_c / asym, 0.0, 1.5);
    const double tau_init = std::max(max_abs_tau / 5.0, 1e-3);

    LmOptions opt;
    opt.scales = {std::max(asym, 1.0), 1.0, tau_init};
    const auto lm = levenberg_marquardt(
        [](const std::vector<double>& p, double tau) {
            const double contrast = 1.0 - p[1];
            return p[0] * (1.0 - contrast * std::exp(-std::abs(tau) /
                                                     std::max(p[2], 1e-9)));
        },
        hist.delay_bins_ns, y, w, {asym, g2_init, tau_init}, opt);

    G2FitResult r;
    r.asymptote = lm.params[0];
    r.asymptote_err = lm.sigmas[0];
    r.g2_zero = lm.params[1];
    r.g2_zero_err = lm.sigmas[1];
    r.tau_corr_ns = lm.params[2];
    r.tau_corr_err = lm.sigmas[2];
    r.converged = lm.converged;
    const double contrast = 1.0 - r.g2_zero;
    r.tau_identifiable = lm.covariance_ok && contrast > 1e-3 &&
                         std::isfinite(r.tau_corr_err) &&
                         r.tau_corr_err < 10.0 * std::abs(r.tau_corr_ns);
    return r;
}

struct ChannelLinewidthRow {
    int channel = 0;
    double gamma_mhz = 0.0;
    double gamma_err = 0.0;
    double gamma0_mhz = 0.0;
    double ratio = 0.0;
    double center_offset_ghz = 0.0;
    bool converged = false;
};

struct LinewidthReport {
    std::vector<ChannelLinewidthRow> rows;
    double mean_gamma_mhz = 0.0;
    double std_gamma_mhz = 0.0;
    double mean_ratio = 0.0;
    double std_ratio = 0.0;
    double inhom_spread_ghz = 0.0;  // max - min ZPL offset over the channels
};

// Synthesize-then-fit per channel; each channel's scan is centred on its
// own line. Channels use independent substreams, so a parallel
// implementation over channels would reproduce this sequential output.
inline LinewidthReport chiplet_linewidth_report(std::span<const Emitter> emitters,
                                                const ScanConfig& scan,
                                                std::uint64_t seed) {
    if (emitters.empty()) {
        throw std::invalid_argument("chiplet_linewidth_report: no emitters");
    }
    LinewidthReport report;
    double off_min = std::numeric_limits<double>::infinity();
    double off_max = -std::numeric_limits<double>::infinity();
    std::vector<double> gammas, ratios;
    for (std::size_t i = 0; i < emitters.size(); ++i) {
        const Emitter& e = emitters[i];
        ScanConfig channel_scan = scan;
        channel_scan.center_offset_ghz = e.zpl_offset_ghz;
        ChannelLinewidthRow row;
        row.channel = static_cast<int>(i);
        row.gamma0_mhz = e.gamma0_mhz();
        row.center_offset_ghz = e.zpl_offset_ghz;
        const std::uint64_t channel_seed =
            derive_seed(seed, "channel", static_cast<std::uint64_t>(i));
        try {
            const Spectrum s = synthesize_ple(e, channel_scan, channel_seed);
            const FitResult f = fit_lorentzian(s);
            row.gamma_mhz = f.gamma_mhz;
            row.gamma_err = f.gamma_err;
            row.ratio = f.gamma_mhz / row.gamma0_mhz;
            row.converged = f.converged;
        } catch (const NoPeakError&) {
            row.gamma_mhz = std::numeric_limits<double>::quiet_NaN();
            row.gamma_err = std::numeric_limits<double>::quiet_NaN();
            row.ratio = std::numeric_limits<double>::quiet_NaN();
            row.converged = false;
        }
        off_min = std::min(off_min, e.zpl_offset_ghz);
        off_max = std::max(off_max, e.zpl_offset_ghz);
        if (row.converged) {
            gammas.push_back(row.gamma_mhz);
            ratios.push_back(row.ratio);
        }
        report.rows.push_back(row);
    }
    report.inhom_spread_ghz = off_max - off_min;
    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) {
            mean = sd = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        double s = 0.0;
        for (double x : v) s += x;
        mean = s / static_cast<double>(v.size());
        if (v.size() < 2) {
            sd = 0.0;
            return;
        }
        double q = 0.0;
        for (double x : v) q += (x - mean) * (x - mean);
        sd = std::sqrt(q / static_cast<double>(v.size() - 1));
    };
    mean_std(gammas, report.mean_gamma_mhz, report.std_gamma_mhz);
    mean_std(ratios, report.mean_ratio, report.std_ratio);
    return report;
}

inline void write_spectrum_csv(const std::string& path, const Spectrum& s) {
    CsvWriter w(path);
    w.header({"detuning_mhz", "counts"});
    for (std::size_t i = 0; i < s.detuning_mhz.size(); ++i) {
        w.field(s.detuning_mhz[i]).field(s.counts[i]);
        w.end_row();
    }
}

inline Spectrum read_spectrum_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int cd = t.column_index("detuning_mhz");
    const int cc = t.column_index("counts");
    Spectrum s;
    for (const auto& r : t.rows) {
        s.detuning_mhz.push_back(parse_double(r[cd]));
        s.counts.push_back(parse_int(r[cc]));
    }
    s.validate();
    return s;
}

inline void write_histogram_csv(const std::string& path,
                                const CorrelationHistogram& h) {
    CsvWriter w(path);
    w.header({"delay_ns", "coincidences"});
    for (std::size_t i = 0; i < h.delay_bins_ns.size(); ++i) {
        w.field(h.delay_bins_ns[i]).field(h.coincidences[i]);
        w.end_row();
    }
}

inline CorrelationHistogram read_histogram_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int cd = t.column_index("delay_ns");
    const int cc = t.column_index("coincidences");
    CorrelationHistogram h;
    for (const auto& r : t.rows) {
        h.delay_bins_ns.push_back(parse_double(r[cd]));
        h.coincidences.push_back(parse_int(r[cc]));
    }
    h.validate();
    return h;
}

inline void write_linewidth_report_csv(const std::string& path,
                                       const LinewidthReport& report) {
    CsvWriter w(path);
    w.header({"channel", "gamma_mhz", "gamma_err", "gamma0_mhz", "ratio",
              "center_offset_ghz", "converged"});
    for (const auto& r : report.rows) {
        w.field(r.channel)
            .field(r.gamma_mhz)
            .field(r.gamma_err)
            .field(r.gamma0_mhz)
            .field(r.ratio)
            .field(r.center_offset_ghz)
            .field(r.converged);
        w.end_row();
    }
}

}  // namespace qmcsim
