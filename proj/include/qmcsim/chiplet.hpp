#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmcsim/implant.hpp"
#include "qmcsim/parallel.hpp"
#include "qmcsim/rng.hpp"

namespace qmcsim {

struct ChipletDesign {
    int n_channels = 8;
    double waveguide_width_nm = 340.0;
    double waveguide_height_nm = 200.0;
    double channel_pitch_nm = 1000.0;  // matches the implant pitch
    int min_emitters_per_channel = 1;

    void validate() const {
        if (n_channels < 1) {
            throw std::invalid_argument("ChipletDesign.n_channels must be >= 1");
        }
        if (!(waveguide_width_nm > 0.0) || !(waveguide_height_nm > 0.0)) {
            throw std::invalid_argument(
                "ChipletDesign waveguide dimensions must be positive");
        }
        if (!(channel_pitch_nm > 0.0)) {
            throw std::invalid_argument(
                "ChipletDesign.channel_pitch_nm must be positive");
        }
        if (min_emitters_per_channel < 1) {
            throw std::invalid_argument(
                "ChipletDesign.min_emitters_per_channel must be >= 1");
        }
    }
};

// One global (dx, dy) draw per chiplet, plus an optional small rotation
// about the chiplet centre. Models the single FIB-mask-to-pattern offset.
struct AlignmentModel {
    double sigma_offset_nm = 100.0;
    double rotation_mrad_sigma = 0.0;

    void validate() const {
        if (!(sigma_offset_nm >= 0.0) || !(rotation_mrad_sigma >= 0.0)) {
            throw std::invalid_argument("AlignmentModel scales must be >= 0");
        }
    }
};

// Stable-emitter count per channel. Channel j accepts an emitter iff its
// displaced x lands within half a waveguide width of the channel centre;
// y only slides emitters along the waveguide and is ignored.
inline std::vector<int> count_coupled(const ChipletDesign& design,
                                      const std::vector<ImplantSpot>& spots,
                                      double dx_nm, double dy_nm,
                                      double rotation_mrad = 0.0) {
    design.validate();
    std::vector<int> counts(static_cast<std::size_t>(design.n_channels), 0);
    const double half_width = design.waveguide_width_nm / 2.0;
    const double pitch = design.channel_pitch_nm;

    double cx = 0.0, cy = 0.0;
    if (rotation_mrad != 0.0 && !spots.empty()) {
        int max_col = 0, max_row = 0;
        for (const auto& s : spots) {
            max_col = std::max(max_col, s.col);
            max_row = std::max(max_row, s.row);
        }
        cx = max_col * pitch / 2.0;
        cy = max_row * pitch / 2.0;
    }
    const double theta = rotation_mrad * 1e-3;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);

    for (const auto& spot : spots) {
        for (const auto& e : spot.emitters) {
            if (!e.stable) continue;
            double x = e.position_nm[0];
            if (rotation_mrad != 0.0) {
                const double rx = x - cx;
                const double ry = e.position_nm[1] - cy;
                x = cx + cos_t * rx - sin_t * ry;
            }
            x += dx_nm;
            (void)dy_nm;  // y misalignment does not change channel membership
            const double j = std::round(x / pitch);
            if (j < 0.0 || j >= static_cast<double>(design.n_channels)) continue;
            if (std::abs(x - j * pitch) <= half_width) {
                ++counts[static_cast<std::size_t>(j)];
            }
        }
    }
    return counts;
}

struct YieldEstimate {
    double yield_fraction = 0.0;
    double stderr_ = 0.0;
    long long trials = 0;
    long long successes = 0;
};

namespace detail {

// One simulated chiplet: fresh implant population plus one shared
// alignment draw. Channel columns are keyed by (col, row) substreams, so
// an 8-channel trial is a strict subset of the 16-channel trial with the
// same seed; that makes yield exactly monotone in n_channels under
// common random numbers.
inline bool chiplet_trial(const ChipletDesign& design, const ImplantSpec& spec,
                          const AlignmentModel& alignment, std::uint64_t seed,
                          long long trial) {
    const std::uint64_t trial_seed =
        derive_seed(seed, "trial", static_cast<std::uint64_t>(trial));
    Rng offset_rng(derive_seed(trial_seed, "offset"));
    const double dx = alignment.sigma_offset_nm > 0.0
                          ? offset_rng.normal(0.0, alignment.sigma_offset_nm)
                          : 0.0;
    const double dy = alignment.sigma_offset_nm > 0.0
                          ? offset_rng.normal(0.0, alignment.sigma_offset_nm)
                          : 0.0;
    const double rot = alignment.rotation_mrad_sigma > 0.0
                           ? offset_rng.normal(0.0, alignment.rotation_mrad_sigma)
                           : 0.0;

    ImplantSpec trial_spec = spec;
    trial_spec.grid_cols = design.n_channels;
    trial_spec.pitch_nm = design.channel_pitch_nm;
    const auto spots = generate_spots(trial_spec, trial_seed);
    const auto counts = count_coupled(design, spots, dx, dy, rot);
    for (int c : counts) {
        if (c < design.min_emitters_per_channel) return false;
    }
    return true;
}

}  // namespace detail

// Fraction of simulated chiplets whose every channel holds at least the
// threshold number of stable emitters. Deterministic per seed for any
// thread count: trials live on substreams and block success counts are
// reduced in block order.
inline YieldEstimate defect_free_yield(const ChipletDesign& design,
                                       const ImplantSpec& spec,
                                       const AlignmentModel& alignment,
                                       long long trials, std::uint64_t seed,
                                       int n_threads = 1) {
    design.validate();
    spec.validate();
    alignment.validate();
    if (trials < 1) {
        throw std::invalid_argument("defect_free_yield: trials must be >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(trials);
    const std::size_t block = 1024;
    std::vector<long long> block_successes((n + block - 1) / block, 0);
    parallel_blocks(n, block, n_threads,
                    [&](std::size_t b, std::size_t begin, std::size_t end) {
                        long long s = 0;
                        for (std::size_t t = begin; t < end; ++t) {
                            if (detail::chiplet_trial(design, spec, alignment, seed,
                                                      static_cast<long long>(t))) {
                                ++s;
                            }
                        }
                        block_successes[b] = s;
                    });
    long long successes = 0;
    for (long long s : block_successes) successes += s;

    YieldEstimate est;
    est.trials = trials;
    est.successes = successes;
    est.yield_fraction = static_cast<double>(successes) / static_cast<double>(trials);
    est.stderr_ = std::sqrt(est.yield_fraction * (1.0 - est.yield_fraction) /
                            static_cast<double>(trials));
    return est;
}

struct CalibrationOptions {
    double lambda_hi = 50.0;
    double yield_tol = 0.01;
    double lambda_tol = 1e-3;
    long long trials = 20000;
    int max_iterations = 64;
    int n_threads = 1;
};

struct CalibrationResult {
    double lambda_star = 0.0;
    double achieved_yield = 0.0;
    int iterations = 0;
};

class CalibrationError : public std::runtime_error {
  public:
    CalibrationError(const std::string& msg, double lo, double hi,
                     double yield_lo, double yield_hi)
        : std::runtime_error(msg), bracket_lo(lo), bracket_hi(hi),
          yield_at_lo(yield_lo), yield_at_hi(yield_hi) {}
    double bracket_lo, bracket_hi, yield_at_lo, yield_at_hi;
};

// Bisection on lambda against the Monte Carlo yield, evaluated with the
// same seed every time (common random numbers). With the quantile-based
// Poisson counts the empirical yield is monotone non-decreasing in
// lambda, so the bracket stays valid.
inline CalibrationResult calibrate_lambda(const ChipletDesign& design,
                                          const ImplantSpec& spec_template,
                                          const AlignmentModel& alignment,
                                          double target_yield, std::uint64_t seed,
                                          const CalibrationOptions& opt = {}) {
    if (!(target_yield > 0.0 && target_yield < 1.0)) {
        throw std::invalid_argument(
            "calibrate_lambda: target yield must be in (0, 1)");
    }
    auto eval = [&](double lambda) {
        ImplantSpec s = spec_template;
        s.mean_emitters_per_spot = lambda;
        return defect_free_yield(design, s, alignment, opt.trials, seed,
                                 opt.n_threads)
            .yield_fraction;
    };

    double lo = 0.0, hi = opt.lambda_hi;
    const double y_lo = 0.0;  // lambda = 0 has no emitters at all
    const double y_hi = eval(hi);
    if (y_hi < target_yield) {
        throw CalibrationError(
            "calibrate_lambda: target yield " + std::to_string(target_yield) +
                " unreachable with lambda_hi " + std::to_string(hi) +
                " (yield there " + std::to_string(y_hi) + ")",
            lo, hi, y_lo, y_hi);
    }

    CalibrationResult res;
    double lambda = hi, yield = y_hi;
    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;
        lambda = 0.5 * (lo + hi);
        yield = eval(lambda);
        if (std::abs(yield - target_yield) < opt.yield_tol ||
            (hi - lo) < opt.lambda_tol) {
            break;
        }
        if (yield < target_yield) {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    res.lambda_star = lambda;
    res.achieved_yield = yield;
    return res;
}

struct YieldRow {
    int n_channels = 0;
    double lambda = 0.0;
    double sigma_offset_nm = 0.0;
    int threshold = 1;
    long long trials = 0;
    double yield_fraction = 0.0;
    double stderr_ = 0.0;
};

// Yield per channel count at fixed parameters; the same seed is reused
// for every row so the comparison is a paired common-random-number test.
inline std::vector<YieldRow> yield_vs_channels(const ChipletDesign& design_template,
                                               const ImplantSpec& spec,
                                               const AlignmentModel& alignment,
                                               const std::vector<int>& channel_counts,
                                               long long trials, std::uint64_t seed,
                                               int n_threads = 1) {
    std::vector<YieldRow> rows;
    rows.reserve(channel_counts.size());
    for (int n : channel_counts) {
        ChipletDesign d = design_template;
        d.n_channels = n;
        const YieldEstimate est =
            defect_free_yield(d, spec, alignment, trials, seed, n_threads);
        YieldRow row;
        row.n_channels = n;
        row.lambda = spec.mean_emitters_per_spot;
        row.sigma_offset_nm = alignment.sigma_offset_nm;
        row.threshold = d.min_emitters_per_channel;
        row.trials = trials;
        row.yield_fraction = est.yield_fraction;
        row.stderr_ = est.stderr_;
        rows.push_back(row);
    }
    return rows;
}

inline void write_yield_csv(const std::string& path,
                            const std::vector<YieldRow>& rows) {
    CsvWriter w(path);
    w.header({"n_channels", "lambda", "sigma_offset_nm", "threshold", "trials",
              "yield", "stderr"});
    for (const auto& r : rows) {
        w.field(r.n_channels)
            .field(r.lambda)
            .field(r.sigma_offset_nm)
            .field(r.threshold)
            .field(r.trials)
            .field(r.yield_fraction)
            .field(r.stderr_);
        w.end_row();
    }
}

}  // namespace qmcsim
