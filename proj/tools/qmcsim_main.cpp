// qmcsim: digital-twin simulator of a colour-centre chiplet-to-photonics
// integration pipeline. Subcommands map onto pipeline stages plus
// calibration, file-based fitting, and the paper-reproduction claim table.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qmcsim/qmcsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitClaimFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<long long> trials;
    std::optional<std::string> out_dir;
    std::string stages;
    int threads = 1;
};

qmcsim::RunConfig make_config(const GlobalArgs& args) {
    qmcsim::RunConfig config = args.config_path.empty()
                                   ? qmcsim::default_config()
                                   : qmcsim::load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.trials) {
        if (*args.trials < 1) throw qmcsim::ConfigError("trials: must be >= 1");
        config.trials = *args.trials;
    }
    if (args.out_dir) config.output_dir = *args.out_dir;
    config.validate();
    return config;
}

void add_global_flags(CLI::App* cmd, GlobalArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--seed", args.seed, "master seed (64-bit)");
    cmd->add_option("--trials", args.trials, "Monte Carlo trials");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--stages", args.stages,
                    "comma-separated stage list overriding the default");
    cmd->add_option("--threads", args.threads, "worker threads")
        ->check(CLI::Range(1, 256));
}

int run_stage_command(const GlobalArgs& args, const std::string& default_stage) {
    const qmcsim::RunConfig config = make_config(args);
    const std::set<qmcsim::Stage> stages =
        args.stages.empty() ? qmcsim::parse_stages(default_stage)
                            : qmcsim::parse_stages(args.stages);
    const qmcsim::PipelineResult result =
        qmcsim::run_pipeline(config, stages, args.threads);
    for (const auto& a : result.artifacts) {
        std::cout << a.name << "  sha256=" << a.sha256 << "  bytes=" << a.bytes
                  << '\n';
    }
    std::cout << "manifest: " << result.manifest_path << '\n';
    return kExitOk;
}

int run_calibrate(const GlobalArgs& args, double target_yield) {
    const qmcsim::RunConfig config = make_config(args);
    qmcsim::ImplantSpec spec = config.implant;
    spec.species = config.species;
    qmcsim::CalibrationOptions opt;
    opt.n_threads = args.threads;
    if (args.trials) opt.trials = *args.trials;
    const qmcsim::CalibrationResult cal = qmcsim::calibrate_lambda(
        config.chiplet, spec, config.alignment, target_yield,
        qmcsim::derive_seed(config.seed, "stage:calibrate"), opt);
    std::cout << "lambda_star=" << qmcsim::format_double(cal.lambda_star)
              << " achieved_yield=" << qmcsim::format_double(cal.achieved_yield)
              << " iterations=" << cal.iterations << '\n';
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    qmcsim::CsvWriter w((dir / "calibration.csv").string());
    w.header({"target_yield", "lambda_star", "achieved_yield", "iterations",
              "trials_per_eval", "sigma_offset_nm"});
    w.field(target_yield)
        .field(cal.lambda_star)
        .field(cal.achieved_yield)
        .field(cal.iterations)
        .field(static_cast<long long>(opt.trials))
        .field(config.alignment.sigma_offset_nm);
    w.end_row();
    return kExitOk;
}

int run_fit(const std::string& kind, const std::string& in_path,
            const std::string& out_path) {
    if (kind == "lorentzian") {
        const qmcsim::Spectrum s = qmcsim::read_spectrum_csv(in_path);
        const qmcsim::FitResult f = qmcsim::fit_lorentzian(s);
        std::cout << "center_mhz=" << qmcsim::format_double(f.center_mhz)
                  << " gamma_mhz=" << qmcsim::format_double(f.gamma_mhz)
                  << " gamma_err=" << qmcsim::format_double(f.gamma_err)
                  << " converged=" << (f.converged ? 1 : 0) << '\n';
        if (!out_path.empty()) {
            qmcsim::CsvWriter w(out_path);
            w.header({"center_mhz", "center_err", "gamma_mhz", "gamma_err",
                      "amplitude", "amplitude_err", "background",
                      "background_err", "converged", "residual_norm"});
            w.field(f.center_mhz)
                .field(f.center_err)
                .field(f.gamma_mhz)
                .field(f.gamma_err)
                .field(f.amplitude)
                .field(f.amplitude_err)
                .field(f.background)
                .field(f.background_err)
                .field(f.converged)
                .field(f.residual_norm);
            w.end_row();
        }
        return kExitOk;
    }
    if (kind == "g2") {
        const qmcsim::CorrelationHistogram h = qmcsim::read_histogram_csv(in_path);
        const qmcsim::G2FitResult f = qmcsim::fit_g2(h);
        std::cout << "g2_zero=" << qmcsim::format_double(f.g2_zero)
                  << " g2_zero_err=" << qmcsim::format_double(f.g2_zero_err)
                  << " tau_corr_ns=" << qmcsim::format_double(f.tau_corr_ns)
                  << " tau_identifiable=" << (f.tau_identifiable ? 1 : 0)
                  << '\n';
        if (!out_path.empty()) {
            qmcsim::CsvWriter w(out_path);
            w.header({"g2_zero", "g2_zero_err", "tau_corr_ns", "tau_corr_err",
                      "asymptote", "asymptote_err", "converged",
                      "tau_identifiable"});
            w.field(f.g2_zero)
                .field(f.g2_zero_err)
                .field(f.tau_corr_ns)
                .field(f.tau_corr_err)
                .field(f.asymptote)
                .field(f.asymptote_err)
                .field(f.converged)
                .field(f.tau_identifiable);
            w.end_row();
        }
        return kExitOk;
    }
    throw qmcsim::ConfigError("fit: unknown --kind " + kind +
                              " (expected lorentzian or g2)");
}

int run_reproduce(const GlobalArgs& args) {
    qmcsim::RunConfig config = make_config(args);
    if (!args.out_dir && args.config_path.empty()) config.output_dir = "repro_out";
    const qmcsim::ReproReport report =
        qmcsim::reproduce_paper(config, args.threads);
    std::printf("%-22s %12s %12s %10s  %s\n", "claim", "paper", "simulated",
                "tolerance", "status");
    for (const auto& c : report.claims) {
        std::printf("%-22s %12.6g %12.6g %10.4g  %s\n", c.id.c_str(),
                    c.paper_value, c.simulated_value, c.tolerance,
                    c.pass ? "PASS" : "FAIL");
    }
    std::cout << (report.all_pass ? "all claims pass" : "CLAIM FAILURES present")
              << '\n';
    return report.all_pass ? kExitOk : kExitClaimFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum micro-chiplet photonics pipeline simulator"};
    app.require_subcommand(1);

    GlobalArgs args;
    std::string fit_kind = "lorentzian";
    std::string fit_in, fit_out;
    double target_yield = 0.40;

    auto* implant = app.add_subcommand("implant", "generate implantation spots");
    add_global_flags(implant, args);
    auto* yield_cmd = app.add_subcommand("yield", "defect-free yield tables");
    add_global_flags(yield_cmd, args);
    auto* calibrate =
        app.add_subcommand("calibrate", "calibrate lambda to a target yield");
    add_global_flags(calibrate, args);
    calibrate->add_option("--target", target_yield, "target defect-free yield")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6));
    auto* assemble = app.add_subcommand("assemble", "pick-and-place simulation");
    add_global_flags(assemble, args);
    auto* spectra = app.add_subcommand("spectra", "synthesize and fit spectra");
    add_global_flags(spectra, args);
    auto* fit = app.add_subcommand("fit", "fit a spectrum or g2 histogram CSV");
    fit->add_option("--kind", fit_kind, "lorentzian or g2");
    fit->add_option("--in", fit_in, "input CSV")->required();
    fit->add_option("--out", fit_out, "optional output CSV for the fit");
    auto* tune = app.add_subcommand("tune", "strain-tuning plans and coverage");
    add_global_flags(tune, args);
    auto* reproduce =
        app.add_subcommand("reproduce", "run the reported-value claim table");
    add_global_flags(reproduce, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (implant->parsed()) return run_stage_command(args, "implant");
        if (yield_cmd->parsed()) return run_stage_command(args, "yield");
        if (calibrate->parsed()) return run_calibrate(args, target_yield);
        if (assemble->parsed()) return run_stage_command(args, "assemble");
        if (spectra->parsed()) return run_stage_command(args, "spectra");
        if (fit->parsed()) return run_fit(fit_kind, fit_in, fit_out);
        if (tune->parsed()) return run_stage_command(args, "tune");
        if (reproduce->parsed()) return run_reproduce(args);
    } catch (const qmcsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
    return kExitConfigError;
}
