#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "qmcsim/implant.hpp"

using namespace qmcsim;
using Catch::Approx;

TEST_CASE("fwhm to sigma", "[implant]") {
    CHECK(fwhm_to_sigma(40.0) == Approx(16.986436005760382).margin(1e-9));
    CHECK(fwhm_to_sigma(40.0) == Approx(16.99).margin(0.01));
    CHECK(fwhm_to_sigma(2.35482) == Approx(1.0).margin(1e-5));
    CHECK(fwhm_to_sigma(50.0) == Approx(21.23).margin(0.01));
    CHECK_THROWS_AS(fwhm_to_sigma(0.0), std::domain_error);
    CHECK_THROWS_AS(fwhm_to_sigma(-5.0), std::domain_error);
}

TEST_CASE("zero rate gives empty spots", "[implant]") {
    ImplantSpec spec;
    spec.mean_emitters_per_spot = 0.0;
    spec.grid_cols = 10;
    spec.grid_rows = 10;
    for (const auto& spot : generate_spots(spec, 7)) {
        CHECK(spot.emitters.empty());
    }
}

TEST_CASE("generation is deterministic", "[implant]") {
    ImplantSpec spec;
    spec.grid_cols = 16;
    spec.grid_rows = 4;
    const auto a = generate_spots(spec, 1234);
    const auto b = generate_spots(spec, 1234);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].emitters.size() == b[i].emitters.size());
        for (std::size_t k = 0; k < a[i].emitters.size(); ++k) {
            const Emitter& x = a[i].emitters[k];
            const Emitter& y = b[i].emitters[k];
            CHECK(x.position_nm == y.position_nm);
            CHECK(x.lifetime_ns == y.lifetime_ns);
            CHECK(x.dephasing_mhz == y.dephasing_mhz);
            CHECK(x.zpl_offset_ghz == y.zpl_offset_ghz);
            CHECK(x.strain_coeff_ghz_per_v2 == y.strain_coeff_ghz_per_v2);
            CHECK(x.stable == y.stable);
        }
    }
    const auto c = generate_spots(spec, 1235);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i) {
        any_diff = a[i].emitters.size() != c[i].emitters.size();
    }
    CHECK(any_diff);
}

namespace {

std::vector<ImplantSpot> big_population(const SpeciesParams& sp, double lambda,
                                        double stable, std::uint64_t seed) {
    ImplantSpec spec;
    spec.species = sp;
    spec.grid_cols = 500;
    spec.grid_rows = 200;  // 1e5 spots
    spec.mean_emitters_per_spot = lambda;
    spec.stable_fraction = stable;
    return generate_spots(spec, seed);
}

}  // namespace

TEST_CASE("population statistics match the species constants", "[implant]") {
    const auto spots = big_population(gev_params(), 2.0, 0.9, 42);
    const SpotStatistics st = spot_statistics(spots);

    // law of large numbers band for Poisson(2) over 1e5 spots
    CHECK(st.mean_count == Approx(2.0).margin(0.01));
    // Poisson: variance equals mean, within 5%
    CHECK(st.count_variance == Approx(st.mean_count).epsilon(0.05));
    // implantation depth of the GeV recipe
    CHECK(st.depth_mean == Approx(74.0).margin(0.5));
    CHECK(st.depth_std == Approx(12.0).margin(0.5));
    CHECK(st.lateral_fwhm_est == Approx(40.0).margin(2.0));

    // stable flags are Bernoulli(0.9): 3-sigma binomial band
    const double n = static_cast<double>(st.total_emitters);
    const double band = 3.0 * std::sqrt(0.9 * 0.1 / n);
    CHECK(st.stable_fraction == Approx(0.9).margin(band));

    for (const auto& spot : spots) {
        for (const auto& e : spot.emitters) {
            CHECK(e.position_nm[2] > 0.0);
            CHECK(std::isfinite(e.position_nm[0]));
            CHECK(std::isfinite(e.position_nm[1]));
        }
    }
}

TEST_CASE("SiV population statistics", "[implant]") {
    const auto spots = big_population(siv_params(), 2.0, 1.0, 43);
    const SpotStatistics st = spot_statistics(spots);
    CHECK(st.depth_mean == Approx(113.0).margin(0.5));
    CHECK(st.depth_std == Approx(19.0).margin(0.5));
    CHECK(st.lateral_fwhm_est == Approx(50.0).margin(2.0));
}

TEST_CASE("sampled lifetimes and dephasing shape the linewidth population",
          "[implant]") {
    const auto sp = gev_params();
    Rng rng(derive_seed(99, "emitters"));
    double ratio_sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const Emitter e = sample_emitter(sp, rng);
        ratio_sum += e.gamma_mhz() / e.gamma0_mhz();
    }
    // population target from the chiplet statistics
    CHECK(ratio_sum / n == Approx(1.7).margin(0.02));
}

TEST_CASE("spot statistics rejects empty input", "[implant]") {
    CHECK_THROWS_AS(spot_statistics({}), std::invalid_argument);
    ImplantSpec spec;
    spec.mean_emitters_per_spot = 0.0;
    spec.grid_cols = 1;
    spec.grid_rows = 1;
    const auto spots = generate_spots(spec, 1);
    const SpotStatistics st = spot_statistics(spots);
    CHECK(st.mean_count == 0.0);
    CHECK(st.total_emitters == 0);
}

TEST_CASE("spots round-trip through CSV bit-exactly", "[implant]") {
    ImplantSpec spec;
    spec.grid_cols = 8;
    spec.grid_rows = 3;
    const auto spots = generate_spots(spec, 321);
    const auto path =
        std::filesystem::temp_directory_path() / "qmcsim_spots_test.csv";
    write_spots_csv(path.string(), spots);
    const auto back = read_spots_csv(path.string(), spec);
    REQUIRE(back.size() == spots.size());
    for (std::size_t i = 0; i < spots.size(); ++i) {
        const auto& orig = spots[i];
        // csv reader groups by (col,row); find the matching spot
        const ImplantSpot& rt =
            back[static_cast<std::size_t>(orig.col) * spec.grid_rows + orig.row];
        REQUIRE(rt.emitters.size() == orig.emitters.size());
        for (std::size_t k = 0; k < orig.emitters.size(); ++k) {
            CHECK(rt.emitters[k].position_nm == orig.emitters[k].position_nm);
            CHECK(rt.emitters[k].lifetime_ns == orig.emitters[k].lifetime_ns);
            CHECK(rt.emitters[k].dephasing_mhz == orig.emitters[k].dephasing_mhz);
            CHECK(rt.emitters[k].zpl_offset_ghz == orig.emitters[k].zpl_offset_ghz);
            CHECK(rt.emitters[k].strain_coeff_ghz_per_v2 ==
                  orig.emitters[k].strain_coeff_ghz_per_v2);
            CHECK(rt.emitters[k].stable == orig.emitters[k].stable);
        }
    }
    std::filesystem::remove(path);
}

TEST_CASE("invalid specs are rejected", "[implant]") {
    ImplantSpec spec;
    spec.pitch_nm = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = ImplantSpec{};
    spec.grid_cols = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = ImplantSpec{};
    spec.mean_emitters_per_spot = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = ImplantSpec{};
    spec.stable_fraction = 1.2;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
