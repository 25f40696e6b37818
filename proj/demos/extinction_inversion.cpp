// Minimal library walkthrough: invert a measured transmission dip into
// coupling figures, correct for broadening and ZPL fraction, and print a
// channel photon budget.

#include <cstdio>

#include "qmcsim/assembly.hpp"
#include "qmcsim/emitters.hpp"

int main() {
    const auto figures = qmcsim::extinction_to_coupling(0.62);
    std::printf("T = %.2f -> beta = %.3f, C = %.3f\n",
                figures.transmission_on_resonance, figures.beta_observed,
                figures.cooperativity);

    const auto corrected = qmcsim::correct_beta(figures.beta_observed, 37.0,
                                                24.0, 0.6);
    std::printf("dipole-waveguide beta >= %.3f%s\n", corrected.beta_dipole,
                corrected.clamped ? " (clamped)" : "");

    qmcsim::TaperModel taper;
    const double eta = qmcsim::coupling_efficiency(38.0, taper, 602);
    const double budget = qmcsim::channel_budget(corrected.beta_dipole, 0.6,
                                                 24.0, 37.0, eta, 0.0);
    std::printf("taper eta(38 nm) = %.3f, end-to-end ZPL budget = %.3f\n", eta,
                budget);
    return 0;
}
