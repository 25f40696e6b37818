// Samples a small inhomogeneous emitter population and plans strain
// tuning: the largest mutually resonant set and a maximum pairing.

#include <cstdio>
#include <vector>

#include "qmcsim/implant.hpp"
#include "qmcsim/tuning.hpp"

int main() {
    const auto species = qmcsim::gev_params();
    qmcsim::ActuatorConfig actuator;

    std::vector<qmcsim::Emitter> emitters;
    qmcsim::Rng rng(qmcsim::derive_seed(7, "demo"));
    for (int i = 0; i < 8; ++i) {
        emitters.push_back(qmcsim::sample_emitter(species, rng));
    }

    const auto plan = qmcsim::max_mutually_resonant_set(emitters, actuator);
    std::printf("mutually resonant set of %zu at %.2f GHz:\n", plan.size(),
                plan.target_freq_ghz);
    for (const auto& m : plan.members) {
        std::printf("  emitter %zu: f0 = %+8.2f GHz, V = %5.2f V\n",
                    m.emitter_index, m.f0_ghz, m.voltage);
    }

    const auto pairs = qmcsim::max_resonant_pairs(emitters, actuator);
    std::printf("%zu disjoint resonant pairs\n", pairs.size());
    for (const auto& [a, b] : pairs) {
        const auto cross =
            qmcsim::crossing_voltage(emitters[a], emitters[b], actuator);
        std::printf("  (%zu, %zu) crossing: %s at %.2f V\n", a, b,
                    qmcsim::to_string(cross.status).c_str(), cross.voltage);
    }
    return 0;
}
