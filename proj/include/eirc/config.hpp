#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eirc {

// How the global balance target is realized when building a network.
//   LinkStrength:  inhibitory neuron fraction fixed, mean inhibitory link
//                  strength chosen to hit `beta`.
//   InhibFraction: E/I link-strength ratio fixed, excitatory fraction varies;
//                  the resulting balance is computed, not prescribed.
enum class BalanceMode { LinkStrength, InhibFraction };

// Whether each neuron's outgoing links all share its sign, or the signed
// weights are randomly reassigned across the link positions after building.
enum class DalePolicy { Respect, Shuffled };

struct NetworkConfig {
    int n_neurons = 500;
    double excit_fraction = 0.8;     // f_E
    double mean_degree = 50.0;       // k
    double mu_e = 1.0 / 40.0;        // mean excitatory link strength, 1/(k*f_E)
    double sigma_e = 0.2 / 40.0;     // 0.2 * mu_e
    double beta = 0.0;               // global balance target (LinkStrength mode)
    double sigma_i = 0.2 / 40.0;     // defaults to sigma_e
    double alpha = 1.0;              // overall scaling of the connectivity
    double theta = 0.0;              // threshold, broadcast to every neuron
    double steepness = 10.0;         // sigmoid steepness c
    double leakage = 0.0;            // lambda, broadcast to every neuron
    double input_fraction = 0.3;     // f_in
    double input_spread = 0.016;     // sigma_in
    double strength_ratio = 4.0;     // |mu_I|/mu_E, used in InhibFraction mode only
    BalanceMode balance_mode = BalanceMode::LinkStrength;
    DalePolicy dale = DalePolicy::Respect;
    std::uint64_t seed = 1;

    // Mean excitatory strength that makes the expected incoming excitatory
    // weight sum equal to 1.
    static double derived_mu_e(double mean_degree, double excit_fraction) {
        return 1.0 / (mean_degree * excit_fraction);
    }

    void validate() const {
        if (n_neurons <= 0) throw std::invalid_argument("n_neurons must be positive");
        if (!(excit_fraction > 0.0 && excit_fraction < 1.0))
            throw std::invalid_argument("excit_fraction must lie in (0,1)");
        if (!(mean_degree > 0.0)) throw std::invalid_argument("mean_degree must be positive");
        if (mean_degree > n_neurons)
            throw std::invalid_argument("mean_degree cannot exceed n_neurons");
        if (!(mu_e > 0.0)) throw std::invalid_argument("mu_e must be positive");
        if (sigma_e < 0.0) throw std::invalid_argument("sigma_e must be non-negative");
        if (sigma_i < 0.0) throw std::invalid_argument("sigma_i must be non-negative");
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
        if (!(steepness > 0.0)) throw std::invalid_argument("steepness must be positive");
        if (leakage < 0.0 || leakage > 1.0)
            throw std::invalid_argument("leakage must lie in [0,1]");
        if (!(input_fraction > 0.0 && input_fraction <= 1.0))
            throw std::invalid_argument("input_fraction must lie in (0,1]");
        if (input_spread < 0.0) throw std::invalid_argument("input_spread must be non-negative");
        if (!(strength_ratio > 0.0)) throw std::invalid_argument("strength_ratio must be positive");
    }
};

} // namespace eirc
