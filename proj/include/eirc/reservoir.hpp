#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "eirc/config.hpp"

namespace eirc {

enum class NeuronType : std::uint8_t { Excitatory, Inhibitory };

// Sigmoid activation 1/(1+exp(-c*x)). The result is kept strictly inside
// (0,1): values that would round to the closed endpoints at double precision
// are nudged to the nearest representable interior value.
double sigmoid(double x, double steepness);

// Inverse of `sigmoid`. Throws std::domain_error for p outside (0,1).
double inverse_sigmoid(double p, double steepness);

// Magnitude assigned to inhibitory links so that the expected per-neuron
// balance equals `beta`:  (f_E*mu_E - beta/k) / (1 - f_E).
// A negative result means initially-inhibitory neurons act excitatory.
double mu_inhibitory(double excit_fraction, double mu_e, double beta, double mean_degree);

// An excitatory-inhibitory recurrent network together with its dynamical
// state. `exc` and `inh` hold link magnitudes; the effective signed weight
// of an inhibitory link is -inh(i,j). Entry (i,j) is the link from neuron j
// to neuron i. `exc_links`/`inh_links` record which entries are structural
// links (a link adapted down to weight 0 is still a link and may regrow).
struct EIReservoir {
    NetworkConfig config;
    std::vector<NeuronType> neuron_type;
    Eigen::MatrixXd exc;
    Eigen::MatrixXd inh;
    std::vector<std::vector<std::int32_t>> exc_links;
    std::vector<std::vector<std::int32_t>> inh_links;
    Eigen::VectorXd input_weights;
    Eigen::VectorXd threshold;
    Eigen::VectorXd leak;
    double steepness = 10.0;
    Eigen::VectorXd potential; // V
    Eigen::VectorXd rate;      // r, strictly inside (0,1)

    int n() const { return static_cast<int>(neuron_type.size()); }

    // Zero-input start: V = 0, r = Sig(-theta).
    void reset_state();
};

// Builds a reservoir from the config. The same config (seed included)
// produces a bit-identical network.
EIReservoir build_reservoir(const NetworkConfig& config);

// One synchronous update:
//   V <- lambda.*V + (A_E - A_I)*r + W_in*u,   r <- Sig(V - theta)
// where r on the right-hand side is the previous step's rate vector.
// Throws std::invalid_argument for non-finite input.
void step(EIReservoir& res, double input);

// Applies `step` once per input and returns the rate history, one row per
// step. The reservoir is left in the state after the last step.
Eigen::MatrixXd run_open_loop(EIReservoir& res, std::span<const double> inputs);

// Per-neuron balance beta_i = sum_j (A_E(i,j) - A_I(i,j)).
Eigen::VectorXd local_balance(const EIReservoir& res);

// Mean of local_balance over neurons.
double global_balance(const EIReservoir& res);

// Randomly reassigns each neuron's incoming signed weights across its
// existing link positions, breaking the sign/type correspondence while
// preserving the adjacency structure, the weight multiset, and every local
// balance.
EIReservoir shuffle_dale(const EIReservoir& res, std::uint64_t seed);

} // namespace eirc
