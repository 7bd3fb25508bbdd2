#include "eirc/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "eirc/rng.hpp"

namespace eirc {

double sigmoid(double x, double steepness) {
    const double a = steepness * x;
    double p;
    if (a >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-a));
    } else {
        const double e = std::exp(a);
        p = e / (1.0 + e);
    }
    // keep the open range even where exp() saturates
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(p, lo, hi);
}

double inverse_sigmoid(double p, double steepness) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("inverse_sigmoid: p must lie strictly inside (0,1)");
    return std::log(p / (1.0 - p)) / steepness;
}

double mu_inhibitory(double excit_fraction, double mu_e, double beta, double mean_degree) {
    if (excit_fraction >= 1.0)
        throw std::invalid_argument("mu_inhibitory: excit_fraction must be < 1");
    if (!(excit_fraction > 0.0))
        throw std::invalid_argument("mu_inhibitory: excit_fraction must be > 0");
    if (!(mean_degree > 0.0))
        throw std::invalid_argument("mu_inhibitory: mean_degree must be > 0");
    return (excit_fraction * mu_e - beta / mean_degree) / (1.0 - excit_fraction);
}

void EIReservoir::reset_state() {
    potential = Eigen::VectorXd::Zero(n());
    rate.resize(n());
    for (int i = 0; i < n(); ++i) rate[i] = sigmoid(-threshold[i], steepness);
}

EIReservoir build_reservoir(const NetworkConfig& config) {
    config.validate();

    const int n = config.n_neurons;
    const int n_exc = static_cast<int>(std::lround(n * config.excit_fraction));
    if (n_exc <= 0 || n_exc >= n)
        throw std::invalid_argument("build_reservoir: excit_fraction leaves an empty population");

    double mu_i;
    if (config.balance_mode == BalanceMode::LinkStrength) {
        mu_i = mu_inhibitory(config.excit_fraction, config.mu_e, config.beta,
                             config.mean_degree);
    } else {
        mu_i = config.strength_ratio * config.mu_e;
    }

    EIReservoir res;
    res.config = config;
    res.neuron_type.assign(n, NeuronType::Inhibitory);
    std::fill(res.neuron_type.begin(), res.neuron_type.begin() + n_exc,
              NeuronType::Excitatory);
    res.exc = Eigen::MatrixXd::Zero(n, n);
    res.inh = Eigen::MatrixXd::Zero(n, n);
    res.exc_links.assign(n, {});
    res.inh_links.assign(n, {});

    Rng rng(config.seed);
    const double p_link = config.mean_degree / n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (rng.uniform01() >= p_link) continue;
            if (res.neuron_type[j] == NeuronType::Excitatory) {
                double w;
                do {
                    w = rng.normal(config.mu_e, config.sigma_e);
                } while (w <= 0.0);
                res.exc(i, j) = config.alpha * w;
                res.exc_links[i].push_back(j);
            } else {
                double w = rng.normal(mu_i, config.sigma_i);
                if (mu_i > 0.0) {
                    while (w <= 0.0) w = rng.normal(mu_i, config.sigma_i);
                }
                res.inh(i, j) = config.alpha * w;
                res.inh_links[i].push_back(j);
            }
        }
    }

    // input layer: a random fraction f_in of all neurons receives the input
    const int n_in = std::max(1, static_cast<int>(std::lround(n * config.input_fraction)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    res.input_weights = Eigen::VectorXd::Zero(n);
    for (int m = 0; m < n_in; ++m) {
        const std::size_t pick = m + rng.index(n - m);
        std::swap(order[m], order[pick]);
        res.input_weights[order[m]] =
            rng.uniform(-config.input_spread / 2.0, config.input_spread / 2.0);
    }

    res.threshold = Eigen::VectorXd::Constant(n, config.theta);
    res.leak = Eigen::VectorXd::Constant(n, config.leakage);
    res.steepness = config.steepness;
    res.reset_state();

    if (config.dale == DalePolicy::Shuffled) {
        return shuffle_dale(res, substream(config.seed, 0xDA1EULL));
    }
    return res;
}

void step(EIReservoir& res, double input) {
    if (!std::isfinite(input))
        throw std::invalid_argument("step: input must be finite");
    if (res.config.leakage != 0.0) {
        res.potential.array() *= res.leak.array();
    } else {
        res.potential.setZero();
    }
    res.potential.noalias() += res.exc * res.rate;
    res.potential.noalias() -= res.inh * res.rate;
    res.potential.noalias() += res.input_weights * input;
    for (int i = 0; i < res.n(); ++i) {
        res.rate[i] = sigmoid(res.potential[i] - res.threshold[i], res.steepness);
    }
}

Eigen::MatrixXd run_open_loop(EIReservoir& res, std::span<const double> inputs) {
    const auto t_len = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXd states(t_len, res.n());
    for (Eigen::Index t = 0; t < t_len; ++t) {
        step(res, inputs[static_cast<std::size_t>(t)]);
        states.row(t) = res.rate.transpose();
    }
    return states;
}

Eigen::VectorXd local_balance(const EIReservoir& res) {
    return res.exc.rowwise().sum() - res.inh.rowwise().sum();
}

double global_balance(const EIReservoir& res) {
    return (res.exc.sum() - res.inh.sum()) / res.n();
}

// The reassignment permutes each neuron's incoming weights across that
// neuron's link positions. This breaks the sign/type column discipline while
// keeping every per-neuron weight multiset (and so every local balance)
// exactly as built; a global permutation would widen the local-balance
// distribution and measurably change the dynamics.
EIReservoir shuffle_dale(const EIReservoir& res, std::uint64_t seed) {
    const int n = res.n();
    Rng rng(seed);

    EIReservoir out = res;
    out.config.dale = DalePolicy::Shuffled;
    out.exc.setZero();
    out.inh.setZero();
    out.exc_links.assign(n, {});
    out.inh_links.assign(n, {});
    for (int i = 0; i < n; ++i) {
        std::vector<std::int32_t> positions;
        std::vector<double> weights; // signed: excitatory > 0, inhibitory = -magnitude
        positions.reserve(res.exc_links[i].size() + res.inh_links[i].size());
        for (std::int32_t j : res.exc_links[i]) {
            positions.push_back(j);
            weights.push_back(res.exc(i, j));
        }
        for (std::int32_t j : res.inh_links[i]) {
            positions.push_back(j);
            weights.push_back(-res.inh(i, j));
        }
        rng.shuffle(weights);
        for (std::size_t m = 0; m < positions.size(); ++m) {
            const std::int32_t j = positions[m];
            const double w = weights[m];
            if (w > 0.0) {
                out.exc(i, j) = w;
                out.exc_links[i].push_back(j);
            } else {
                out.inh(i, j) = -w;
                out.inh_links[i].push_back(j);
            }
        }
        std::sort(out.exc_links[i].begin(), out.exc_links[i].end());
        std::sort(out.inh_links[i].begin(), out.inh_links[i].end());
    }
    return out;
}

} // namespace eirc
