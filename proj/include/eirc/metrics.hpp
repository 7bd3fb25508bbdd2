#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>

namespace eirc {

// Digamma function, accurate to ~1e-12 for positive arguments.
double digamma(double x);

// Squared correlation cov(truth,pred)^2 / (var(truth)*var(pred)), in [0,1].
// A constant argument makes the value 0; `degenerate` reports that case.
double r_squared(std::span<const double> truth, std::span<const double> pred,
                 bool* degenerate = nullptr);

// Sum of the per-delay recall accuracies (area under the R^2-vs-delay curve).
double memory_capacity(std::span<const double> r2_by_delay);

double rmse(std::span<const double> truth, std::span<const double> pred);

// rmse divided by the standard deviation of `truth`. Throws on zero spread.
double nrmse(std::span<const double> truth, std::span<const double> pred);

// Valid prediction time: the first index at which the NRMSE over a trailing
// window of `window` samples (normalized by the std of `truth` over the whole
// series) exceeds `threshold`. Returns the series length if never exceeded.
std::size_t vpt(std::span<const double> truth, std::span<const double> pred,
                double threshold = 0.4, std::size_t window = 10);

// Nearest-neighbor estimate of the differential entropy of a scalar series:
//   H = psi(T) - psi(1) + log 2 + mean_t log eps_t
// with eps_t the distance from sample t to its nearest neighbor. Duplicate
// samples (eps = 0) are replaced by the smallest positive distance observed;
// `zero_replaced` reports how many. Returns -infinity when all samples are
// identical. Can be negative.
double kl_entropy(std::span<const double> samples, int* zero_replaced = nullptr);

// Mean Pearson correlation over sampled pairs of non-constant neurons
// (columns of `states`). n_pairs = 0 computes the exact all-pairs mean.
// Throws when fewer than two non-constant neurons exist.
double mean_pairwise_correlation(const Eigen::MatrixXd& states,
                                 std::size_t n_pairs = 1000,
                                 std::uint64_t seed = 0);

enum class Regime { Silent, Saturated, Synchronized, Active };

std::string regime_name(Regime r);

struct RegimeLabel {
    Regime label = Regime::Active;
    double mean_rate = 0.0;
    double mean_corr = 0.0;
};

// Classifies reservoir dynamics from a (time x neuron) rate history:
// Silent below mean rate 0.05, Saturated above 0.95, Synchronized when the
// mean pairwise correlation exceeds 0.9 at intermediate rates, else Active.
RegimeLabel classify_regime(const Eigen::MatrixXd& states,
                            std::size_t n_pairs = 1000,
                            std::uint64_t seed = 0);

} // namespace eirc
