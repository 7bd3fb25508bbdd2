#include "eirc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eirc/rng.hpp"

namespace eirc {

namespace {

void require_same_nonempty(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("series lengths differ");
    if (a.empty())
        throw std::invalid_argument("series are empty");
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population variance.
double var_of(std::span<const double> v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size());
}

} // namespace

double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // asymptotic series with Bernoulli coefficients through x^-10
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 -
                              inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

double r_squared(std::span<const double> truth, std::span<const double> pred,
                 bool* degenerate) {
    require_same_nonempty(truth, pred);
    if (truth.size() < 2) throw std::invalid_argument("r_squared: need at least 2 samples");
    const double mt = mean_of(truth);
    const double mp = mean_of(pred);
    double cov = 0.0, vt = 0.0, vp = 0.0;
    double st = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double a = truth[i] - mt;
        const double b = pred[i] - mp;
        cov += a * b;
        vt += a * a;
        vp += b * b;
        st += truth[i] * truth[i];
        sp += pred[i] * pred[i];
    }
    if (degenerate) *degenerate = false;
    // variance at the rounding floor of the series scale counts as constant
    if (vt <= 1e-24 * st || vp <= 1e-24 * sp) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    return std::clamp(cov * cov / (vt * vp), 0.0, 1.0);
}

double memory_capacity(std::span<const double> r2_by_delay) {
    double s = 0.0;
    for (double v : r2_by_delay) s += v;
    return s;
}

double rmse(std::span<const double> truth, std::span<const double> pred) {
    require_same_nonempty(truth, pred);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - pred[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double nrmse(std::span<const double> truth, std::span<const double> pred) {
    const double sd = std::sqrt(var_of(truth, mean_of(truth)));
    if (sd <= 0.0) throw std::invalid_argument("nrmse: truth has zero spread");
    return rmse(truth, pred) / sd;
}

std::size_t vpt(std::span<const double> truth, std::span<const double> pred,
                double threshold, std::size_t window) {
    require_same_nonempty(truth, pred);
    if (window == 0) throw std::invalid_argument("vpt: window must be positive");
    const double sd = std::sqrt(var_of(truth, mean_of(truth)));
    if (sd <= 0.0) throw std::invalid_argument("vpt: truth has zero spread");

    double sq_sum = 0.0;
    std::vector<double> sq(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const double d = truth[t] - pred[t];
        sq[t] = d * d;
        sq_sum += sq[t];
        if (t >= window) sq_sum -= sq[t - window];
        const std::size_t w = std::min(t + 1, window);
        const double err = std::sqrt(sq_sum / static_cast<double>(w)) / sd;
        if (err > threshold) return t;
    }
    return truth.size();
}

double kl_entropy(std::span<const double> samples, int* zero_replaced) {
    const std::size_t t_len = samples.size();
    if (t_len < 2) throw std::invalid_argument("kl_entropy: need at least 2 samples");
    for (double v : samples) {
        if (!std::isfinite(v)) throw std::invalid_argument("kl_entropy: non-finite sample");
    }

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> nn(t_len);
    double min_positive = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < t_len; ++m) {
        double d = std::numeric_limits<double>::infinity();
        if (m > 0) d = std::min(d, sorted[m] - sorted[m - 1]);
        if (m + 1 < t_len) d = std::min(d, sorted[m + 1] - sorted[m]);
        nn[m] = d;
        if (d > 0.0) min_positive = std::min(min_positive, d);
    }

    int zeros = 0;
    if (!std::isfinite(min_positive)) {
        // every sample identical
        if (zero_replaced) *zero_replaced = static_cast<int>(t_len);
        return -std::numeric_limits<double>::infinity();
    }
    double log_sum = 0.0;
    for (double d : nn) {
        if (d <= 0.0) {
            ++zeros;
            d = min_positive;
        }
        log_sum += std::log(d);
    }
    if (zero_replaced) *zero_replaced = zeros;

    const double t = static_cast<double>(t_len);
    return digamma(t) - digamma(1.0) + std::log(2.0) + log_sum / t;
}

double mean_pairwise_correlation(const Eigen::MatrixXd& states,
                                 std::size_t n_pairs, std::uint64_t seed) {
    const auto t_len = states.rows();
    const auto n = states.cols();
    if (t_len < 2) throw std::invalid_argument("mean_pairwise_correlation: need T >= 2");

    // center columns, track which neurons actually vary
    std::vector<int> active;
    Eigen::MatrixXd centered(t_len, n);
    Eigen::VectorXd norm(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double mu = states.col(j).mean();
        centered.col(j) = states.col(j).array() - mu;
        norm[j] = centered.col(j).norm();
        if (norm[j] > 1e-12) active.push_back(static_cast<int>(j));
    }
    if (active.size() < 2)
        throw std::invalid_argument("mean_pairwise_correlation: fewer than 2 non-constant neurons");

    const std::size_t n_active = active.size();
    double sum = 0.0;
    std::size_t count = 0;
    if (n_pairs == 0) {
        for (std::size_t a = 0; a < n_active; ++a) {
            for (std::size_t b = a + 1; b < n_active; ++b) {
                const int i = active[a], j = active[b];
                sum += centered.col(i).dot(centered.col(j)) / (norm[i] * norm[j]);
                ++count;
            }
        }
    } else {
        Rng rng(seed);
        for (std::size_t m = 0; m < n_pairs; ++m) {
            const int i = active[rng.index(n_active)];
            int j = i;
            while (j == i) j = active[rng.index(n_active)];
            sum += centered.col(i).dot(centered.col(j)) / (norm[i] * norm[j]);
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Silent: return "silent";
        case Regime::Saturated: return "saturated";
        case Regime::Synchronized: return "synchronized";
        case Regime::Active: return "active";
    }
    return "unknown";
}

RegimeLabel classify_regime(const Eigen::MatrixXd& states,
                            std::size_t n_pairs, std::uint64_t seed) {
    RegimeLabel out;
    out.mean_rate = states.mean();
    if (out.mean_rate < 0.05) {
        out.label = Regime::Silent;
        return out;
    }
    if (out.mean_rate > 0.95) {
        out.label = Regime::Saturated;
        return out;
    }
    try {
        out.mean_corr = mean_pairwise_correlation(states, n_pairs, seed);
    } catch (const std::invalid_argument&) {
        // frozen network: no varying neurons to correlate
        out.mean_corr = 0.0;
    }
    out.label = out.mean_corr > 0.9 ? Regime::Synchronized : Regime::Active;
    return out;
}

} // namespace eirc
