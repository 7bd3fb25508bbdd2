#include "eirc/balance.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "eirc/rng.hpp"

namespace eirc {

TargetRates sample_targets(const TargetMode& mode, int n, std::uint64_t seed) {
    if (n <= 0) throw std::invalid_argument("sample_targets: n must be positive");
    TargetRates out;
    out.rho.resize(n);
    if (mode.kind == TargetMode::Homogeneous) {
        if (!(mode.rho_t > 0.0 && mode.rho_t < 1.0))
            throw std::invalid_argument("sample_targets: rho_t must lie in (0,1)");
        std::fill(out.rho.begin(), out.rho.end(), mode.rho_t);
    } else {
        if (!(mode.a > 0.0 && mode.b > 0.0))
            throw std::invalid_argument("sample_targets: Beta parameters must be positive");
        Rng rng(seed);
        for (int i = 0; i < n; ++i) {
            double v = rng.beta(mode.a, mode.b);
            // Beta draws can round onto the boundary; targets must stay interior
            while (!(v > 0.0 && v < 1.0)) v = rng.beta(mode.a, mode.b);
            out.rho[i] = v;
        }
    }
    return out;
}

void adapt_step(EIReservoir& res, const TargetRates& targets, double delta) {
    if (targets.n() != res.n())
        throw std::invalid_argument("adapt_step: target size mismatch");
    for (int i = 0; i < res.n(); ++i) {
        const auto& links = res.inh_links[i];
        if (links.empty()) continue;
        const double change = delta * (res.rate[i] - targets.rho[i]);
        for (std::int32_t j : links) {
            const double w = res.inh(i, j) + change;
            res.inh(i, j) = w > 0.0 ? w : 0.0;
        }
    }
}

namespace {

bool weights_finite(const EIReservoir& res) {
    return res.inh.allFinite() && res.rate.allFinite() && res.potential.allFinite();
}

} // namespace

AdaptationTrace adapt(EIReservoir& res, const TargetRates& targets,
                      const AdaptationConfig& cfg, std::span<const double> drive,
                      const std::function<double(const EIReservoir&)>& evaluator) {
    if (cfg.delta < 0.0) throw std::invalid_argument("adapt: delta must be non-negative");
    if (cfg.n_steps < 0) throw std::invalid_argument("adapt: n_steps must be non-negative");
    if (static_cast<int>(drive.size()) < cfg.n_steps)
        throw std::invalid_argument("adapt: drive series shorter than n_steps");
    const int record_every = cfg.record_every > 0 ? cfg.record_every : 100;

    AdaptationTrace trace;
    double rate_acc = 0.0;
    int rate_count = 0;
    for (int t = 0; t < cfg.n_steps; ++t) {
        step(res, drive[static_cast<std::size_t>(t)]);
        adapt_step(res, targets, cfg.delta);
        rate_acc += res.rate.mean();
        ++rate_count;

        const int done = t + 1;
        if (done % record_every == 0 || done == cfg.n_steps) {
            if (!weights_finite(res)) {
                trace.diverged = true;
                return trace;
            }
            AdaptationTracePoint point;
            point.step = done;
            point.beta = global_balance(res);
            point.mean_rate = rate_acc / rate_count;
            rate_acc = 0.0;
            rate_count = 0;
            if (evaluator && cfg.eval_every > 0 &&
                (done % cfg.eval_every == 0 || done == cfg.n_steps)) {
                point.metric = evaluator(res);
                point.has_metric = true;
            }
            trace.points.push_back(point);
        }
    }
    return trace;
}

DesignOutcome design_one_step(EIReservoir& res, const TargetRates& targets,
                              double mean_input) {
    if (targets.n() != res.n())
        throw std::invalid_argument("design_one_step: target size mismatch");
    if (!std::isfinite(mean_input))
        throw std::invalid_argument("design_one_step: mean_input must be finite");
    for (int i = 0; i < res.n(); ++i) {
        for (std::int32_t j : res.inh_links[i]) {
            if (res.inh(i, j) < 0.0)
                throw std::invalid_argument("design_one_step: inhibitory magnitudes must be non-negative");
        }
    }

    const Eigen::Map<const Eigen::VectorXd> rho(targets.rho.data(), res.n());
    const Eigen::VectorXd exc_drive = res.exc * rho;
    const Eigen::VectorXd inh_drive = res.inh * rho;

    DesignOutcome outcome;
    for (int i = 0; i < res.n(); ++i) {
        const double required = inverse_sigmoid(targets.rho[i], res.steepness) +
                                res.threshold[i] - res.input_weights[i] * mean_input -
                                exc_drive[i];
        if (inh_drive[i] <= 0.0) {
            if (required == 0.0) {
                ++outcome.scaled; // factor 0 on a zero row changes nothing
            } else {
                ++outcome.skipped;
            }
            continue;
        }
        const double omega = -required / inh_drive[i];
        if (omega < 0.0) {
            res.inh.row(i).setZero();
            ++outcome.zeroed;
        } else {
            res.inh.row(i) *= omega;
            ++outcome.scaled;
        }
    }
    return outcome;
}

void write_adaptation_trace_csv(const std::string& path, const AdaptationTrace& trace,
                                const std::string& metric_name) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_adaptation_trace_csv: cannot open " + path);
    out << "step,beta,mean_rate,metric_name,metric_value\n";
    char buf[128];
    for (const auto& p : trace.points) {
        if (p.has_metric) {
            std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%s,%.10g\n", p.step, p.beta,
                          p.mean_rate, metric_name.c_str(), p.metric);
        } else {
            std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,,\n", p.step, p.beta, p.mean_rate);
        }
        out << buf;
    }
    if (trace.diverged) out << "# diverged\n";
}

} // namespace eirc
