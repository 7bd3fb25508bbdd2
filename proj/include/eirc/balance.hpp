#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eirc/reservoir.hpp"

namespace eirc {

// Per-neuron target firing rates, either one shared value or i.i.d. draws
// from a Beta(a,b) distribution (symmetric around 0.5 when a = b).
struct TargetMode {
    enum Kind { Homogeneous, Heterogeneous };
    Kind kind = Homogeneous;
    double rho_t = 0.5; // Homogeneous
    double a = 9.0;     // Heterogeneous
    double b = 9.0;
};

struct TargetRates {
    std::vector<double> rho;

    int n() const { return static_cast<int>(rho.size()); }
};

TargetRates sample_targets(const TargetMode& mode, int n, std::uint64_t seed);

struct AdaptationConfig {
    double delta = 1e-3;   // learning rate
    int n_steps = 20000;
    int eval_every = 0;    // 0 = never evaluate the task metric during adaptation
    int record_every = 100;
};

struct AdaptationTracePoint {
    int step = 0;
    double beta = 0.0;
    double mean_rate = 0.0;
    bool has_metric = false;
    double metric = 0.0;
};

struct AdaptationTrace {
    std::vector<AdaptationTracePoint> points;
    bool diverged = false;
};

// One application of the inhibitory homeostasis rule: every existing
// inhibitory in-link of neuron i moves by delta*(r_i - rho_i), clamped at 0.
// No links are created and excitatory weights are untouched.
void adapt_step(EIReservoir& res, const TargetRates& targets, double delta);

// Alternates `step` on the drive series with `adapt_step` for
// cfg.n_steps steps. Records (step, global balance, mean rate) every
// record_every steps, and the task metric at eval_every when an evaluator is
// provided (weights are frozen: the evaluator works on a copy). Aborts with
// the trace flagged when weights or rates stop being finite.
AdaptationTrace adapt(EIReservoir& res, const TargetRates& targets,
                      const AdaptationConfig& cfg, std::span<const double> drive,
                      const std::function<double(const EIReservoir&)>& evaluator = {});

struct DesignOutcome {
    int scaled = 0;  // rows rescaled normally
    int zeroed = 0;  // negative factor: inhibitory row cleared
    int skipped = 0; // no inhibitory input available for a nonzero correction
};

// One-step rescaling of each neuron's inhibitory in-links by the factor that
// solves the steady-state rate equation at the target rates:
//   Omega_i = (Sig^-1(rho_i) + theta_i - W_in_i*mean_input - sum_j A_E(i,j) rho_j)
//             / (-sum_j A_I(i,j) rho_j)
// Rows whose factor comes out negative are set to zero (target unreachable by
// scaling inhibition); neurons with no inhibitory drive are skipped.
DesignOutcome design_one_step(EIReservoir& res, const TargetRates& targets,
                              double mean_input);

// Trace export with columns step,beta,mean_rate,metric_name,metric_value.
void write_adaptation_trace_csv(const std::string& path, const AdaptationTrace& trace,
                                const std::string& metric_name);

} // namespace eirc
