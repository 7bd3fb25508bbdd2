#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "eirc/reservoir.hpp"

namespace eirc {

// Linear readout trained by ridge regression. When `has_bias` is set, the
// last row of `w_out` multiplies a constant-1 feature.
struct Readout {
    Eigen::MatrixXd w_out; // (N [+1]) x M
    double eta = 1e-7;
    bool has_bias = true;

    int outputs() const { return static_cast<int>(w_out.cols()); }
};

// Washout/train/test partition of a driven run.
struct SplitSpec {
    int washout = 500;
    int train_len = 20000;
    int test_len = 5000;

    int total() const { return washout + train_len + test_len; }
    void validate() const;
};

// Solves  argmin ||[S 1] W - Y||^2 + eta ||W||^2  via the normal equations
// with an SPD factorization; the bias row is regularized like every other.
// Throws std::runtime_error when the system is not positive definite
// (possible at eta = 0).
Readout train_ridge(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets,
                    double eta, bool bias = true);

// Applies the readout row-wise to a (time x neuron) state history.
Eigen::MatrixXd apply_readout(const Eigen::MatrixXd& states, const Readout& ro);

// Drives the reservoir with `inputs` and returns the readout outputs per step.
Eigen::MatrixXd predict_open_loop(EIReservoir& res, const Readout& ro,
                                  std::span<const double> inputs);

struct ClosedLoopResult {
    std::vector<double> outputs;
    bool diverged = false;
};

// Autonomous prediction: each output is fed back as the next input. Requires
// a single-output readout and a reservoir already synchronized by driving it
// with the true signal. Truncates and flags on non-finite output.
ClosedLoopResult predict_closed_loop(EIReservoir& res, const Readout& ro, int horizon);

} // namespace eirc
