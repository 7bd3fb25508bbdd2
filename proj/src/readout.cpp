#include "eirc/readout.hpp"

#include <cmath>
#include <stdexcept>

namespace eirc {

void SplitSpec::validate() const {
    if (washout < 0) throw std::invalid_argument("SplitSpec: washout must be >= 0");
    if (train_len <= 0) throw std::invalid_argument("SplitSpec: train_len must be positive");
    if (test_len <= 0) throw std::invalid_argument("SplitSpec: test_len must be positive");
}

Readout train_ridge(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets,
                    double eta, bool bias) {
    if (states.rows() != targets.rows())
        throw std::invalid_argument("train_ridge: state/target row counts differ");
    if (states.rows() == 0) throw std::invalid_argument("train_ridge: empty training set");
    if (eta < 0.0) throw std::invalid_argument("train_ridge: eta must be non-negative");

    const auto n = states.cols();
    const auto m = targets.cols();
    const auto dim = bias ? n + 1 : n;

    Eigen::MatrixXd gram(dim, dim);
    Eigen::MatrixXd rhs(dim, m);
    gram.topLeftCorner(n, n).noalias() = states.transpose() * states;
    rhs.topRows(n).noalias() = states.transpose() * targets;
    if (bias) {
        const Eigen::RowVectorXd col_sums = states.colwise().sum();
        gram.topRightCorner(n, 1) = col_sums.transpose();
        gram.bottomLeftCorner(1, n) = col_sums;
        gram(n, n) = static_cast<double>(states.rows());
        rhs.bottomRows(1) = targets.colwise().sum();
    }
    gram.diagonal().array() += eta;

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("train_ridge: normal equations not positive definite");

    Readout ro;
    ro.w_out = llt.solve(rhs);
    ro.eta = eta;
    ro.has_bias = bias;
    return ro;
}

Eigen::MatrixXd apply_readout(const Eigen::MatrixXd& states, const Readout& ro) {
    const auto n = ro.has_bias ? ro.w_out.rows() - 1 : ro.w_out.rows();
    if (states.cols() != n)
        throw std::invalid_argument("apply_readout: state dimension mismatch");
    Eigen::MatrixXd out = states * ro.w_out.topRows(n);
    if (ro.has_bias) out.rowwise() += ro.w_out.bottomRows(1).row(0);
    return out;
}

Eigen::MatrixXd predict_open_loop(EIReservoir& res, const Readout& ro,
                                  std::span<const double> inputs) {
    return apply_readout(run_open_loop(res, inputs), ro);
}

ClosedLoopResult predict_closed_loop(EIReservoir& res, const Readout& ro, int horizon) {
    if (ro.outputs() != 1)
        throw std::invalid_argument("predict_closed_loop: readout must have one output");
    const auto n = ro.has_bias ? ro.w_out.rows() - 1 : ro.w_out.rows();
    if (res.n() != n)
        throw std::invalid_argument("predict_closed_loop: reservoir/readout size mismatch");

    ClosedLoopResult result;
    result.outputs.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
    for (int t = 0; t < horizon; ++t) {
        double y = res.rate.dot(ro.w_out.col(0).head(n));
        if (ro.has_bias) y += ro.w_out(n, 0);
        if (!std::isfinite(y)) {
            result.diverged = true;
            break;
        }
        result.outputs.push_back(y);
        step(res, y);
    }
    return result;
}

} // namespace eirc
