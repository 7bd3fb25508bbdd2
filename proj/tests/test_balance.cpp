#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eirc/balance.hpp"
#include "eirc/rng.hpp"

using namespace eirc;

namespace {

EIReservoir manual_reservoir(int n, double theta = 0.0) {
    EIReservoir res;
    res.config.n_neurons = n;
    res.config.theta = theta;
    res.neuron_type.assign(n, NeuronType::Excitatory);
    res.exc = Eigen::MatrixXd::Zero(n, n);
    res.inh = Eigen::MatrixXd::Zero(n, n);
    res.exc_links.assign(n, {});
    res.inh_links.assign(n, {});
    res.input_weights = Eigen::VectorXd::Zero(n);
    res.threshold = Eigen::VectorXd::Constant(n, theta);
    res.leak = Eigen::VectorXd::Zero(n);
    res.steepness = 10.0;
    res.reset_state();
    return res;
}

NetworkConfig desk_config(std::uint64_t seed, double beta = 0.0) {
    NetworkConfig cfg;
    cfg.n_neurons = 200;
    cfg.beta = beta;
    cfg.input_spread = 0.016;
    cfg.seed = seed;
    return cfg;
}

std::vector<double> uniform_drive(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> u(n);
    for (auto& v : u) v = rng.uniform01();
    return u;
}

// Per-neuron mean rates over a driven window, weights frozen.
Eigen::VectorXd driven_mean_rates(EIReservoir& res, int steps, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(res.n());
    for (int t = 0; t < steps; ++t) {
        step(res, rng.uniform01());
        acc += res.rate;
    }
    return acc / steps;
}

} // namespace

TEST_CASE("target sampling") {
    TargetMode hom;
    hom.rho_t = 0.5;
    auto t = sample_targets(hom, 4, 1);
    CHECK(t.rho == std::vector<double>{0.5, 0.5, 0.5, 0.5});

    hom.rho_t = 1.5;
    CHECK_THROWS_AS(sample_targets(hom, 4, 1), std::invalid_argument);

    TargetMode het;
    het.kind = TargetMode::Heterogeneous;
    auto big = sample_targets(het, 100000, 7);
    double sum = 0.0, sum2 = 0.0;
    for (double v : big.rho) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / big.n();
    CHECK(std::abs(mean - 0.5) < 0.002);
    CHECK(sum2 / big.n() - mean * mean == doctest::Approx(1.0 / 76.0).epsilon(0.05));
}

TEST_CASE("adapt_step follows the rate error") {
    auto res = manual_reservoir(2);
    res.inh(0, 1) = 0.1;
    res.inh_links[0] = {1};
    res.rate[0] = 0.7;

    TargetRates targets;
    targets.rho = {0.5, 0.5};
    adapt_step(res, targets, 1e-3);
    CHECK(res.inh(0, 1) == doctest::Approx(0.1002).epsilon(1e-12));

    // at-target neuron: no change
    res.rate[0] = 0.5;
    adapt_step(res, targets, 1e-3);
    CHECK(res.inh(0, 1) == doctest::Approx(0.1002).epsilon(1e-12));

    // clamp at zero
    res.inh(0, 1) = 1e-5;
    res.rate[0] = 0.0;
    targets.rho = {0.5, 0.5};
    adapt_step(res, targets, 1e-3);
    CHECK(res.inh(0, 1) == 0.0);
}

TEST_CASE("adapt_step touches only existing inhibitory links") {
    auto res = manual_reservoir(3);
    res.exc(0, 1) = 0.4;
    res.exc_links[0] = {1};
    res.inh(2, 0) = 0.2;
    res.inh_links[2] = {0};
    res.rate << 0.9, 0.9, 0.9;

    const Eigen::MatrixXd exc_before = res.exc;
    TargetRates targets;
    targets.rho = {0.5, 0.5, 0.5};
    adapt_step(res, targets, 1e-3);
    CHECK(res.exc == exc_before);                 // excitatory untouched
    CHECK(res.inh(2, 0) == doctest::Approx(0.2004));
    CHECK(res.inh(0, 1) == 0.0);                  // no link created
    CHECK(res.inh(1, 0) == 0.0);
}

TEST_CASE("adaptation converges to homogeneous targets at desk scale") {
    auto res = build_reservoir(desk_config(31));
    TargetRates targets = sample_targets({}, res.n(), 5);

    AdaptationConfig cfg;
    cfg.n_steps = 10000;
    auto drive = uniform_drive(cfg.n_steps, 17);
    auto trace = adapt(res, targets, cfg, drive);
    CHECK_FALSE(trace.diverged);
    CHECK(std::abs(global_balance(res)) < 0.2);

    auto rates = driven_mean_rates(res, 2000, 23);
    int close = 0;
    for (int i = 0; i < res.n(); ++i) {
        if (std::abs(rates[i] - 0.5) < 0.05) ++close;
    }
    CHECK(close >= res.n() * 95 / 100);

    // clamp safety and sparsity preservation
    CHECK(res.inh.minCoeff() >= 0.0);
    for (int i = 0; i < res.n(); ++i) {
        for (int j = 0; j < res.n(); ++j) {
            if (res.inh(i, j) != 0.0) {
                CHECK(std::find(res.inh_links[i].begin(), res.inh_links[i].end(), j) !=
                      res.inh_links[i].end());
            }
        }
    }
}

TEST_CASE("over-excited start: balance trace decreases to zero") {
    auto res = build_reservoir(desk_config(32, 2.0));
    TargetRates targets = sample_targets({}, res.n(), 5);

    AdaptationConfig cfg;
    cfg.n_steps = 20000;
    cfg.record_every = 500;
    auto drive = uniform_drive(cfg.n_steps, 19);
    auto trace = adapt(res, targets, cfg, drive);

    REQUIRE(trace.points.size() > 2);
    for (std::size_t i = 1; i < trace.points.size(); ++i) {
        CHECK(trace.points[i].beta <= trace.points[i - 1].beta + 0.02);
    }
    CHECK(std::abs(trace.points.back().beta) < 0.3);
}

TEST_CASE("zero learning rate leaves weights untouched") {
    auto res = build_reservoir(desk_config(33));
    const Eigen::MatrixXd inh_before = res.inh;
    const Eigen::MatrixXd exc_before = res.exc;

    AdaptationConfig cfg;
    cfg.delta = 0.0;
    cfg.n_steps = 500;
    auto drive = uniform_drive(cfg.n_steps, 3);
    adapt(res, sample_targets({}, res.n(), 5), cfg, drive);
    CHECK(res.inh == inh_before);
    CHECK(res.exc == exc_before);
}

TEST_CASE("sustained high rate makes the inhibitory row sum non-decreasing") {
    auto res = manual_reservoir(2);
    res.inh(0, 1) = 0.05;
    res.inh_links[0] = {1};
    res.input_weights << 1.0, 1.0; // strong drive keeps rates near 1
    TargetRates targets;
    targets.rho = {0.2, 0.2};
    double prev = res.inh.row(0).sum();
    for (int t = 0; t < 200; ++t) {
        step(res, 1.0);
        adapt_step(res, targets, 1e-3);
        const double now = res.inh.row(0).sum();
        REQUIRE(now >= prev);
        prev = now;
    }
}

TEST_CASE("design factor zero when the numerator vanishes") {
    auto res = manual_reservoir(2);
    // neuron 0: one excitatory in-link chosen so the required correction is zero
    res.exc(0, 1) = inverse_sigmoid(0.7, 10.0) / 0.5;
    res.exc_links[0] = {1};
    res.inh(0, 1) = 0.3;
    res.inh_links[0] = {1};

    TargetRates targets;
    targets.rho = {0.7, 0.5};
    design_one_step(res, targets, 0.0);
    CHECK(res.inh(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("design equalizes row sums for the midpoint target") {
    NetworkConfig cfg = desk_config(40, -2.0);
    cfg.input_spread = 0.0; // no input weights
    auto res = build_reservoir(cfg);

    TargetRates targets = sample_targets({}, res.n(), 1);
    auto outcome = design_one_step(res, targets, 0.5);
    CHECK(outcome.zeroed == 0);
    CHECK(outcome.skipped == 0);
    // Omega_i = sum(A_E) / sum(A_I), so every local balance lands on zero
    CHECK(local_balance(res).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("designed reservoir holds the target under its mean input") {
    auto res = build_reservoir(desk_config(41));
    TargetRates targets = sample_targets({}, res.n(), 2);
    design_one_step(res, targets, 0.5);

    // drive with the constant mean input; rates should settle near the target
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(res.n());
    for (int t = 0; t < 2000; ++t) {
        step(res, 0.5);
        if (t >= 1000) acc += res.rate;
    }
    acc /= 1000.0;
    int close = 0;
    for (int i = 0; i < res.n(); ++i) {
        if (std::abs(acc[i] - 0.5) < 0.1) ++close;
    }
    CHECK(close >= res.n() * 90 / 100);
}

TEST_CASE("designed and adapted reservoirs reach similar rates") {
    const auto cfg = desk_config(42);
    auto adapted = build_reservoir(cfg);
    auto designed = adapted;

    TargetRates targets = sample_targets({}, adapted.n(), 3);
    AdaptationConfig acfg;
    acfg.n_steps = 10000;
    adapt(adapted, targets, acfg, uniform_drive(acfg.n_steps, 9));
    design_one_step(designed, targets, 0.5);

    auto rates_a = driven_mean_rates(adapted, 2000, 13);
    auto rates_d = driven_mean_rates(designed, 2000, 13);
    int close = 0;
    for (int i = 0; i < adapted.n(); ++i) {
        if (std::abs(rates_a[i] - rates_d[i]) < 0.1) ++close;
    }
    CHECK(close >= adapted.n() * 95 / 100);
}

TEST_CASE("design edge cases: unreachable targets and negative factors") {
    auto res = manual_reservoir(2);
    // neuron 0 has no inhibitory in-links but needs a correction
    res.exc(0, 1) = 2.0;
    res.exc_links[0] = {1};
    TargetRates targets;
    targets.rho = {0.5, 0.5};
    auto outcome = design_one_step(res, targets, 0.0);
    CHECK(outcome.skipped == 1);

    // neuron 0 would need negative inhibition: row cleared
    auto res2 = manual_reservoir(1, /*theta=*/-1.0);
    res2.inh(0, 0) = 0.5;
    res2.inh_links[0] = {0};
    TargetRates t2;
    t2.rho = {0.5};
    // required = logit(0.5) + theta = -1 < 0 is fine; force positive via theta
    res2.threshold[0] = 1.0;
    auto outcome2 = design_one_step(res2, t2, 0.0);
    CHECK(outcome2.zeroed == 1);
    CHECK(res2.inh(0, 0) == 0.0);

    // negative stored magnitudes are rejected up front
    auto res3 = manual_reservoir(1);
    res3.inh(0, 0) = -0.1;
    res3.inh_links[0] = {0};
    CHECK_THROWS_AS(design_one_step(res3, t2, 0.0), std::invalid_argument);
}

TEST_CASE("adaptation trace CSV has the documented columns") {
    auto res = build_reservoir(desk_config(50));
    TargetRates targets = sample_targets({}, res.n(), 4);
    AdaptationConfig cfg;
    cfg.n_steps = 300;
    cfg.record_every = 100;
    auto trace = adapt(res, targets, cfg, uniform_drive(cfg.n_steps, 2));

    const std::string path = "trace_test.csv";
    write_adaptation_trace_csv(path, trace, "memory_capacity");
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,beta,mean_rate,metric_name,metric_value");
    int lines = 0;
    for (std::string line; std::getline(in, line);) ++lines;
    CHECK(lines == 3);
    in.close();
    std::remove(path.c_str());
}
