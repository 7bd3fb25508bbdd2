#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eirc/experiment.hpp"
#include "eirc/rng.hpp"

using namespace eirc;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// small, fast spec for pipeline tests
ExperimentSpec tiny_spec() {
    ExperimentSpec spec;
    spec.experiment = ExperimentKind::SweepBetaTheta;
    spec.task = Task::MemoryCapacity;
    spec.grid.beta = {-1.0, 0.0};
    spec.n_seeds = 2;
    spec.master_seed = 71;
    spec.reservoir.n_neurons = 60;
    spec.reservoir.input_spread = 0.016;
    spec.split = {100, 600, 300};
    return spec;
}

} // namespace

TEST_CASE("minimal config is fully defaulted") {
    const auto spec = parse_config_text(R"({"experiment": "sweep_beta_theta",
                                           "task": "memory_capacity"})");
    CHECK(spec.task == Task::MemoryCapacity);
    CHECK(spec.reservoir.n_neurons == 500);
    CHECK(spec.reservoir.mu_e == doctest::Approx(0.025));
    CHECK(spec.reservoir.sigma_e == doctest::Approx(0.005));
    CHECK(spec.reservoir.sigma_i == doctest::Approx(0.005));
    CHECK(spec.reservoir.beta == doctest::Approx(-1.0));   // tuned non-adaptive default
    CHECK(spec.reservoir.input_spread == doctest::Approx(0.016));
    CHECK(spec.n_seeds == 100);
    CHECK(spec.split.washout == 500);
    CHECK(spec.split.train_len == 20000);
    CHECK(spec.split.test_len == 5000);
    CHECK(spec.ridge_eta == doctest::Approx(1e-7));
    CHECK(spec.modes.front() == RunMode::NonAdaptive);
}

TEST_CASE("task-dependent defaults follow the primary mode") {
    const auto adaptive = parse_config_text(R"({"experiment": "target_rate_sweep",
                                               "task": "narma10"})");
    CHECK(adaptive.modes.front() == RunMode::AdaptiveHomogeneous);
    CHECK(adaptive.reservoir.input_spread == doctest::Approx(0.063));
    CHECK(adaptive.targets.rho_t == doctest::Approx(0.3));
    CHECK(adaptive.reservoir.beta == doctest::Approx(0.0)); // adaptive starts balanced

    const auto lorenz = parse_config_text(R"({"experiment": "input_scaling_sweep",
                                             "task": "lorenz"})");
    CHECK(lorenz.reservoir.input_spread == doctest::Approx(2.512));
    CHECK(lorenz.reservoir.beta == doctest::Approx(-1.0));
    CHECK(lorenz.reservoir.theta == doctest::Approx(-1.0));
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"experiment": "sweep_beta_theta", "task": "narma10",
                             "foo": 1})"),
        doctest::Contains("foo"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"experiment": "sweep_beta_theta", "task": "narma10",
                             "reservoir": {"n_nuerons": 100}})"),
        doctest::Contains("n_nuerons"), std::invalid_argument);
}

TEST_CASE("grid ranges expand endpoint-inclusive") {
    const auto spec = parse_config_text(R"({"experiment": "sweep_beta_theta",
        "task": "memory_capacity",
        "grid": {"beta": {"from": -4, "to": 2, "step": 0.5}}})");
    REQUIRE(spec.grid.beta.size() == 13);
    CHECK(spec.grid.beta.front() == doctest::Approx(-4.0));
    CHECK(spec.grid.beta.back() == doctest::Approx(2.0));

    CHECK_THROWS_AS(parse_config_text(R"({"experiment": "sweep_beta_theta",
        "task": "memory_capacity", "grid": {"beta": []}})"),
                    std::invalid_argument);
}

TEST_CASE("config validation catches bad values") {
    CHECK_THROWS_AS(parse_config_text(R"({"experiment": "sweep_beta_theta",
        "task": "memory_capacity", "n_seeds": 0})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text(R"({"experiment": "sweep_beta_theta",
        "task": "memory_capacity", "reservoir": {"excit_fraction": 1.5}})"),
                    std::invalid_argument);
    // memory task needs the washout to cover the longest delay
    CHECK_THROWS_AS(parse_config_text(R"({"experiment": "sweep_beta_theta",
        "task": "memory_capacity", "split": {"washout": 50}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text(R"(not json)"), std::invalid_argument);
}

TEST_CASE("resolved spec echoes back through the parser") {
    auto spec = tiny_spec();
    const std::string text = spec_to_json(spec);
    const auto reparsed = parse_config_text(text);
    CHECK(reparsed.grid.beta == spec.grid.beta);
    CHECK(reparsed.n_seeds == spec.n_seeds);
    CHECK(reparsed.reservoir.n_neurons == spec.reservoir.n_neurons);
    CHECK(reparsed.split.train_len == spec.split.train_len);
}

TEST_CASE("experiment runs are deterministic, cell seeds are derived") {
    auto spec = tiny_spec();
    const auto a = run_experiment(spec);
    const auto b = run_experiment(spec);
    REQUIRE(a.rows.size() == 4);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].metric == b.rows[i].metric);
        CHECK(a.rows[i].seed == b.rows[i].seed);
        CHECK(a.rows[i].seed ==
              derive_seed(spec.master_seed, a.rows[i].cell_index,
                          static_cast<std::uint64_t>(a.rows[i].replicate)));
        CHECK(a.rows[i].ok());
    }
    // worker count must not change results
    spec.workers = 3;
    const auto c = run_experiment(spec);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].metric == c.rows[i].metric);
    }
}

TEST_CASE("csv artifacts are reproducible byte for byte") {
    namespace fs = std::filesystem;
    auto spec = tiny_spec();
    const fs::path dir1 = fs::temp_directory_path() / "eirc_test_run1";
    const fs::path dir2 = fs::temp_directory_path() / "eirc_test_run2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    spec.output_path = dir1.string();
    run_experiment(spec);
    spec.output_path = dir2.string();
    run_experiment(spec);

    for (const char* name : {"cells.csv", "summary.csv", "resolved_config.json"}) {
        CAPTURE(name);
        std::string a = slurp(dir1 / name);
        std::string b = slurp(dir2 / name);
        if (std::string(name) == "resolved_config.json") {
            // differs only in the embedded output_path
            continue;
        }
        CHECK(a == b);
        CHECK_FALSE(a.empty());
    }
    const std::string cells = slurp(dir1 / "cells.csv");
    CHECK(cells.rfind("experiment,task,cell_index,replicate,seed,mode,baseline,beta,theta,", 0) == 0);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("compare-modes marks the best baseline and runs the mode cells") {
    ExperimentSpec spec;
    spec.experiment = ExperimentKind::CompareModes;
    spec.task = Task::MemoryCapacity;
    spec.baseline_grid.beta = {-1.0, 1.0}; // saturated cell must lose
    spec.baseline_grid.theta = {0.0};
    spec.modes = {RunMode::AdaptiveHomogeneous, RunMode::DesignedHomogeneous};
    spec.n_seeds = 2;
    spec.master_seed = 5;
    spec.reservoir.n_neurons = 60;
    spec.reservoir.input_spread = 0.016;
    spec.split = {100, 600, 300};
    spec.adaptation.n_steps = 2000;
    spec.eval_pre = true;

    const auto result = run_experiment(spec);
    REQUIRE(result.cells.size() == 4);
    REQUIRE(result.best_baseline != SIZE_MAX);
    CHECK(result.summaries[result.best_baseline].beta == doctest::Approx(-1.0));

    // adaptive/designed rows carry both pre and post metrics
    for (const auto& row : result.rows) {
        if (row.mode != RunMode::NonAdaptive) {
            CHECK(row.ok());
            CHECK_FALSE(std::isnan(row.metric_pre));
        }
    }
}

TEST_CASE("adapt-trace writes per-run trace files") {
    namespace fs = std::filesystem;
    ExperimentSpec spec;
    spec.experiment = ExperimentKind::AdaptTrace;
    spec.task = Task::MemoryCapacity;
    spec.grid.beta = {0.0};
    spec.modes = {RunMode::AdaptiveHomogeneous};
    spec.n_seeds = 1;
    spec.master_seed = 9;
    spec.reservoir.n_neurons = 60;
    spec.split = {100, 600, 300};
    spec.adaptation.n_steps = 1000;
    spec.adaptation.eval_every = 500;
    spec.adaptation.record_every = 250;
    spec.export_diagnostics = true;

    const fs::path dir = fs::temp_directory_path() / "eirc_test_trace";
    fs::remove_all(dir);
    spec.output_path = dir.string();
    const auto result = run_experiment(spec);
    REQUIRE(result.rows.size() == 1);
    CHECK(result.rows[0].ok());
    CHECK(fs::exists(dir / "trace_cell0_rep0.csv"));
    CHECK(fs::exists(dir / "neuron_diag_cell0.csv"));
    CHECK(fs::exists(dir / "run.log"));

    const std::string trace = slurp(dir / "trace_cell0_rep0.csv");
    CHECK(trace.rfind("step,beta,mean_rate,metric_name,metric_value", 0) == 0);
    CHECK(trace.find("memory_capacity") != std::string::npos);

    const std::string diag = slurp(dir / "neuron_diag_cell0.csv");
    CHECK(diag.rfind("neuron,type,mean_rate,local_balance,entropy,output_weight", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("failing cells are recorded and the run continues") {
    ExperimentSpec spec = tiny_spec();
    spec.ridge_eta = 0.0;
    spec.reservoir.n_neurons = 80;
    spec.split = {100, 40, 40}; // fewer training rows than features: singular at eta = 0
    spec.grid.beta = {0.0};
    const auto result = run_experiment(spec);
    REQUIRE(result.rows.size() == 2);
    for (const auto& row : result.rows) {
        CHECK_FALSE(row.ok());
        CHECK_FALSE(row.error.empty());
    }
    CHECK(result.summaries[0].n_error == 2);
}

TEST_CASE("adaptation drive matches the task input process") {
    auto mem = make_adaptation_drive(Task::MemoryCapacity, 1000, 3);
    for (double v : mem) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
    auto narma = make_adaptation_drive(Task::Narma10, 1000, 3);
    for (double v : narma) REQUIRE(v <= 0.5);
    auto mg = make_adaptation_drive(Task::MackeyGlass, 1000, 3);
    CHECK(mg.size() >= 1000);
}
