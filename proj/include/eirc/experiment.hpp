#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "eirc/balance.hpp"
#include "eirc/metrics.hpp"
#include "eirc/readout.hpp"
#include "eirc/reservoir.hpp"
#include "eirc/tasks.hpp"

namespace eirc {

enum class ExperimentKind {
    SweepBetaTheta,    // grid over (beta, theta), fixed mode
    AdaptTrace,        // adaptation from several starting balances, with traces
    TargetRateSweep,   // grid over homogeneous target rates
    CompareModes,      // non-adaptive grid search vs adaptive/designed modes
    InputScalingSweep, // grid over input link spread
};

enum class RunMode {
    NonAdaptive,
    AdaptiveHomogeneous,
    AdaptiveHeterogeneous,
    DesignedHomogeneous,
    DesignedHeterogeneous,
};

std::string experiment_name(ExperimentKind k);
ExperimentKind experiment_from_name(const std::string& name);
std::string mode_name(RunMode m);
RunMode mode_from_name(const std::string& name);

// True when larger metric values are better for the task (memory capacity,
// valid prediction time); false for error metrics (NARMA RMSE).
bool metric_higher_is_better(Task t);
std::string metric_name_for(Task t);

struct GridSpec {
    std::vector<double> beta;
    std::vector<double> theta;
    std::vector<double> rho_t;
    std::vector<double> sigma_in;
};

struct ExperimentSpec {
    ExperimentKind experiment = ExperimentKind::SweepBetaTheta;
    Task task = Task::MemoryCapacity;
    GridSpec grid;
    GridSpec baseline_grid;       // CompareModes: non-adaptive search grid
    int n_seeds = 100;
    std::uint64_t master_seed = 1;
    std::vector<RunMode> modes = {RunMode::NonAdaptive};
    NetworkConfig reservoir;
    AdaptationConfig adaptation;
    SplitSpec split;
    TargetMode targets;
    double ridge_eta = 1e-7;
    bool eval_pre = false;           // adaptive/designed: evaluate before tuning too
    bool export_diagnostics = false; // per-neuron CSV for replicate 0 of each cell
    bool write_traces = true;        // AdaptTrace: emit per-run trace CSVs
    int workers = 0;                 // 0 = hardware concurrency
    std::string output_path;         // empty = in-memory result only

    void validate() const;
};

constexpr double kUnsetGridValue = std::numeric_limits<double>::quiet_NaN();

// One grid cell; NaN coordinates fall back to the base reservoir/target config.
struct CellSpec {
    std::size_t index = 0;
    RunMode mode = RunMode::NonAdaptive;
    double beta = kUnsetGridValue;
    double theta = kUnsetGridValue;
    double rho_t = kUnsetGridValue;
    double sigma_in = kUnsetGridValue;
    bool is_baseline = false;
};

struct CellRow {
    std::size_t cell_index = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    RunMode mode = RunMode::NonAdaptive;
    bool is_baseline = false;
    double beta = kUnsetGridValue;
    double theta = kUnsetGridValue;
    double rho_t = kUnsetGridValue;
    double sigma_in = kUnsetGridValue;
    std::string metric_name;
    double metric = kUnsetGridValue;
    double metric_pre = kUnsetGridValue;
    double mean_rate = kUnsetGridValue;
    double mean_entropy = kUnsetGridValue;
    double mean_corr = kUnsetGridValue;
    Regime regime = Regime::Active;
    double beta_initial = kUnsetGridValue;
    double beta_final = kUnsetGridValue;
    double extreme_rate_fraction = kUnsetGridValue;
    std::string error; // empty = ok

    bool ok() const { return error.empty(); }
};

struct CellSummary {
    std::size_t cell_index = 0;
    RunMode mode = RunMode::NonAdaptive;
    bool is_baseline = false;
    double beta = kUnsetGridValue;
    double theta = kUnsetGridValue;
    double rho_t = kUnsetGridValue;
    double sigma_in = kUnsetGridValue;
    int n_ok = 0;
    int n_error = 0;
    std::string metric_name;
    double metric_mean = kUnsetGridValue;
    double metric_se = kUnsetGridValue;
    double metric_pre_mean = kUnsetGridValue;
    double mean_rate = kUnsetGridValue;
    double mean_entropy = kUnsetGridValue;
    double mean_corr = kUnsetGridValue;
    double beta_final = kUnsetGridValue;
    double extreme_rate_fraction = kUnsetGridValue;
    int n_silent = 0;
    int n_saturated = 0;
    int n_synchronized = 0;
    int n_active = 0;
};

struct ExperimentResult {
    std::vector<CellSpec> cells;
    std::vector<CellRow> rows;
    std::vector<CellSummary> summaries;
    // CompareModes: index into `summaries` of the best non-adaptive cell.
    std::size_t best_baseline = SIZE_MAX;
};

// Reads a JSON experiment config. Unknown keys are rejected by name;
// omitted parameters take the documented task-dependent defaults.
ExperimentSpec parse_config(const std::string& path);
ExperimentSpec parse_config_text(const std::string& json_text);

// Resolved spec as JSON, suitable for echoing into the output directory.
std::string spec_to_json(const ExperimentSpec& spec);

// Runs every cell x replicate slot, in deterministic order regardless of the
// worker count, and writes CSV artifacts when output_path is set. Failures in
// individual slots are recorded in their rows; the run continues.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// --- single-run machinery (also used by the acceptance suite) ---

TaskData make_task_data(Task t, int len, std::uint64_t seed);

// Input series matching the task's input process, used to drive adaptation.
std::vector<double> make_adaptation_drive(Task t, int n_steps, std::uint64_t seed);

struct EvalOutcome {
    std::string metric_name;
    double metric = 0.0;
    double mean_rate = 0.0;
    double mean_entropy = 0.0;
    double mean_corr = 0.0;
    RegimeLabel regime;
    double extreme_rate_fraction = 0.0;
    bool closed_loop_diverged = false;
    std::vector<double> r2_by_delay; // memory task only
    // populated when keep_artifacts is set
    Eigen::MatrixXd diag_states;
    Readout readout;
};

// Washes out, trains the readout on the train window, and evaluates the task
// metric on the test window (open loop for memory/NARMA, closed loop for the
// chaotic tasks). Dynamics diagnostics come from the driven window: the test
// block for open-loop tasks, the train tail for closed-loop ones.
EvalOutcome evaluate_task(EIReservoir& res, const TaskData& data, const SplitSpec& split,
                          std::uint64_t pair_seed, double ridge_eta = 1e-7,
                          bool keep_artifacts = false);

// Per-neuron export: id, type, mean rate, local balance, entropy, readout
// weight magnitude.
void write_neuron_diagnostics(const std::string& path, const EIReservoir& res,
                              const Eigen::MatrixXd& diag_states, const Readout& ro);

} // namespace eirc
