#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace eirc {

enum class Task { MemoryCapacity, Narma10, MackeyGlass, Lorenz };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

// Input/target series for one benchmark. `target` has one column per output
// (70 delay columns for the memory task, 1 elsewhere); rows before
// `first_valid_row` lack the history needed to define a target and must not
// be trained on. For normalized chaotic series, `norm_min`/`norm_max` record
// the affine map applied to the raw trajectory.
struct TaskData {
    Task task = Task::MemoryCapacity;
    std::vector<double> input;
    Eigen::MatrixXd target;
    int first_valid_row = 0;
    double dt_sample = 1.0;
    double norm_min = 0.0;
    double norm_max = 1.0;
    std::uint64_t seed = 0;
    int attempts = 1; // NARMA series regenerated on divergence
};

// Uniform [0,1] input; target column d-1 holds the input d steps earlier.
TaskData gen_memory_input(int len, int d_max, std::uint64_t seed);

struct Narma10Params {
    double p = 0.3;
    double q = 0.05;
    double g = 1.5;
    double d = 0.1;
};

// 10th-order NARMA series driven by uniform [0, 0.5] input. The recursion
// occasionally diverges; the series is then regenerated from a derived seed
// and the attempt count recorded.
TaskData gen_narma10(int len, std::uint64_t seed, const Narma10Params& params = {});

struct MackeyGlassParams {
    double xi = 0.2;
    double gamma = 0.1;
    double tau = 17.0;
    int n = 10;
    double dt = 0.1;       // sampling step
    int substeps = 1;      // integration steps per sample
    int transient = 10000; // samples discarded before the retained window
    double history = 1.2;  // constant pre-history
};

// Delay differential equation integrated by RK4; delayed values at stage
// times come from linear interpolation of the stored trajectory. Output is
// normalized to [0,1] over the retained window; targets are one step ahead.
TaskData gen_mackey_glass(int len, const MackeyGlassParams& params = {},
                          std::uint64_t seed = 0);

// Retained window of the raw (unnormalized) trajectory, for convergence
// checks against refined integration steps.
std::vector<double> mackey_glass_raw(int len, const MackeyGlassParams& params = {});

struct LorenzParams {
    double a = 10.0;
    double b = 28.0;
    double c = 8.0 / 3.0;
    double dt = 0.01;          // integration step
    int sample_every = 2;      // sampling step = dt * sample_every
    int transient = 5000;      // samples discarded
    double perturbation = 1e-3;
};

// Partially observed Lorenz system: only the x component is retained and
// normalized to [0,1]; targets are one step ahead. The initial condition is
// (1,1,1) plus a seed-dependent perturbation of the given magnitude.
TaskData gen_lorenz(int len, const LorenzParams& params = {}, std::uint64_t seed = 0);

// RK4 integration of the Lorenz equations from `state` with `steps` steps of
// size `h`. Exposed for step-size convergence checks.
Eigen::Vector3d lorenz_integrate(Eigen::Vector3d state, double h, int steps,
                                 const LorenzParams& params = {});

// Analytic mean of the task's input process, or NaN when only an empirical
// mean is available (normalized chaotic series).
double task_input_mean(Task t);

// Writes `time,u,y` rows with the task metadata (sampling step, seed,
// normalization record) in `#` header lines. For the memory task the y
// column is the delay-1 target.
void write_task_csv(const std::string& path, const TaskData& data);

} // namespace eirc
