#include "eirc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "eirc/rng.hpp"

namespace eirc {

std::string task_name(Task t) {
    switch (t) {
        case Task::MemoryCapacity: return "memory_capacity";
        case Task::Narma10: return "narma10";
        case Task::MackeyGlass: return "mackey_glass";
        case Task::Lorenz: return "lorenz";
    }
    return "unknown";
}

Task task_from_name(const std::string& name) {
    if (name == "memory_capacity" || name == "MemoryCapacity") return Task::MemoryCapacity;
    if (name == "narma10" || name == "Narma10") return Task::Narma10;
    if (name == "mackey_glass" || name == "MackeyGlass") return Task::MackeyGlass;
    if (name == "lorenz" || name == "Lorenz") return Task::Lorenz;
    throw std::invalid_argument("unknown task: " + name);
}

TaskData gen_memory_input(int len, int d_max, std::uint64_t seed) {
    if (d_max < 1) throw std::invalid_argument("gen_memory_input: d_max must be >= 1");
    if (len <= d_max) throw std::invalid_argument("gen_memory_input: len must exceed d_max");

    TaskData data;
    data.task = Task::MemoryCapacity;
    data.seed = seed;
    data.first_valid_row = d_max;
    data.input.resize(len);
    Rng rng(seed);
    for (int t = 0; t < len; ++t) data.input[t] = rng.uniform01();

    data.target = Eigen::MatrixXd::Zero(len, d_max);
    for (int d = 1; d <= d_max; ++d) {
        for (int t = d; t < len; ++t) data.target(t, d - 1) = data.input[t - d];
    }
    return data;
}

TaskData gen_narma10(int len, std::uint64_t seed, const Narma10Params& params) {
    constexpr int kOrder = 10;
    if (len <= kOrder) throw std::invalid_argument("gen_narma10: len must exceed 10");

    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const std::uint64_t attempt_seed = attempt == 0 ? seed : substream(seed, attempt);
        Rng rng(attempt_seed);

        std::vector<double> u(len), y(len, 0.0);
        for (int t = 0; t < len; ++t) u[t] = rng.uniform(0.0, 0.5);

        bool diverged = false;
        for (int t = kOrder + 1; t < len; ++t) {
            double lag_sum = 0.0;
            for (int i = 1; i <= kOrder; ++i) lag_sum += y[t - i];
            y[t] = params.p * y[t - 1] + params.q * y[t - 1] * lag_sum +
                   params.g * u[t - kOrder] * u[t - 1] + params.d;
            if (!std::isfinite(y[t]) || std::abs(y[t]) > 10.0) {
                diverged = true;
                break;
            }
        }
        if (diverged) continue;

        TaskData data;
        data.task = Task::Narma10;
        data.seed = seed;
        data.attempts = attempt + 1;
        data.input = std::move(u);
        data.target = Eigen::Map<Eigen::MatrixXd>(y.data(), len, 1);
        return data;
    }
    throw std::runtime_error("gen_narma10: series diverged for every attempted seed");
}

std::vector<double> mackey_glass_raw(int len, const MackeyGlassParams& params) {
    if (len < 1) throw std::invalid_argument("mackey_glass_raw: len must be >= 1");
    if (params.substeps < 1) throw std::invalid_argument("mackey_glass_raw: substeps must be >= 1");
    const double h = params.dt / params.substeps;
    const double delay_steps_real = params.tau / h;
    const auto delay_steps = static_cast<long>(std::llround(delay_steps_real));
    if (std::abs(delay_steps_real - static_cast<double>(delay_steps)) > 1e-9)
        throw std::invalid_argument("mackey_glass_raw: tau must be a multiple of the integration step");

    const long n_samples = static_cast<long>(params.transient) + len;
    const long n_steps = n_samples * params.substeps;
    std::vector<double> x(static_cast<std::size_t>(n_steps) + 1);
    x[0] = params.history;

    auto delayed = [&](long idx) {
        return idx <= 0 ? params.history : x[static_cast<std::size_t>(idx)];
    };
    auto deriv = [&](double xv, double xd) {
        return params.xi * xd / (1.0 + std::pow(xd, params.n)) - params.gamma * xv;
    };

    for (long m = 0; m < n_steps; ++m) {
        const double xd0 = delayed(m - delay_steps);
        const double xd1 = delayed(m - delay_steps + 1);
        const double xdh = 0.5 * (xd0 + xd1);
        const double xm = x[static_cast<std::size_t>(m)];
        const double k1 = deriv(xm, xd0);
        const double k2 = deriv(xm + 0.5 * h * k1, xdh);
        const double k3 = deriv(xm + 0.5 * h * k2, xdh);
        const double k4 = deriv(xm + h * k3, xd1);
        const double next = xm + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(next))
            throw std::runtime_error("mackey_glass_raw: integration diverged");
        x[static_cast<std::size_t>(m) + 1] = next;
    }

    std::vector<double> retained(len);
    for (int r = 0; r < len; ++r) {
        const long sample = (static_cast<long>(params.transient) + r) * params.substeps;
        retained[r] = x[static_cast<std::size_t>(sample)];
    }
    return retained;
}

namespace {

TaskData normalized_one_step_task(Task task, std::vector<double> raw, double dt_sample,
                                  std::uint64_t seed) {
    // raw has len+1 samples; inputs are the first len, targets one ahead
    const int len = static_cast<int>(raw.size()) - 1;
    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (!(mx > mn)) throw std::runtime_error("normalized series has zero range");

    TaskData data;
    data.task = task;
    data.seed = seed;
    data.dt_sample = dt_sample;
    data.norm_min = mn;
    data.norm_max = mx;
    data.input.resize(len);
    data.target.resize(len, 1);
    const double scale = 1.0 / (mx - mn);
    for (int t = 0; t <= len; ++t) raw[t] = (raw[t] - mn) * scale;
    for (int t = 0; t < len; ++t) {
        data.input[t] = raw[t];
        data.target(t, 0) = raw[t + 1];
    }
    return data;
}

} // namespace

TaskData gen_mackey_glass(int len, const MackeyGlassParams& params, std::uint64_t seed) {
    auto raw = mackey_glass_raw(len + 1, params);
    auto data = normalized_one_step_task(Task::MackeyGlass, std::move(raw), params.dt, seed);
    return data;
}

Eigen::Vector3d lorenz_integrate(Eigen::Vector3d state, double h, int steps,
                                 const LorenzParams& params) {
    auto deriv = [&](const Eigen::Vector3d& s) {
        return Eigen::Vector3d(params.a * (s[1] - s[0]),
                               -s[0] * s[2] + params.b * s[0] - s[1],
                               s[0] * s[1] - params.c * s[2]);
    };
    for (int m = 0; m < steps; ++m) {
        const Eigen::Vector3d k1 = deriv(state);
        const Eigen::Vector3d k2 = deriv(state + 0.5 * h * k1);
        const Eigen::Vector3d k3 = deriv(state + 0.5 * h * k2);
        const Eigen::Vector3d k4 = deriv(state + h * k3);
        state += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!state.allFinite()) throw std::runtime_error("lorenz_integrate: diverged");
    }
    return state;
}

TaskData gen_lorenz(int len, const LorenzParams& params, std::uint64_t seed) {
    if (len < 1) throw std::invalid_argument("gen_lorenz: len must be >= 1");
    if (params.sample_every < 1)
        throw std::invalid_argument("gen_lorenz: sample_every must be >= 1");

    Rng rng(seed);
    Eigen::Vector3d delta(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
    if (delta.norm() > 0.0) delta *= params.perturbation / delta.norm();
    Eigen::Vector3d state = Eigen::Vector3d(1.0, 1.0, 1.0) + delta;

    const long n_samples = static_cast<long>(params.transient) + len + 1;
    std::vector<double> raw;
    raw.reserve(static_cast<std::size_t>(len) + 1);
    for (long s = 0; s < n_samples; ++s) {
        if (s > 0) state = lorenz_integrate(state, params.dt, params.sample_every, params);
        if (s >= params.transient) raw.push_back(state[0]);
    }

    auto data = normalized_one_step_task(Task::Lorenz, std::move(raw),
                                         params.dt * params.sample_every, seed);
    return data;
}

double task_input_mean(Task t) {
    switch (t) {
        case Task::MemoryCapacity: return 0.5;  // uniform [0,1]
        case Task::Narma10: return 0.25;        // uniform [0,0.5]
        case Task::MackeyGlass:
        case Task::Lorenz: return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void write_task_csv(const std::string& path, const TaskData& data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_task_csv: cannot open " + path);
    char buf[96];
    out << "# task=" << task_name(data.task) << " seed=" << data.seed << "\n";
    std::snprintf(buf, sizeof buf, "# dt_sample=%.10g norm_min=%.17g norm_max=%.17g\n",
                  data.dt_sample, data.norm_min, data.norm_max);
    out << buf;
    out << "time,u,y\n";
    const int len = static_cast<int>(data.input.size());
    for (int t = 0; t < len; ++t) {
        const double y = t < data.first_valid_row
                             ? std::numeric_limits<double>::quiet_NaN()
                             : data.target(t, 0);
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", t * data.dt_sample,
                      data.input[t], y);
        out << buf;
    }
}

} // namespace eirc
