#include "eirc/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "eirc/rng.hpp"

namespace eirc {

using nlohmann::json;

namespace {

// sub-stream tags hanging off a cell/replicate seed
enum : std::uint64_t {
    kStreamReservoir = 1,
    kStreamTaskData = 2,
    kStreamAdaptDrive = 3,
    kStreamTargets = 4,
    kStreamPairs = 5,
};

constexpr int kMemoryDelayMax = 70;
constexpr int kEntropySamples = 10000;
constexpr std::size_t kCorrPairs = 1000;

bool is_adaptive(RunMode m) {
    return m == RunMode::AdaptiveHomogeneous || m == RunMode::AdaptiveHeterogeneous;
}

bool is_designed(RunMode m) {
    return m == RunMode::DesignedHomogeneous || m == RunMode::DesignedHeterogeneous;
}

bool is_heterogeneous(RunMode m) {
    return m == RunMode::AdaptiveHeterogeneous || m == RunMode::DesignedHeterogeneous;
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::span<const double> vec_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

} // namespace

std::string experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SweepBetaTheta: return "sweep_beta_theta";
        case ExperimentKind::AdaptTrace: return "adapt_trace";
        case ExperimentKind::TargetRateSweep: return "target_rate_sweep";
        case ExperimentKind::CompareModes: return "compare_modes";
        case ExperimentKind::InputScalingSweep: return "input_scaling_sweep";
    }
    return "unknown";
}

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "sweep_beta_theta" || name == "SweepBetaTheta") return ExperimentKind::SweepBetaTheta;
    if (name == "adapt_trace" || name == "AdaptTrace") return ExperimentKind::AdaptTrace;
    if (name == "target_rate_sweep" || name == "TargetRateSweep") return ExperimentKind::TargetRateSweep;
    if (name == "compare_modes" || name == "CompareModes") return ExperimentKind::CompareModes;
    if (name == "input_scaling_sweep" || name == "InputScalingSweep") return ExperimentKind::InputScalingSweep;
    throw std::invalid_argument("unknown experiment: " + name);
}

std::string mode_name(RunMode m) {
    switch (m) {
        case RunMode::NonAdaptive: return "non_adaptive";
        case RunMode::AdaptiveHomogeneous: return "adaptive_homogeneous";
        case RunMode::AdaptiveHeterogeneous: return "adaptive_heterogeneous";
        case RunMode::DesignedHomogeneous: return "designed_homogeneous";
        case RunMode::DesignedHeterogeneous: return "designed_heterogeneous";
    }
    return "unknown";
}

RunMode mode_from_name(const std::string& name) {
    if (name == "non_adaptive" || name == "NonAdaptive") return RunMode::NonAdaptive;
    if (name == "adaptive_homogeneous" || name == "AdaptiveHomogeneous") return RunMode::AdaptiveHomogeneous;
    if (name == "adaptive_heterogeneous" || name == "AdaptiveHeterogeneous") return RunMode::AdaptiveHeterogeneous;
    if (name == "designed_homogeneous" || name == "DesignedHomogeneous") return RunMode::DesignedHomogeneous;
    if (name == "designed_heterogeneous" || name == "DesignedHeterogeneous") return RunMode::DesignedHeterogeneous;
    throw std::invalid_argument("unknown mode: " + name);
}

bool metric_higher_is_better(Task t) {
    return t != Task::Narma10;
}

std::string metric_name_for(Task t) {
    switch (t) {
        case Task::MemoryCapacity: return "memory_capacity";
        case Task::Narma10: return "rmse";
        case Task::MackeyGlass:
        case Task::Lorenz: return "vpt";
    }
    return "metric";
}

void ExperimentSpec::validate() const {
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    if (modes.empty()) throw std::invalid_argument("at least one mode is required");
    reservoir.validate();
    split.validate();
    if (adaptation.delta < 0.0) throw std::invalid_argument("adaptation.delta must be >= 0");
    if (adaptation.n_steps < 0) throw std::invalid_argument("adaptation.n_steps must be >= 0");
    if (!(ridge_eta >= 0.0)) throw std::invalid_argument("ridge_eta must be >= 0");
    if (task == Task::MemoryCapacity && split.washout < kMemoryDelayMax)
        throw std::invalid_argument("memory task needs washout >= 70 to cover every delay");

    if (experiment == ExperimentKind::AdaptTrace && !is_adaptive(modes.front()))
        throw std::invalid_argument("adapt_trace requires an adaptive mode");
    if (experiment == ExperimentKind::TargetRateSweep &&
        !(modes.front() == RunMode::AdaptiveHomogeneous ||
          modes.front() == RunMode::DesignedHomogeneous))
        throw std::invalid_argument("target_rate_sweep requires a homogeneous mode");
    for (double r : grid.rho_t) {
        if (!(r > 0.0 && r < 1.0))
            throw std::invalid_argument("grid.rho_t values must lie in (0,1)");
    }
}

TaskData make_task_data(Task t, int len, std::uint64_t seed) {
    switch (t) {
        case Task::MemoryCapacity: return gen_memory_input(len, kMemoryDelayMax, seed);
        case Task::Narma10: return gen_narma10(len, seed);
        case Task::MackeyGlass: return gen_mackey_glass(len, {}, seed);
        case Task::Lorenz: return gen_lorenz(len, {}, seed);
    }
    throw std::invalid_argument("make_task_data: unknown task");
}

std::vector<double> make_adaptation_drive(Task t, int n_steps, std::uint64_t seed) {
    std::vector<double> drive;
    switch (t) {
        case Task::MemoryCapacity: {
            Rng rng(seed);
            drive.resize(n_steps);
            for (auto& v : drive) v = rng.uniform01();
            return drive;
        }
        case Task::Narma10: {
            Rng rng(seed);
            drive.resize(n_steps);
            for (auto& v : drive) v = rng.uniform(0.0, 0.5);
            return drive;
        }
        case Task::MackeyGlass:
            return gen_mackey_glass(std::max(n_steps, 16), {}, seed).input;
        case Task::Lorenz:
            return gen_lorenz(std::max(n_steps, 16), {}, seed).input;
    }
    throw std::invalid_argument("make_adaptation_drive: unknown task");
}

EvalOutcome evaluate_task(EIReservoir& res, const TaskData& data, const SplitSpec& split,
                          std::uint64_t pair_seed, double ridge_eta, bool keep_artifacts) {
    split.validate();
    if (static_cast<int>(data.input.size()) < split.total())
        throw std::invalid_argument("evaluate_task: task series shorter than the split");
    if (data.first_valid_row > split.washout)
        throw std::invalid_argument("evaluate_task: washout does not cover the target history");

    EvalOutcome out;
    out.metric_name = metric_name_for(data.task);
    const std::span<const double> u(data.input);
    const int washout = split.washout;
    const int train_len = split.train_len;
    const int test_len = split.test_len;

    for (int t = 0; t < washout; ++t) step(res, u[static_cast<std::size_t>(t)]);

    Eigen::MatrixXd diag;
    Readout ro;
    const bool closed_loop = data.task == Task::MackeyGlass || data.task == Task::Lorenz;
    if (!closed_loop) {
        const Eigen::MatrixXd states =
            run_open_loop(res, u.subspan(static_cast<std::size_t>(washout),
                                         static_cast<std::size_t>(train_len + test_len)));
        ro = train_ridge(states.topRows(train_len), data.target.middleRows(washout, train_len),
                         ridge_eta);
        const Eigen::MatrixXd pred = apply_readout(states.bottomRows(test_len), ro);
        const Eigen::MatrixXd truth = data.target.middleRows(washout + train_len, test_len);

        if (data.task == Task::MemoryCapacity) {
            out.r2_by_delay.resize(static_cast<std::size_t>(truth.cols()));
            for (Eigen::Index d = 0; d < truth.cols(); ++d) {
                const Eigen::VectorXd tc = truth.col(d);
                const Eigen::VectorXd pc = pred.col(d);
                out.r2_by_delay[static_cast<std::size_t>(d)] = r_squared(vec_span(tc), vec_span(pc));
            }
            out.metric = memory_capacity(out.r2_by_delay);
        } else {
            const Eigen::VectorXd tc = truth.col(0);
            const Eigen::VectorXd pc = pred.col(0);
            out.metric = rmse(vec_span(tc), vec_span(pc));
        }
        diag = states.bottomRows(test_len);
    } else {
        const Eigen::MatrixXd train_states = run_open_loop(
            res, u.subspan(static_cast<std::size_t>(washout), static_cast<std::size_t>(train_len)));
        ro = train_ridge(train_states, data.target.middleRows(washout, train_len), ridge_eta);

        const ClosedLoopResult cl = predict_closed_loop(res, ro, test_len);
        out.closed_loop_diverged = cl.diverged;
        if (cl.outputs.empty()) {
            out.metric = 0.0;
        } else {
            const auto produced = cl.outputs.size();
            out.metric = static_cast<double>(
                vpt(u.subspan(static_cast<std::size_t>(washout + train_len), produced),
                    cl.outputs));
        }
        const int diag_rows = std::min(test_len, train_len);
        diag = train_states.bottomRows(diag_rows);
    }

    out.mean_rate = diag.mean();
    const auto entropy_rows = std::min<Eigen::Index>(kEntropySamples, diag.rows());
    double entropy_sum = 0.0;
    int entropy_count = 0;
    for (Eigen::Index j = 0; j < diag.cols(); ++j) {
        const Eigen::VectorXd col = diag.col(j).tail(entropy_rows);
        const double h = kl_entropy(vec_span(col));
        if (std::isfinite(h)) {
            entropy_sum += h;
            ++entropy_count;
        }
    }
    out.mean_entropy = entropy_count > 0 ? entropy_sum / entropy_count
                                         : -std::numeric_limits<double>::infinity();
    out.regime = classify_regime(diag, kCorrPairs, pair_seed);
    out.mean_corr = out.regime.mean_corr;

    int extreme = 0;
    for (Eigen::Index j = 0; j < diag.cols(); ++j) {
        const double m = diag.col(j).mean();
        if (m <= 0.05 || m >= 0.95) ++extreme;
    }
    out.extreme_rate_fraction = static_cast<double>(extreme) / static_cast<double>(diag.cols());

    if (keep_artifacts) {
        out.diag_states = std::move(diag);
        out.readout = std::move(ro);
    }
    return out;
}

void write_neuron_diagnostics(const std::string& path, const EIReservoir& res,
                              const Eigen::MatrixXd& diag_states, const Readout& ro) {
    if (diag_states.cols() != res.n())
        throw std::invalid_argument("write_neuron_diagnostics: state width mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_neuron_diagnostics: cannot open " + path);

    const Eigen::VectorXd beta_i = local_balance(res);
    out << "neuron,type,mean_rate,local_balance,entropy,output_weight\n";
    char buf[160];
    for (int i = 0; i < res.n(); ++i) {
        const Eigen::VectorXd col = diag_states.col(i);
        const double h = kl_entropy(vec_span(col));
        const double w = ro.w_out.row(i).norm();
        std::snprintf(buf, sizeof buf, "%d,%c,%.10g,%.10g,%.10g,%.10g\n", i,
                      res.neuron_type[static_cast<std::size_t>(i)] == NeuronType::Excitatory ? 'E' : 'I',
                      col.mean(), beta_i[i], h, w);
        out << buf;
    }
}

namespace {

// Omitted axes sweep a single point at the base config's value.
std::vector<double> theta_axis(const ExperimentSpec& spec, const GridSpec& grid) {
    return grid.theta.empty() ? std::vector<double>{spec.reservoir.theta} : grid.theta;
}

std::vector<double> beta_axis(const ExperimentSpec& spec, const GridSpec& grid) {
    return grid.beta.empty() ? std::vector<double>{spec.reservoir.beta} : grid.beta;
}

std::vector<CellSpec> enumerate_cells(const ExperimentSpec& spec) {
    std::vector<CellSpec> cells;
    auto push = [&cells](CellSpec c) {
        c.index = cells.size();
        cells.push_back(c);
    };

    switch (spec.experiment) {
        case ExperimentKind::SweepBetaTheta:
            for (double theta : theta_axis(spec, spec.grid)) {
                for (double beta : beta_axis(spec, spec.grid)) {
                    CellSpec c;
                    c.mode = spec.modes.front();
                    c.beta = beta;
                    c.theta = theta;
                    push(c);
                }
            }
            break;
        case ExperimentKind::AdaptTrace:
            for (double beta : beta_axis(spec, spec.grid)) {
                CellSpec c;
                c.mode = spec.modes.front();
                c.beta = beta;
                push(c);
            }
            break;
        case ExperimentKind::TargetRateSweep: {
            const std::vector<double> rho_axis =
                spec.grid.rho_t.empty() ? std::vector<double>{spec.targets.rho_t}
                                        : spec.grid.rho_t;
            for (double rho : rho_axis) {
                CellSpec c;
                c.mode = spec.modes.front();
                c.rho_t = rho;
                push(c);
            }
            break;
        }
        case ExperimentKind::CompareModes:
            for (double theta : theta_axis(spec, spec.baseline_grid)) {
                for (double beta : beta_axis(spec, spec.baseline_grid)) {
                    CellSpec c;
                    c.mode = RunMode::NonAdaptive;
                    c.beta = beta;
                    c.theta = theta;
                    c.is_baseline = true;
                    push(c);
                }
            }
            for (RunMode m : spec.modes) {
                if (m == RunMode::NonAdaptive) continue; // covered by the baseline grid
                CellSpec c;
                c.mode = m;
                push(c);
            }
            break;
        case ExperimentKind::InputScalingSweep: {
            const std::vector<double> sigma_axis =
                spec.grid.sigma_in.empty()
                    ? std::vector<double>{spec.reservoir.input_spread}
                    : spec.grid.sigma_in;
            for (double s : sigma_axis) {
                CellSpec c;
                c.mode = spec.modes.front();
                c.sigma_in = s;
                push(c);
            }
            break;
        }
    }
    return cells;
}

CellRow run_cell(const ExperimentSpec& spec, const CellSpec& cell, int replicate) {
    CellRow row;
    row.cell_index = cell.index;
    row.replicate = replicate;
    row.mode = cell.mode;
    row.is_baseline = cell.is_baseline;
    row.beta = cell.beta;
    row.theta = cell.theta;
    row.rho_t = cell.rho_t;
    row.sigma_in = cell.sigma_in;
    row.metric_name = metric_name_for(spec.task);
    row.seed = derive_seed(spec.master_seed, cell.index, static_cast<std::uint64_t>(replicate));

    try {
        NetworkConfig cfg = spec.reservoir;
        if (!std::isnan(cell.beta)) cfg.beta = cell.beta;
        if (!std::isnan(cell.theta)) cfg.theta = cell.theta;
        if (!std::isnan(cell.sigma_in)) cfg.input_spread = cell.sigma_in;
        cfg.seed = substream(row.seed, kStreamReservoir);

        EIReservoir res = build_reservoir(cfg);
        row.beta_initial = global_balance(res);

        const TaskData data =
            make_task_data(spec.task, spec.split.total(), substream(row.seed, kStreamTaskData));

        TargetRates targets;
        const bool adaptive = is_adaptive(cell.mode);
        const bool designed = is_designed(cell.mode);
        if (adaptive || designed) {
            TargetMode tm = spec.targets;
            tm.kind = is_heterogeneous(cell.mode) ? TargetMode::Heterogeneous
                                                  : TargetMode::Homogeneous;
            if (!std::isnan(cell.rho_t)) tm.rho_t = cell.rho_t;
            targets = sample_targets(tm, res.n(), substream(row.seed, kStreamTargets));

            if (spec.eval_pre) {
                EIReservoir copy = res;
                row.metric_pre = evaluate_task(copy, data, spec.split,
                                               substream(row.seed, kStreamPairs), spec.ridge_eta)
                                     .metric;
            }
        }

        if (adaptive) {
            const auto drive = make_adaptation_drive(spec.task, spec.adaptation.n_steps,
                                                     substream(row.seed, kStreamAdaptDrive));
            std::function<double(const EIReservoir&)> evaluator;
            if (spec.experiment == ExperimentKind::AdaptTrace && spec.adaptation.eval_every > 0) {
                evaluator = [&](const EIReservoir& frozen) {
                    EIReservoir copy = frozen;
                    return evaluate_task(copy, data, spec.split,
                                         substream(row.seed, kStreamPairs), spec.ridge_eta)
                        .metric;
                };
            }
            const AdaptationTrace trace =
                adapt(res, targets, spec.adaptation, drive, evaluator);
            if (trace.diverged) throw std::runtime_error("adaptation diverged");
            if (spec.experiment == ExperimentKind::AdaptTrace && spec.write_traces &&
                !spec.output_path.empty()) {
                std::ostringstream name;
                name << spec.output_path << "/trace_cell" << cell.index << "_rep" << replicate
                     << ".csv";
                write_adaptation_trace_csv(name.str(), trace, row.metric_name);
            }
        } else if (designed) {
            double mean_input = task_input_mean(spec.task);
            if (std::isnan(mean_input)) {
                double s = 0.0;
                for (double v : data.input) s += v;
                mean_input = s / static_cast<double>(data.input.size());
            }
            design_one_step(res, targets, mean_input);
        }

        const bool keep = spec.export_diagnostics && replicate == 0 && !spec.output_path.empty();
        const EvalOutcome out = evaluate_task(res, data, spec.split,
                                              substream(row.seed, kStreamPairs), spec.ridge_eta,
                                              keep);
        row.metric = out.metric;
        row.mean_rate = out.mean_rate;
        row.mean_entropy = out.mean_entropy;
        row.mean_corr = out.mean_corr;
        row.regime = out.regime.label;
        row.extreme_rate_fraction = out.extreme_rate_fraction;
        row.beta_final = global_balance(res);
        if (keep) {
            std::ostringstream name;
            name << spec.output_path << "/neuron_diag_cell" << cell.index << ".csv";
            write_neuron_diagnostics(name.str(), res, out.diag_states, out.readout);
        }
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

CellSummary summarize_cell(const ExperimentSpec& spec, const CellSpec& cell,
                           std::span<const CellRow> rows) {
    CellSummary s;
    s.cell_index = cell.index;
    s.mode = cell.mode;
    s.is_baseline = cell.is_baseline;
    s.beta = cell.beta;
    s.theta = cell.theta;
    s.rho_t = cell.rho_t;
    s.sigma_in = cell.sigma_in;
    s.metric_name = metric_name_for(spec.task);

    double metric_sum = 0.0, pre_sum = 0.0, rate_sum = 0.0, entropy_sum = 0.0;
    double corr_sum = 0.0, beta_sum = 0.0, extreme_sum = 0.0;
    int pre_count = 0;
    std::vector<double> metrics;
    for (const CellRow& r : rows) {
        if (!r.ok()) {
            ++s.n_error;
            continue;
        }
        ++s.n_ok;
        metrics.push_back(r.metric);
        metric_sum += r.metric;
        rate_sum += r.mean_rate;
        entropy_sum += r.mean_entropy;
        corr_sum += r.mean_corr;
        beta_sum += r.beta_final;
        extreme_sum += r.extreme_rate_fraction;
        if (!std::isnan(r.metric_pre)) {
            pre_sum += r.metric_pre;
            ++pre_count;
        }
        switch (r.regime) {
            case Regime::Silent: ++s.n_silent; break;
            case Regime::Saturated: ++s.n_saturated; break;
            case Regime::Synchronized: ++s.n_synchronized; break;
            case Regime::Active: ++s.n_active; break;
        }
    }
    if (s.n_ok > 0) {
        const double n = s.n_ok;
        s.metric_mean = metric_sum / n;
        s.mean_rate = rate_sum / n;
        s.mean_entropy = entropy_sum / n;
        s.mean_corr = corr_sum / n;
        s.beta_final = beta_sum / n;
        s.extreme_rate_fraction = extreme_sum / n;
        if (pre_count > 0) s.metric_pre_mean = pre_sum / pre_count;
        if (s.n_ok > 1) {
            double ss = 0.0;
            for (double m : metrics) ss += (m - s.metric_mean) * (m - s.metric_mean);
            s.metric_se = std::sqrt(ss / (n - 1.0) / n);
        } else {
            s.metric_se = 0.0;
        }
    }
    return s;
}

void write_cells_csv(const std::string& path, const ExperimentSpec& spec,
                     const std::vector<CellRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "experiment,task,cell_index,replicate,seed,mode,baseline,beta,theta,rho_t,"
           "sigma_in,metric_name,metric,metric_pre,mean_rate,mean_entropy,mean_corr,"
           "regime,beta_initial,beta_final,extreme_rate_fraction,error\n";
    for (const CellRow& r : rows) {
        out << experiment_name(spec.experiment) << ',' << task_name(spec.task) << ','
            << r.cell_index << ',' << r.replicate << ',' << r.seed << ',' << mode_name(r.mode)
            << ',' << (r.is_baseline ? 1 : 0) << ',' << fmt_double(r.beta) << ','
            << fmt_double(r.theta) << ',' << fmt_double(r.rho_t) << ','
            << fmt_double(r.sigma_in) << ',' << r.metric_name << ',' << fmt_double(r.metric)
            << ',' << fmt_double(r.metric_pre) << ',' << fmt_double(r.mean_rate) << ','
            << fmt_double(r.mean_entropy) << ',' << fmt_double(r.mean_corr) << ','
            << (r.ok() ? regime_name(r.regime) : "") << ',' << fmt_double(r.beta_initial) << ','
            << fmt_double(r.beta_final) << ',' << fmt_double(r.extreme_rate_fraction) << ','
            << r.error << '\n';
    }
}

void write_summary_csv(const std::string& path, const ExperimentResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "cell_index,mode,baseline,beta,theta,rho_t,sigma_in,n_ok,n_error,metric_name,"
           "metric_mean,metric_se,metric_pre_mean,mean_rate,mean_entropy,mean_corr,"
           "beta_final,extreme_rate_fraction,n_silent,n_saturated,n_synchronized,n_active,"
           "best_baseline\n";
    for (std::size_t i = 0; i < result.summaries.size(); ++i) {
        const CellSummary& s = result.summaries[i];
        out << s.cell_index << ',' << mode_name(s.mode) << ',' << (s.is_baseline ? 1 : 0) << ','
            << fmt_double(s.beta) << ',' << fmt_double(s.theta) << ',' << fmt_double(s.rho_t)
            << ',' << fmt_double(s.sigma_in) << ',' << s.n_ok << ',' << s.n_error << ','
            << s.metric_name << ',' << fmt_double(s.metric_mean) << ','
            << fmt_double(s.metric_se) << ',' << fmt_double(s.metric_pre_mean) << ','
            << fmt_double(s.mean_rate) << ',' << fmt_double(s.mean_entropy) << ','
            << fmt_double(s.mean_corr) << ',' << fmt_double(s.beta_final) << ','
            << fmt_double(s.extreme_rate_fraction) << ',' << s.n_silent << ',' << s.n_saturated
            << ',' << s.n_synchronized << ',' << s.n_active << ','
            << (i == result.best_baseline ? 1 : 0) << '\n';
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();

    ExperimentResult result;
    result.cells = enumerate_cells(spec);

    if (!spec.output_path.empty()) {
        std::filesystem::create_directories(spec.output_path);
        std::ofstream echo(spec.output_path + "/resolved_config.json");
        echo << spec_to_json(spec) << '\n';
    }

    const auto start = std::chrono::steady_clock::now();
    const std::time_t start_wall = std::time(nullptr);

    const std::size_t n_jobs = result.cells.size() * static_cast<std::size_t>(spec.n_seeds);
    result.rows.resize(n_jobs);
    unsigned n_workers = spec.workers > 0 ? static_cast<unsigned>(spec.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
    n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(std::max<std::size_t>(n_jobs, 1)));

    auto work = [&](std::size_t job) {
        const std::size_t cell_index = job / static_cast<std::size_t>(spec.n_seeds);
        const int replicate = static_cast<int>(job % static_cast<std::size_t>(spec.n_seeds));
        result.rows[job] = run_cell(spec, result.cells[cell_index], replicate);
    };

    if (n_workers <= 1) {
        for (std::size_t job = 0; job < n_jobs; ++job) work(job);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t job = next.fetch_add(1);
                    if (job >= n_jobs) return;
                    work(job);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    result.summaries.reserve(result.cells.size());
    for (const CellSpec& cell : result.cells) {
        const std::size_t offset = cell.index * static_cast<std::size_t>(spec.n_seeds);
        result.summaries.push_back(summarize_cell(
            spec, cell,
            std::span<const CellRow>(result.rows.data() + offset,
                                     static_cast<std::size_t>(spec.n_seeds))));
    }

    if (spec.experiment == ExperimentKind::CompareModes) {
        const bool higher = metric_higher_is_better(spec.task);
        for (std::size_t i = 0; i < result.summaries.size(); ++i) {
            const CellSummary& s = result.summaries[i];
            if (!s.is_baseline || s.n_ok == 0) continue;
            if (result.best_baseline == SIZE_MAX) {
                result.best_baseline = i;
                continue;
            }
            const double best = result.summaries[result.best_baseline].metric_mean;
            if ((higher && s.metric_mean > best) || (!higher && s.metric_mean < best))
                result.best_baseline = i;
        }
    }

    if (!spec.output_path.empty()) {
        write_cells_csv(spec.output_path + "/cells.csv", spec, result.rows);
        write_summary_csv(spec.output_path + "/summary.csv", result);

        std::ofstream log(spec.output_path + "/run.log");
        const auto elapsed =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
        char stamp[64];
        std::strftime(stamp, sizeof stamp, "%F %T", std::localtime(&start_wall));
        int n_errors = 0;
        for (const CellRow& r : result.rows) n_errors += r.ok() ? 0 : 1;
        log << "started " << stamp << '\n'
            << "experiment " << experiment_name(spec.experiment) << " task "
            << task_name(spec.task) << '\n'
            << "cells " << result.cells.size() << " replicates " << spec.n_seeds << " jobs "
            << n_jobs << '\n'
            << "workers " << n_workers << '\n'
            << "errors " << n_errors << '\n'
            << "elapsed_ms " << elapsed << '\n';
    }
    return result;
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known)
            throw std::invalid_argument("unknown key '" + it.key() + "' in " + context);
    }
}

double as_number(const json& j, const std::string& context) {
    if (!j.is_number())
        throw std::invalid_argument(context + " must be a number");
    return j.get<double>();
}

std::vector<double> parse_axis(const json& j, const std::string& name) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(as_number(v, "grid." + name + " entry"));
    } else if (j.is_object()) {
        check_keys(j, "grid." + name, {"from", "to", "step"});
        if (!j.contains("from") || !j.contains("to") || !j.contains("step"))
            throw std::invalid_argument("grid." + name + " range needs from/to/step");
        const double from = as_number(j.at("from"), name + ".from");
        const double to = as_number(j.at("to"), name + ".to");
        const double step = as_number(j.at("step"), name + ".step");
        if (!(step > 0.0)) throw std::invalid_argument("grid." + name + ".step must be > 0");
        const double eps = step * 1e-9;
        if (from <= to) {
            for (double v = from; v <= to + eps; v += step) out.push_back(v);
        } else {
            for (double v = from; v >= to - eps; v -= step) out.push_back(v);
        }
    } else {
        throw std::invalid_argument("grid." + name + " must be a list or a from/to/step range");
    }
    if (out.empty()) throw std::invalid_argument("grid." + name + " is empty");
    return out;
}

GridSpec parse_grid(const json& j, const std::string& context) {
    check_keys(j, context, {"beta", "theta", "rho_t", "sigma_in"});
    GridSpec grid;
    if (j.contains("beta")) grid.beta = parse_axis(j.at("beta"), "beta");
    if (j.contains("theta")) grid.theta = parse_axis(j.at("theta"), "theta");
    if (j.contains("rho_t")) grid.rho_t = parse_axis(j.at("rho_t"), "rho_t");
    if (j.contains("sigma_in")) grid.sigma_in = parse_axis(j.at("sigma_in"), "sigma_in");
    return grid;
}

// Tuned per-task settings; applied wherever the config leaves them out.
struct TaskDefaults {
    double sigma_in_nonadaptive;
    double beta;
    double theta;
    double sigma_in_adaptive;
    double rho_t;
    double sigma_in_hetero;
};

TaskDefaults defaults_for(Task t) {
    switch (t) {
        case Task::MemoryCapacity: return {0.016, -1.0, 0.0, 0.016, 0.5, 0.010};
        case Task::Narma10: return {0.100, -1.0, 0.0, 0.063, 0.3, 0.100};
        case Task::MackeyGlass: return {0.631, -1.2, 0.0, 0.631, 0.3, 1.000};
        case Task::Lorenz: return {2.512, -1.0, -1.0, 3.981, 0.6, 3.981};
    }
    return {0.016, -1.0, 0.0, 0.016, 0.5, 0.010};
}

} // namespace

ExperimentSpec parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config root must be a JSON object");
    check_keys(j, "config",
               {"experiment", "task", "grid", "baseline_grid", "n_seeds", "master_seed",
                "mode", "modes", "reservoir", "adaptation", "split", "targets", "ridge_eta",
                "eval_pre", "export_diagnostics", "write_traces", "workers", "output_path"});
    if (!j.contains("experiment")) throw std::invalid_argument("config requires 'experiment'");
    if (!j.contains("task")) throw std::invalid_argument("config requires 'task'");

    ExperimentSpec spec;
    spec.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    spec.task = task_from_name(j.at("task").get<std::string>());

    // modes
    if (j.contains("mode") && j.contains("modes"))
        throw std::invalid_argument("give either 'mode' or 'modes', not both");
    if (j.contains("mode")) {
        spec.modes = {mode_from_name(j.at("mode").get<std::string>())};
    } else if (j.contains("modes")) {
        spec.modes.clear();
        for (const auto& m : j.at("modes")) spec.modes.push_back(mode_from_name(m.get<std::string>()));
        if (spec.modes.empty()) throw std::invalid_argument("'modes' must be non-empty");
    } else {
        switch (spec.experiment) {
            case ExperimentKind::AdaptTrace:
            case ExperimentKind::TargetRateSweep:
            case ExperimentKind::CompareModes:
                spec.modes = {RunMode::AdaptiveHomogeneous};
                break;
            default:
                spec.modes = {RunMode::NonAdaptive};
                break;
        }
    }
    const RunMode primary = spec.modes.front();
    const TaskDefaults td = defaults_for(spec.task);

    if (j.contains("n_seeds")) spec.n_seeds = j.at("n_seeds").get<int>();
    if (j.contains("master_seed")) spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("ridge_eta")) spec.ridge_eta = as_number(j.at("ridge_eta"), "ridge_eta");
    if (j.contains("eval_pre")) spec.eval_pre = j.at("eval_pre").get<bool>();
    if (j.contains("export_diagnostics"))
        spec.export_diagnostics = j.at("export_diagnostics").get<bool>();
    if (j.contains("write_traces")) spec.write_traces = j.at("write_traces").get<bool>();
    if (j.contains("workers")) spec.workers = j.at("workers").get<int>();
    if (j.contains("output_path")) spec.output_path = j.at("output_path").get<std::string>();

    // reservoir section with derived defaults
    NetworkConfig& r = spec.reservoir;
    const json res_j = j.contains("reservoir") ? j.at("reservoir") : json::object();
    check_keys(res_j, "reservoir",
               {"n_neurons", "excit_fraction", "mean_degree", "mu_e", "sigma_e", "beta",
                "sigma_i", "alpha", "theta", "steepness", "leakage", "input_fraction",
                "input_spread", "strength_ratio", "balance_mode", "dale"});
    if (res_j.contains("n_neurons")) r.n_neurons = res_j.at("n_neurons").get<int>();
    if (res_j.contains("excit_fraction"))
        r.excit_fraction = as_number(res_j.at("excit_fraction"), "reservoir.excit_fraction");
    if (res_j.contains("mean_degree"))
        r.mean_degree = as_number(res_j.at("mean_degree"), "reservoir.mean_degree");
    r.mu_e = res_j.contains("mu_e") ? as_number(res_j.at("mu_e"), "reservoir.mu_e")
                                    : NetworkConfig::derived_mu_e(r.mean_degree, r.excit_fraction);
    r.sigma_e = res_j.contains("sigma_e") ? as_number(res_j.at("sigma_e"), "reservoir.sigma_e")
                                          : 0.2 * r.mu_e;
    r.sigma_i = res_j.contains("sigma_i") ? as_number(res_j.at("sigma_i"), "reservoir.sigma_i")
                                          : r.sigma_e;
    if (res_j.contains("beta")) {
        r.beta = as_number(res_j.at("beta"), "reservoir.beta");
    } else {
        r.beta = primary == RunMode::NonAdaptive ? td.beta : 0.0;
    }
    if (res_j.contains("theta")) {
        r.theta = as_number(res_j.at("theta"), "reservoir.theta");
    } else {
        r.theta = primary == RunMode::NonAdaptive ? td.theta : 0.0;
    }
    if (res_j.contains("alpha")) r.alpha = as_number(res_j.at("alpha"), "reservoir.alpha");
    if (res_j.contains("steepness"))
        r.steepness = as_number(res_j.at("steepness"), "reservoir.steepness");
    if (res_j.contains("leakage")) r.leakage = as_number(res_j.at("leakage"), "reservoir.leakage");
    if (res_j.contains("input_fraction"))
        r.input_fraction = as_number(res_j.at("input_fraction"), "reservoir.input_fraction");
    if (res_j.contains("input_spread")) {
        r.input_spread = as_number(res_j.at("input_spread"), "reservoir.input_spread");
    } else {
        r.input_spread = primary == RunMode::NonAdaptive ? td.sigma_in_nonadaptive
                         : is_heterogeneous(primary)     ? td.sigma_in_hetero
                                                         : td.sigma_in_adaptive;
    }
    if (res_j.contains("strength_ratio"))
        r.strength_ratio = as_number(res_j.at("strength_ratio"), "reservoir.strength_ratio");
    if (res_j.contains("balance_mode")) {
        const std::string m = res_j.at("balance_mode").get<std::string>();
        if (m == "link_strength") r.balance_mode = BalanceMode::LinkStrength;
        else if (m == "inhib_fraction") r.balance_mode = BalanceMode::InhibFraction;
        else throw std::invalid_argument("reservoir.balance_mode must be link_strength or inhib_fraction");
    }
    if (res_j.contains("dale")) {
        const std::string d = res_j.at("dale").get<std::string>();
        if (d == "respect") r.dale = DalePolicy::Respect;
        else if (d == "shuffled") r.dale = DalePolicy::Shuffled;
        else throw std::invalid_argument("reservoir.dale must be respect or shuffled");
    }

    // targets
    const json tgt_j = j.contains("targets") ? j.at("targets") : json::object();
    check_keys(tgt_j, "targets", {"kind", "rho_t", "a", "b"});
    spec.targets.kind = is_heterogeneous(primary) ? TargetMode::Heterogeneous
                                                  : TargetMode::Homogeneous;
    if (tgt_j.contains("kind")) {
        const std::string k = tgt_j.at("kind").get<std::string>();
        if (k == "homogeneous") spec.targets.kind = TargetMode::Homogeneous;
        else if (k == "heterogeneous") spec.targets.kind = TargetMode::Heterogeneous;
        else throw std::invalid_argument("targets.kind must be homogeneous or heterogeneous");
    }
    spec.targets.rho_t =
        tgt_j.contains("rho_t") ? as_number(tgt_j.at("rho_t"), "targets.rho_t") : td.rho_t;
    if (tgt_j.contains("a")) spec.targets.a = as_number(tgt_j.at("a"), "targets.a");
    if (tgt_j.contains("b")) spec.targets.b = as_number(tgt_j.at("b"), "targets.b");

    // adaptation
    const json ad_j = j.contains("adaptation") ? j.at("adaptation") : json::object();
    check_keys(ad_j, "adaptation", {"delta", "n_steps", "eval_every", "record_every"});
    if (ad_j.contains("delta")) spec.adaptation.delta = as_number(ad_j.at("delta"), "adaptation.delta");
    if (ad_j.contains("n_steps")) spec.adaptation.n_steps = ad_j.at("n_steps").get<int>();
    if (ad_j.contains("eval_every")) {
        spec.adaptation.eval_every = ad_j.at("eval_every").is_null() ? 0 : ad_j.at("eval_every").get<int>();
    } else if (spec.experiment == ExperimentKind::AdaptTrace) {
        spec.adaptation.eval_every = 500;
    }
    if (ad_j.contains("record_every")) spec.adaptation.record_every = ad_j.at("record_every").get<int>();

    // split
    const json sp_j = j.contains("split") ? j.at("split") : json::object();
    check_keys(sp_j, "split", {"washout", "train", "test"});
    if (sp_j.contains("washout")) spec.split.washout = sp_j.at("washout").get<int>();
    if (sp_j.contains("train")) spec.split.train_len = sp_j.at("train").get<int>();
    if (sp_j.contains("test")) spec.split.test_len = sp_j.at("test").get<int>();

    // grids
    if (j.contains("grid")) spec.grid = parse_grid(j.at("grid"), "grid");
    if (j.contains("baseline_grid"))
        spec.baseline_grid = parse_grid(j.at("baseline_grid"), "baseline_grid");
    if (spec.experiment == ExperimentKind::CompareModes && spec.baseline_grid.beta.empty())
        spec.baseline_grid.beta = {-2.0, -1.0, 0.0, 1.0};

    spec.validate();
    return spec;
}

ExperimentSpec parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["experiment"] = experiment_name(spec.experiment);
    j["task"] = task_name(spec.task);
    json grid = json::object();
    if (!spec.grid.beta.empty()) grid["beta"] = spec.grid.beta;
    if (!spec.grid.theta.empty()) grid["theta"] = spec.grid.theta;
    if (!spec.grid.rho_t.empty()) grid["rho_t"] = spec.grid.rho_t;
    if (!spec.grid.sigma_in.empty()) grid["sigma_in"] = spec.grid.sigma_in;
    j["grid"] = grid;
    if (spec.experiment == ExperimentKind::CompareModes) {
        json bg = json::object();
        if (!spec.baseline_grid.beta.empty()) bg["beta"] = spec.baseline_grid.beta;
        if (!spec.baseline_grid.theta.empty()) bg["theta"] = spec.baseline_grid.theta;
        j["baseline_grid"] = bg;
    }
    j["n_seeds"] = spec.n_seeds;
    j["master_seed"] = spec.master_seed;
    json modes = json::array();
    for (RunMode m : spec.modes) modes.push_back(mode_name(m));
    j["modes"] = modes;
    j["reservoir"] = {
        {"n_neurons", spec.reservoir.n_neurons},
        {"excit_fraction", spec.reservoir.excit_fraction},
        {"mean_degree", spec.reservoir.mean_degree},
        {"mu_e", spec.reservoir.mu_e},
        {"sigma_e", spec.reservoir.sigma_e},
        {"beta", spec.reservoir.beta},
        {"sigma_i", spec.reservoir.sigma_i},
        {"alpha", spec.reservoir.alpha},
        {"theta", spec.reservoir.theta},
        {"steepness", spec.reservoir.steepness},
        {"leakage", spec.reservoir.leakage},
        {"input_fraction", spec.reservoir.input_fraction},
        {"input_spread", spec.reservoir.input_spread},
        {"strength_ratio", spec.reservoir.strength_ratio},
        {"balance_mode", spec.reservoir.balance_mode == BalanceMode::LinkStrength
                             ? "link_strength"
                             : "inhib_fraction"},
        {"dale", spec.reservoir.dale == DalePolicy::Respect ? "respect" : "shuffled"},
    };
    j["adaptation"] = {
        {"delta", spec.adaptation.delta},
        {"n_steps", spec.adaptation.n_steps},
        {"eval_every", spec.adaptation.eval_every},
        {"record_every", spec.adaptation.record_every},
    };
    j["split"] = {
        {"washout", spec.split.washout},
        {"train", spec.split.train_len},
        {"test", spec.split.test_len},
    };
    j["targets"] = {
        {"kind", spec.targets.kind == TargetMode::Homogeneous ? "homogeneous" : "heterogeneous"},
        {"rho_t", spec.targets.rho_t},
        {"a", spec.targets.a},
        {"b", spec.targets.b},
    };
    j["ridge_eta"] = spec.ridge_eta;
    j["eval_pre"] = spec.eval_pre;
    j["export_diagnostics"] = spec.export_diagnostics;
    j["write_traces"] = spec.write_traces;
    j["workers"] = spec.workers;
    j["output_path"] = spec.output_path;
    return j.dump(2);
}

} // namespace eirc
