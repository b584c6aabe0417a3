#include "infodesign/infodesign.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "infodesign/config.hpp"
#include "infodesign/io.hpp"

using namespace infodesign;

struct ifd_trajectory {
    Trajectory traj;
};

struct ifd_model {
    StoredModel model;
};

struct ifd_config {
    ExperimentConfig config;
};

struct ifd_plan {
    PlanResult result;
    Index d = 0;
    Index m = 0;
};

namespace {

thread_local std::string g_last_error;

ifd_status fail(ifd_status status, const std::string& what) {
    g_last_error = what;
    return status;
}

ifd_status status_of(const Error& e) {
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e); ce && ce->sub_kind() == ConfigErrorKind::MissingFile) {
        return IFD_ERR_IO;
    }
    switch (e.kind()) {
        case ErrorKind::Io: return IFD_ERR_IO;
        case ErrorKind::Config:
        case ErrorKind::Allocation:
        case ErrorKind::Slew: return IFD_ERR_CONFIG;
        case ErrorKind::InvalidInput: return IFD_ERR_INVALID_ARGUMENT;
        case ErrorKind::RankDeficient:
        case ErrorKind::Truncation:
        case ErrorKind::Size:
        case ErrorKind::Numerical: return IFD_ERR_NUMERICAL;
    }
    return IFD_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes and the thread's last error.
template <typename Fn>
ifd_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const Error& e) {
        return fail(status_of(e), e.what());
    } catch (const std::bad_alloc&) {
        return fail(IFD_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(IFD_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(IFD_ERR_INTERNAL, "unknown failure");
    }
}

#define IFD_REQUIRE(cond, msg)                                      \
    do {                                                            \
        if (!(cond)) return fail(IFD_ERR_INVALID_ARGUMENT, (msg)); \
    } while (0)

Method choose_method(const ExperimentConfig& c, const char* method) {
    if (method && *method) return parse_method(method);
    return c.methods.front();
}

void prepare_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

void fill_run_info(const std::vector<ExperimentRun>& runs, ifd_run_info* info) {
    if (!info) return;
    info->runs = static_cast<int64_t>(runs.size());
    info->epochs = runs.empty() ? 0 : static_cast<int64_t>(runs.back().logs.size()) - 1;
    info->final_trace_gamma = runs.empty() ? 0.0 : runs.back().logs.back().trace_gamma;
    info->final_rmse_true = runs.empty() ? 0.0 : runs.back().logs.back().rmse_true;
}

} // namespace

extern "C" {

const char* ifd_version(void) { return "0.1.0"; }

const char* ifd_last_error(void) { return g_last_error.c_str(); }

const char* ifd_status_name(ifd_status status) {
    switch (status) {
        case IFD_OK: return "ok";
        case IFD_ERR_IO: return "io error";
        case IFD_ERR_CONFIG: return "configuration error";
        case IFD_ERR_NUMERICAL: return "numerical failure";
        case IFD_ERR_INFEASIBLE: return "infeasible";
        case IFD_ERR_INVALID_ARGUMENT: return "invalid argument";
        case IFD_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

ifd_status ifd_trajectory_load(const char* path, ifd_trajectory** out) {
    IFD_REQUIRE(path && out, "ifd_trajectory_load: null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new ifd_trajectory{read_trajectory(path)};
        return IFD_OK;
    });
}

ifd_status ifd_trajectory_dims(const ifd_trajectory* traj, int64_t* n, int64_t* m, int64_t* steps) {
    IFD_REQUIRE(traj, "ifd_trajectory_dims: null trajectory");
    if (n) *n = traj->traj.state_dim();
    if (m) *m = traj->traj.input_dim();
    if (steps) *steps = traj->traj.steps();
    return IFD_OK;
}

void ifd_trajectory_free(ifd_trajectory* traj) { delete traj; }

ifd_status ifd_model_identify(const ifd_trajectory* traj, double sigma, int dmdc, double energy, ifd_model** out) {
    IFD_REQUIRE(traj && out, "ifd_model_identify: null argument");
    *out = nullptr;
    return guarded([&] {
        IdentifyOptions opts;
        if (sigma > 0.0) opts.sigma = sigma;
        opts.dmdc = dmdc != 0;
        opts.energy = energy;
        *out = new ifd_model{identify_model(traj->traj, opts)};
        return IFD_OK;
    });
}

ifd_status ifd_model_load(const char* path, ifd_model** out) {
    IFD_REQUIRE(path && out, "ifd_model_load: null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new ifd_model{load_model(path)};
        return IFD_OK;
    });
}

ifd_status ifd_model_save(const ifd_model* model, const char* path) {
    IFD_REQUIRE(model && path, "ifd_model_save: null argument");
    return guarded([&] {
        save_model(path, model->model);
        return IFD_OK;
    });
}

ifd_status ifd_model_info_get(const ifd_model* model, ifd_model_info* info) {
    IFD_REQUIRE(model && info, "ifd_model_info_get: null argument");
    return guarded([&] {
        const StoredModel& s = model->model;
        info->n = s.n_full;
        info->m = s.m();
        info->d = s.d();
        info->k = s.k();
        info->reduced = s.reduced ? 1 : 0;
        info->p = s.p;
        info->r = s.r;
        info->sigma = s.sigma;
        info->trace_gamma = stored_trace_gamma(s);
        info->rmse = stored_rmse(s);
        return IFD_OK;
    });
}

void ifd_model_free(ifd_model* model) { delete model; }

ifd_status ifd_config_load(const char* path, ifd_config** out) {
    IFD_REQUIRE(path && out, "ifd_config_load: null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new ifd_config{parse_config(path)};
        return IFD_OK;
    });
}

ifd_status ifd_config_save(const ifd_config* config, const char* path) {
    IFD_REQUIRE(config && path, "ifd_config_save: null argument");
    return guarded([&] {
        save_config(config->config, path);
        return IFD_OK;
    });
}

ifd_status ifd_config_set_seed(ifd_config* config, uint64_t seed) {
    IFD_REQUIRE(config, "ifd_config_set_seed: null config");
    config->config.settings.seed = seed;
    return IFD_OK;
}

ifd_status ifd_config_set_output_dir(ifd_config* config, const char* dir) {
    IFD_REQUIRE(config && dir && *dir, "ifd_config_set_output_dir: empty directory");
    return guarded([&] {
        config->config.output_dir = dir;
        return IFD_OK;
    });
}

const char* ifd_config_output_dir(const ifd_config* config) {
    return config ? config->config.output_dir.c_str() : "";
}

void ifd_config_free(ifd_config* config) { delete config; }

ifd_status ifd_plan_create(const ifd_model* model, const ifd_config* config, const char* method, ifd_plan** out) {
    IFD_REQUIRE(model && config && out, "ifd_plan_create: null argument");
    *out = nullptr;
    return guarded([&] {
        CcpOptions opts;
        if (method && *method) {
            const Method m = parse_method(method);
            if (m != Method::Sdp && m != Method::Lp) {
                return fail(IFD_ERR_INVALID_ARGUMENT, "plan method must be 'sdp' or 'lp'");
            }
            opts.objective = m == Method::Sdp ? PlanObjective::Sdp : PlanObjective::Lp;
        }
        const ExperimentSettings& s = config->config.settings;
        opts.max_iter = s.ccp_max_iter;
        opts.tol = s.ccp_tol;
        const PlanProblem problem = plan_problem_from_model(model->model, s);
        PlanResult result = ccp(problem, opts);
        if (result.status == SolverStatus::Infeasible) {
            return fail(IFD_ERR_INFEASIBLE, "no input sequence satisfies the constraints: " + result.message);
        }
        *out = new ifd_plan{std::move(result), problem.d(), problem.m()};
        return IFD_OK;
    });
}

ifd_status ifd_plan_info_get(const ifd_plan* plan, ifd_plan_info* info) {
    IFD_REQUIRE(plan && info, "ifd_plan_info_get: null argument");
    const PlanResult& r = plan->result;
    info->horizon = static_cast<int64_t>(r.inputs.size());
    info->m = plan->m;
    info->d = plan->d;
    info->status = static_cast<int>(r.status);
    info->ccp_iterations = r.ccp_iterations;
    info->degenerate_direction = r.degenerate_direction ? 1 : 0;
    info->objective = r.objective_true;
    info->optimality_residual = r.optimality_residual;
    return IFD_OK;
}

ifd_status ifd_plan_inputs(const ifd_plan* plan, double* buffer, size_t length) {
    IFD_REQUIRE(plan && buffer, "ifd_plan_inputs: null argument");
    const auto m = static_cast<size_t>(plan->m);
    IFD_REQUIRE(length >= plan->result.inputs.size() * m, "ifd_plan_inputs: buffer too small");
    for (size_t t = 0; t < plan->result.inputs.size(); ++t) {
        std::memcpy(buffer + t * m, plan->result.inputs[t].data(), m * sizeof(double));
    }
    return IFD_OK;
}

ifd_status ifd_plan_write(const ifd_plan* plan, const char* path) {
    IFD_REQUIRE(plan && path, "ifd_plan_write: null argument");
    return guarded([&] {
        write_plan(path, plan->result);
        return IFD_OK;
    });
}

void ifd_plan_free(ifd_plan* plan) { delete plan; }

ifd_status ifd_run_simulate(const ifd_config* config, const char* method, int timing, ifd_run_info* info) {
    IFD_REQUIRE(config, "ifd_run_simulate: null config");
    return guarded([&] {
        const ExperimentConfig& c = config->config;
        const Method m = choose_method(c, method);
        const std::vector<ExperimentRun> runs{run_experiment(c.make_plant(), m, c.settings)};
        prepare_dir(c.output_dir);
        write_trajectory(join(c.output_dir, "trajectory.csv"), runs.front().trajectory, runs.front().designed);
        write_epoch_logs(join(c.output_dir, "epochs.csv"), runs);
        if (timing) write_timing(join(c.output_dir, "timing.csv"), runs);
        fill_run_info(runs, info);
        return IFD_OK;
    });
}

ifd_status ifd_run_benchmark(const ifd_config* config, int timing, ifd_run_info* info) {
    IFD_REQUIRE(config, "ifd_run_benchmark: null config");
    return guarded([&] {
        const ExperimentConfig& c = config->config;
        BenchmarkConfig bc;
        bc.plant = c.make_plant();
        bc.methods = c.methods;
        bc.seeds = c.seeds;
        bc.master_seed = c.settings.seed;
        bc.settings = c.settings;
        const BenchmarkResult res = benchmark(bc);
        prepare_dir(c.output_dir);
        write_summary(join(c.output_dir, "summary.csv"), res.rows);
        write_epoch_logs(join(c.output_dir, "epochs.csv"), res.runs);
        const std::string traj_dir = join(c.output_dir, "trajectories");
        prepare_dir(traj_dir);
        for (std::size_t i = 0; i < res.runs.size(); ++i) {
            const ExperimentRun& run = res.runs[i];
            const std::string name = std::string(to_string(run.method)) + "_" +
                                     std::to_string(i % static_cast<std::size_t>(c.seeds)) + ".csv";
            write_trajectory(join(traj_dir, name), run.trajectory, run.designed);
        }
        if (timing) {
            write_timing(join(c.output_dir, "timing.csv"), res.runs);
            write_summary_timing(join(c.output_dir, "summary_timing.csv"), res.rows);
        }
        fill_run_info(res.runs, info);
        return IFD_OK;
    });
}

ifd_status ifd_run_signals(const ifd_config* config, const char* method) {
    IFD_REQUIRE(config, "ifd_run_signals: null config");
    return guarded([&] {
        const ExperimentConfig& c = config->config;
        const Method m = choose_method(c, method);
        if (m == Method::Sdp || m == Method::Lp) {
            return fail(IFD_ERR_INVALID_ARGUMENT, "signals needs a baseline method: prbs, multisine or random");
        }
        const ExperimentSettings& s = c.settings;
        s.validate(c.plant.n, c.plant.m);
        const Vector du_max = resolve_slew(s, c.plant.m);
        const Signal signal = baseline_signal(m, s, du_max, s.seed);
        prepare_dir(c.output_dir);
        write_signal(join(c.output_dir, "signals.csv"), signal, s.dt);
        write_signal_scores(join(c.output_dir, "signal_scores.csv"), score_signal(signal));
        return IFD_OK;
    });
}

} // extern "C"
