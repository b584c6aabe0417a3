// Command-line front end over the C API.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infodesign/infodesign.h"

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    bool verbose = false;
    bool timing = false;
};

int exit_code(ifd_status s) {
    switch (s) {
        case IFD_OK: return 0;
        case IFD_ERR_IO: return 1;
        case IFD_ERR_CONFIG:
        case IFD_ERR_INVALID_ARGUMENT: return 2;
        case IFD_ERR_INFEASIBLE: return 4;
        case IFD_ERR_NUMERICAL:
        case IFD_ERR_INTERNAL: return 3;
    }
    return 3;
}

int report(ifd_status s, const char* what) {
    if (s != IFD_OK) std::fprintf(stderr, "infodesign: %s failed (%s): %s\n", what, ifd_status_name(s), ifd_last_error());
    return exit_code(s);
}

// Owns a C handle for the duration of a command.
template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(p); }
};

using Config = Handle<ifd_config, ifd_config_free>;
using Model = Handle<ifd_model, ifd_model_free>;
using Plan = Handle<ifd_plan, ifd_plan_free>;
using Traj = Handle<ifd_trajectory, ifd_trajectory_free>;

ifd_status load_config(const std::string& path, const Globals& g, Config& cfg) {
    ifd_status s = ifd_config_load(path.c_str(), &cfg.p);
    if (s != IFD_OK) return s;
    if (g.seed) s = ifd_config_set_seed(cfg.p, *g.seed);
    if (s == IFD_OK && !g.out.empty()) s = ifd_config_set_output_dir(cfg.p, g.out.c_str());
    return s;
}

void print_file(const std::string& path) {
    std::ifstream in(path);
    std::cout << in.rdbuf();
}

int cmd_identify(const Globals& g, const std::string& data, double sigma, bool dmdc, double energy) {
    Traj traj;
    if (ifd_status s = ifd_trajectory_load(data.c_str(), &traj.p); s != IFD_OK) return report(s, "loading data");
    Model model;
    if (ifd_status s = ifd_model_identify(traj.p, sigma, dmdc ? 1 : 0, energy, &model.p); s != IFD_OK) {
        return report(s, "identify");
    }
    ifd_model_info info{};
    ifd_model_info_get(model.p, &info);

    const std::string dir = g.out.empty() ? "out" : g.out;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        std::fprintf(stderr, "infodesign: cannot create '%s': %s\n", dir.c_str(), ec.message().c_str());
        return 1;
    }
    const std::string path = (std::filesystem::path(dir) / "model.json").string();
    if (ifd_status s = ifd_model_save(model.p, path.c_str()); s != IFD_OK) return report(s, "writing model");

    std::printf("Theta_hat: %" PRId64 " x %" PRId64 "\n", info.n, info.n + info.m);
    if (info.reduced) {
        std::printf("reduced: p = %" PRId64 ", r = %" PRId64 " (planning dimension %" PRId64 ")\n", info.p, info.r,
                    info.r + info.m);
    }
    std::printf("sigma: %.6g\ntr(Gamma): %.6g\nRMSE: %.6g\n", info.sigma, info.trace_gamma, info.rmse);
    if (g.verbose) std::printf("model written to %s\n", path.c_str());
    return 0;
}

int cmd_plan(const Globals& g, const std::string& model_path, const std::string& config_path,
             const std::string& method) {
    Model model;
    if (ifd_status s = ifd_model_load(model_path.c_str(), &model.p); s != IFD_OK) return report(s, "loading model");
    Config cfg;
    if (ifd_status s = load_config(config_path, g, cfg); s != IFD_OK) return report(s, "loading config");
    Plan plan;
    if (ifd_status s = ifd_plan_create(model.p, cfg.p, method.c_str(), &plan.p); s != IFD_OK) {
        return report(s, "plan");
    }
    const std::string dir = ifd_config_output_dir(cfg.p);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::string path = (std::filesystem::path(dir) / "plan.csv").string();
    if (ifd_status s = ifd_plan_write(plan.p, path.c_str()); s != IFD_OK) return report(s, "writing plan");

    ifd_plan_info info{};
    ifd_plan_info_get(plan.p, &info);
    std::printf("planned %" PRId64 " steps, tr(W^-1) = %.6g, %d CCP iterations%s\n", info.horizon, info.objective,
                info.ccp_iterations, info.status == 1 ? " (iteration limit)" : "");
    if (info.degenerate_direction) {
        std::fprintf(stderr, "warning: planned inputs excite a single direction; the estimate will be poor elsewhere\n");
    }
    if (g.verbose) std::printf("optimality residual %.3g, plan written to %s\n", info.optimality_residual, path.c_str());
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& config_path, const std::string& method) {
    Config cfg;
    if (ifd_status s = load_config(config_path, g, cfg); s != IFD_OK) return report(s, "loading config");
    ifd_run_info info{};
    if (ifd_status s = ifd_run_simulate(cfg.p, method.empty() ? nullptr : method.c_str(), g.timing ? 1 : 0, &info);
        s != IFD_OK) {
        return report(s, "simulate");
    }
    std::printf("%" PRId64 " epochs, final tr(Gamma) = %.6g, final true RMSE = %.6g\n", info.epochs,
                info.final_trace_gamma, info.final_rmse_true);
    if (g.verbose) std::printf("results in %s\n", ifd_config_output_dir(cfg.p));
    return 0;
}

int cmd_benchmark(const Globals& g, const std::string& config_path) {
    Config cfg;
    if (ifd_status s = load_config(config_path, g, cfg); s != IFD_OK) return report(s, "loading config");
    ifd_run_info info{};
    if (ifd_status s = ifd_run_benchmark(cfg.p, g.timing ? 1 : 0, &info); s != IFD_OK) return report(s, "benchmark");
    const std::string dir = ifd_config_output_dir(cfg.p);
    std::printf("%" PRId64 " runs\n", info.runs);
    print_file((std::filesystem::path(dir) / "summary.csv").string());
    if (g.timing) print_file((std::filesystem::path(dir) / "summary_timing.csv").string());
    return 0;
}

int cmd_signals(const Globals& g, const std::string& config_path, const std::string& method) {
    Config cfg;
    if (ifd_status s = load_config(config_path, g, cfg); s != IFD_OK) return report(s, "loading config");
    if (ifd_status s = ifd_run_signals(cfg.p, method.c_str()); s != IFD_OK) return report(s, "signals");
    const std::string dir = ifd_config_output_dir(cfg.p);
    print_file((std::filesystem::path(dir) / "signal_scores.csv").string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Informative input design for linear system identification"};
    app.set_version_flag("--version", std::string(ifd_version()));
    app.require_subcommand(1);

    Globals g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--out", g.out, "Output directory (overrides the config)");
    app.add_flag("--verbose,-v", g.verbose, "Extra diagnostics");
    app.add_flag("--timing", g.timing, "Also write planning wallclock files");
    app.fallthrough();

    std::string data, model_path, config_path, method;
    double sigma = 0.0;
    double energy = 0.99;
    bool dmdc = false;

    auto* identify = app.add_subcommand("identify", "Estimate a model from a trajectory CSV");
    identify->add_option("data", data, "Trajectory CSV (t,x1..xn,u1..um[,designed])")->required()->check(CLI::ExistingFile);
    identify->add_option("--sigma", sigma, "Noise scale; estimated from residuals when omitted")
        ->check(CLI::PositiveNumber);
    identify->add_flag("--dmdc", dmdc, "Reduce with DMDc");
    identify->add_option("--energy", energy, "Retained singular-value energy for DMDc")->check(CLI::Range(0.0, 1.0));

    auto* plan = app.add_subcommand("plan", "Plan informative inputs from a stored model");
    plan->add_option("model", model_path, "Model JSON written by identify")->required();
    plan->add_option("config", config_path, "Experiment config")->required();
    plan->add_option("--method", method, "sdp or lp")->check(CLI::IsMember({"sdp", "lp"}));

    auto* simulate = app.add_subcommand("simulate", "Run one method end to end on the configured plant");
    simulate->add_option("config", config_path, "Experiment config")->required();
    simulate->add_option("--method", method, "Method (default: first configured)")
        ->check(CLI::IsMember({"sdp", "lp", "multisine", "random", "prbs"}));

    auto* bench = app.add_subcommand("benchmark", "Compare all configured methods over seeds");
    bench->add_option("config", config_path, "Experiment config")->required();

    auto* signals = app.add_subcommand("signals", "Emit a baseline signal and its scores");
    signals->add_option("config", config_path, "Experiment config")->required();
    signals->add_option("--method", method, "Baseline")->required()->check(CLI::IsMember({"prbs", "multisine", "random"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*seed_opt) g.seed = seed;

    if (*identify) return cmd_identify(g, data, sigma, dmdc, energy);
    if (*plan) return cmd_plan(g, model_path, config_path, method);
    if (*simulate) return cmd_simulate(g, config_path, method);
    if (*bench) return cmd_benchmark(g, config_path);
    return cmd_signals(g, config_path, method);
}
