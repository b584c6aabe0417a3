#pragma once

#include <optional>
#include <string>
#include <vector>

#include "infodesign/baselines.hpp"
#include "infodesign/harness.hpp"

namespace infodesign {

/// Shortest text that parses back to the same double ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);
/// Inverse of format_double. Throws Error(Io) on malformed text.
double parse_double(const std::string& text);

/**
 * Trajectory CSV: header `t,x1..xn,u1..um,designed`, one row per state sample.
 * The final row has no input, so its u columns read "nan". t = i * dt.
 */
void write_trajectory(const std::string& path, const Trajectory& traj, const std::vector<bool>& designed = {});
Trajectory read_trajectory(const std::string& path, std::vector<bool>* designed = nullptr);

/// Per-epoch metrics of every run; header only for an empty list.
void write_epoch_logs(const std::string& path, const std::vector<ExperimentRun>& runs);
/// Planning wallclock per epoch. Kept apart because it differs between repeated runs.
void write_timing(const std::string& path, const std::vector<ExperimentRun>& runs);
void write_summary(const std::string& path, const std::vector<BenchmarkRow>& rows);
void write_summary_timing(const std::string& path, const std::vector<BenchmarkRow>& rows);

void write_plan(const std::string& path, const PlanResult& plan);
void write_signal(const std::string& path, const Signal& signal, double dt);
void write_signal_scores(const std::string& path, const SignalScore& score);

/// Identified model in planning coordinates, enough to plan without the raw data.
struct StoredModel {
    int format_version = 1;
    bool reduced = false;
    double sigma = 0.0;
    double dt = 1.0;
    Matrix A;       //!< d x d (full or reduced)
    Matrix B;       //!< d x m
    Matrix Gamma;   //!< covariance factor in planning coordinates
    Matrix Z_past;  //!< (d + m) x k
    Vector x_last;  //!< d, most recent state
    Vector u_last;  //!< m, most recent input
    // DMDc factors, reduced models only
    Matrix U_hat;
    Matrix U_tilde_1;
    Matrix U_tilde_2;
    Vector Sigma_tilde;
    Index p = 0;
    Index r = 0;
    Index n_full = 0;

    [[nodiscard]] Index d() const { return A.rows(); }
    [[nodiscard]] Index m() const { return B.cols(); }
    [[nodiscard]] Index k() const { return Z_past.cols(); }
};

struct IdentifyOptions {
    std::optional<double> sigma;  //!< unset: residual estimate
    bool dmdc = false;
    double energy = 0.99;
};

StoredModel identify_model(const Trajectory& traj, const IdentifyOptions& opts = {});
double stored_trace_gamma(const StoredModel& model);
double stored_rmse(const StoredModel& model);

void save_model(const std::string& path, const StoredModel& model);
/// Throws Error(Io) for unreadable files and Error(Config) for malformed content.
StoredModel load_model(const std::string& path);

/// Planning problem from a stored model with box, slew, state and horizon settings applied.
PlanProblem plan_problem_from_model(const StoredModel& model, const ExperimentSettings& settings);

} // namespace infodesign
