#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "infodesign/baselines.hpp"
#include "infodesign/core_model.hpp"
#include "infodesign/planner.hpp"

namespace infodesign {

enum class PlantKind { Lti, LtiHighDim };

/// Ground-truth plant x_{t+1} = A x_t + B u_t + v_t, v_t ~ N(0, sigma^2 I).
struct Plant {
    PlantKind kind = PlantKind::Lti;
    Matrix A_true;
    Matrix B_true;
    double sigma_true = 0.0;
    Vector x0;
    std::uint64_t seed = 0;
    Index latent_rank = 0;  //!< rank of A_true for LtiHighDim, else n

    [[nodiscard]] Index n() const { return A_true.rows(); }
    [[nodiscard]] Index m() const { return B_true.cols(); }
    [[nodiscard]] Matrix theta() const;
};

/// Random plant with A scaled to the given spectral radius; x0 = 0.
Plant make_lti_plant(Index n, Index m, double sigma, std::uint64_t seed, double spectral_radius = 0.95);

/// A = Q A_z Q^T, B = Q B_z with Q an n x latent_rank orthonormal map and a stable latent system.
Plant make_highdim_plant(Index n, Index latent_rank, Index m, double sigma, std::uint64_t seed,
                         double spectral_radius = 0.95);

/// Stateful plant stepping with a seeded noise stream.
class PlantSimulator {
public:
    explicit PlantSimulator(const Plant& plant);
    PlantSimulator(const Plant& plant, std::uint64_t noise_seed);

    [[nodiscard]] const Vector& state() const { return x_; }
    const Vector& step(const Vector& u);

private:
    Plant plant_;
    Vector x_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

/// Run the plant from x0 under `inputs` (length must equal steps), noise from plant.seed.
Trajectory simulate_plant(const Plant& plant, const std::vector<Vector>& inputs, int steps, double dt = 1.0);

enum class Method { Sdp, Lp, Multisine, Random, Prbs };

const char* to_string(Method m);
/// Throws Error(InvalidInput) for an unknown name.
Method parse_method(const std::string& name);

struct ExperimentSettings {
    int epochs = 3;
    int horizon = 10;
    double dt = 0.1;
    Vector u_lo;
    Vector u_hi;
    std::optional<Vector> du_max;  //!< unset: derived from the multisine
    std::optional<Vector> x_lo;
    std::optional<Vector> x_hi;
    std::optional<Vector> xr_lo;   //!< reduced-coordinate bounds for the DMDc branch
    std::optional<Vector> xr_hi;
    std::optional<Vector> terminal_target;
    double beta = 1.0;
    std::optional<double> sigma;   //!< assumed noise scale; unset uses the plant's
    Index dmdc_cutoff = 50;        //!< DMDc branch when n exceeds this
    double energy = 0.99;
    int ccp_max_iter = 20;
    double ccp_tol = 1e-4;
    int initial_excitation = 0;    //!< 0 selects 3 (n + m)
    MultisineOptions multisine;
    int prbs_hold = 1;
    int prbs_bits = 7;
    std::uint64_t seed = 0;

    void validate(Index n, Index m) const;
};

struct EpochLog {
    int epoch = 0;
    Index k = 0;
    double trace_gamma = 0.0;
    double rmse_predicted = 0.0;
    double rmse_true = 0.0;
    double plan_wallclock = 0.0;  //!< seconds spent in the planning/generation call
    std::string solver_status;    //!< "initial", "generated" or a SolverStatus name
    double constraint_margin_min = 0.0;
    int ccp_iterations = 0;
    bool reduced = false;
};

struct ExperimentRun {
    Method method = Method::Random;
    std::uint64_t seed = 0;
    std::vector<EpochLog> logs;
    Trajectory trajectory;
    std::vector<bool> designed;  //!< per input: false for initial excitation
    Vector du_max;               //!< slew bound actually enforced
};

/// Splitmix64 mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Slew bound implied by the settings (explicit, or derived from the multisine).
Vector resolve_slew(const ExperimentSettings& settings, Index m);

/// Multisine options with an automatic band (zero band edges) resolved against horizon and dt.
MultisineOptions resolve_multisine(const ExperimentSettings& settings);

/**
 * Model-independent input sequence of `settings.horizon` steps for a baseline method.
 * The multisine ignores `seed` and `center`: its phases come from settings.seed so
 * that the derived slew bound describes exactly this signal.
 */
Signal baseline_signal(Method method, const ExperimentSettings& settings, const Vector& du_max, std::uint64_t seed,
                       const std::optional<Vector>& center = std::nullopt);

/// Multi-epoch identify / plan / apply loop.
ExperimentRun run_experiment(const Plant& plant, Method method, const ExperimentSettings& settings);

struct BenchmarkConfig {
    Plant plant;
    std::vector<Method> methods;
    int seeds = 5;
    std::uint64_t master_seed = 0;
    ExperimentSettings settings;
};

struct BenchmarkRow {
    Method method = Method::Random;
    int runs = 0;
    double trace_gamma_median = 0.0;
    double trace_gamma_iqr = 0.0;
    double rmse_true_median = 0.0;
    double rmse_true_iqr = 0.0;
    double rmse_predicted_median = 0.0;
    double wallclock_median = 0.0;  //!< mean planning seconds per epoch, median over runs
    double wallclock_iqr = 0.0;
};

struct BenchmarkResult {
    std::vector<BenchmarkRow> rows;
    std::vector<ExperimentRun> runs;  //!< method-major, seed-minor
};

/// Seed i uses derive_seed(master_seed, i) for every method, so methods share noise and initial data.
BenchmarkResult benchmark(const BenchmarkConfig& config);

double median(std::vector<double> v);
double interquartile_range(std::vector<double> v);

} // namespace infodesign
