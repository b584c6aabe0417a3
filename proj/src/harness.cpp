#include "infodesign/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "infodesign/dmdc.hpp"

namespace infodesign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = g(rng);
    return M;
}

Matrix scale_to_radius(Matrix A, double radius) {
    const double rho = Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) A *= radius / rho;
    return A;
}

} // namespace

MultisineOptions resolve_multisine(const ExperimentSettings& s) {
    MultisineOptions o = s.multisine;
    if (o.band_hi_hz <= 0.0) {
        o.band_lo_hz = 1.0 / (s.horizon * s.dt);
        o.band_hi_hz = 0.8 * 0.5 / s.dt;
        // short horizons hold few harmonics; shrink the per-channel count to fit
        const double f0 = 1.0 / (s.horizon * s.dt);
        const int pool = std::min(static_cast<int>(std::floor(o.band_hi_hz / f0 + 1e-9)), (s.horizon - 1) / 2);
        const int per_channel = std::max(1, pool / static_cast<int>(std::max<Index>(1, s.u_lo.size())));
        o.num_components = std::min(o.num_components, per_channel);
    }
    return o;
}

namespace {

SignalSpec signal_spec(const ExperimentSettings& s, const Vector& du_max, int horizon, std::uint64_t seed) {
    SignalSpec spec;
    spec.horizon = horizon;
    spec.dt = s.dt;
    spec.u_lo = s.u_lo;
    spec.u_hi = s.u_hi;
    spec.du_max = du_max;
    spec.seed = seed;
    return spec;
}

// Current model, identified on the full or DMDc branch.
struct Identified {
    bool reduced = false;
    ModelEstimate full;
    ReducedModel red;
    Matrix gamma;
    Index d = 0;
};

Identified identify(const DataMatrices& data, const ExperimentSettings& s, double sigma) {
    Identified id;
    id.reduced = data.n() > s.dmdc_cutoff;
    if (!id.reduced) {
        id.full = estimate_theta(data, sigma);
        id.gamma = id.full.Gamma;
        id.d = data.n();
    } else {
        const auto [p, r] = choose_ranks(data, s.energy);
        id.red = reduce(data, p, r);
        id.gamma = reduced_gamma(id.red, data, sigma);
        id.d = id.red.r;
    }
    return id;
}

EpochLog make_log(int epoch, const DataMatrices& data, const Identified& id, const Plant& plant) {
    EpochLog log;
    log.epoch = epoch;
    log.k = data.k();
    log.reduced = id.reduced;
    log.trace_gamma = id.gamma.trace();
    log.rmse_predicted = rmse(id.gamma, id.d, data.m());
    Matrix theta(plant.n(), plant.n() + plant.m());
    if (id.reduced) {
        const auto [A, B] = lifted_operators(id.red);
        theta << A, B;
    } else {
        theta = id.full.theta();
    }
    log.rmse_true = (theta - plant.theta()).norm() / std::sqrt(static_cast<double>(theta.size()));
    return log;
}

double input_margin(const std::vector<Vector>& inputs, const Vector& u_prev, const ExperimentSettings& s,
                    const Vector& du_max) {
    double margin = kInf;
    Vector last = u_prev;
    for (const Vector& u : inputs) {
        margin = std::min(margin, std::min((u - s.u_lo).minCoeff(), (s.u_hi - u).minCoeff()));
        for (Index j = 0; j < u.size(); ++j) {
            if (std::isfinite(du_max(j))) margin = std::min(margin, du_max(j) - std::abs(u(j) - last(j)));
        }
        last = u;
    }
    return margin;
}

double state_margin(const std::vector<Vector>& states, const ExperimentSettings& s) {
    double margin = kInf;
    for (const Vector& x : states) {
        if (s.x_lo) margin = std::min(margin, (x - *s.x_lo).minCoeff());
        if (s.x_hi) margin = std::min(margin, (*s.x_hi - x).minCoeff());
    }
    return margin;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

Matrix Plant::theta() const {
    Matrix T(n(), n() + m());
    T << A_true, B_true;
    return T;
}

Plant make_lti_plant(Index n, Index m, double sigma, std::uint64_t seed, double spectral_radius) {
    if (n < 1 || m < 0) throw Error(ErrorKind::InvalidInput, "plant dimensions must satisfy n >= 1, m >= 0");
    std::mt19937_64 rng(seed);
    Plant p;
    p.kind = PlantKind::Lti;
    p.A_true = scale_to_radius(gaussian_matrix(n, n, rng), spectral_radius);
    p.B_true = gaussian_matrix(n, m, rng);
    p.sigma_true = sigma;
    p.x0 = Vector::Zero(n);
    p.seed = seed;
    p.latent_rank = n;
    return p;
}

Plant make_highdim_plant(Index n, Index latent_rank, Index m, double sigma, std::uint64_t seed,
                         double spectral_radius) {
    if (latent_rank < 1 || latent_rank > n) throw Error(ErrorKind::InvalidInput, "latent rank must lie in [1, n]");
    std::mt19937_64 rng(seed);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gaussian_matrix(n, latent_rank, rng)).householderQ() *
                     Matrix::Identity(n, latent_rank);
    const Matrix Az = scale_to_radius(gaussian_matrix(latent_rank, latent_rank, rng), spectral_radius);
    const Matrix Bz = gaussian_matrix(latent_rank, m, rng);
    Plant p;
    p.kind = PlantKind::LtiHighDim;
    p.A_true = Q * Az * Q.transpose();
    p.B_true = Q * Bz;
    p.sigma_true = sigma;
    p.x0 = Vector::Zero(n);
    p.seed = seed;
    p.latent_rank = latent_rank;
    return p;
}

PlantSimulator::PlantSimulator(const Plant& plant) : PlantSimulator(plant, plant.seed) {}

PlantSimulator::PlantSimulator(const Plant& plant, std::uint64_t noise_seed)
    : plant_(plant), x_(plant.x0), rng_(noise_seed) {}

const Vector& PlantSimulator::step(const Vector& u) {
    if (u.size() != plant_.m()) throw Error(ErrorKind::InvalidInput, "plant input has wrong dimension");
    Vector v(plant_.n());
    for (Index i = 0; i < v.size(); ++i) v(i) = gauss_(rng_);
    x_ = plant_.A_true * x_ + plant_.B_true * u + plant_.sigma_true * v;
    return x_;
}

Trajectory simulate_plant(const Plant& plant, const std::vector<Vector>& inputs, int steps, double dt) {
    if (steps < 0 || static_cast<std::size_t>(steps) != inputs.size()) {
        throw Error(ErrorKind::InvalidInput, "simulate_plant: inputs length must equal steps");
    }
    PlantSimulator sim(plant);
    Trajectory traj;
    traj.dt = dt;
    traj.states.push_back(sim.state());
    for (const Vector& u : inputs) {
        traj.states.push_back(sim.step(u));
        traj.inputs.push_back(u);
    }
    return traj;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::Sdp: return "sdp";
        case Method::Lp: return "lp";
        case Method::Multisine: return "multisine";
        case Method::Random: return "random";
        case Method::Prbs: return "prbs";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::Sdp, Method::Lp, Method::Multisine, Method::Random, Method::Prbs}) {
        if (name == to_string(m)) return m;
    }
    throw Error(ErrorKind::InvalidInput, "unknown method '" + name + "'");
}

void ExperimentSettings::validate(Index n, Index m) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidInput, "experiment settings: " + msg); };
    if (epochs < 0) fail("epochs must be non-negative");
    if (horizon < 1) fail("horizon must be at least 1");
    if (!(dt > 0.0)) fail("dt must be positive");
    if (u_lo.size() != m || u_hi.size() != m) fail("input box must have dimension m");
    if (du_max && du_max->size() != m) fail("du_max must have dimension m");
    if ((x_lo && x_lo->size() != n) || (x_hi && x_hi->size() != n)) fail("state box must have dimension n");
    if (terminal_target && terminal_target->size() != n) fail("terminal target must have dimension n");
    if (!(beta >= 0.0)) fail("beta must be non-negative");
    if (sigma && !(*sigma > 0.0)) fail("sigma must be positive");
    if (!(energy > 0.0 && energy <= 1.0)) fail("energy must lie in (0, 1]");
    if (initial_excitation != 0 && initial_excitation < n + m) fail("initial excitation must provide k >= n + m samples");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Vector resolve_slew(const ExperimentSettings& s, Index m) {
    if (s.du_max) return *s.du_max;
    const SignalSpec spec = signal_spec(s, Vector::Constant(m, kInf), s.horizon, derive_seed(s.seed, 7));
    return derive_slew_from_multisine(spec, resolve_multisine(s));
}

Signal baseline_signal(Method method, const ExperimentSettings& s, const Vector& du_max, std::uint64_t seed,
                       const std::optional<Vector>& center) {
    switch (method) {
        case Method::Multisine:
            return multisine(signal_spec(s, du_max, s.horizon, derive_seed(s.seed, 7)), resolve_multisine(s)).samples;
        case Method::Random:
        case Method::Prbs: {
            SignalSpec spec = signal_spec(s, du_max, s.horizon, seed);
            spec.center = center;
            return method == Method::Random ? random_inputs(spec) : prbs(spec, s.prbs_hold, s.prbs_bits);
        }
        default:
            throw Error(ErrorKind::InvalidInput, std::string("'") + to_string(method) + "' is not a baseline method");
    }
}

ExperimentRun run_experiment(const Plant& plant, Method method, const ExperimentSettings& s) {
    const Index n = plant.n();
    const Index m = plant.m();
    s.validate(n, m);
    const double sigma = s.sigma ? *s.sigma : plant.sigma_true;
    if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidInput, "experiment needs a positive noise scale");

    ExperimentRun run;
    run.method = method;
    run.seed = s.seed;
    run.du_max = resolve_slew(s, m);
    run.trajectory.dt = s.dt;

    PlantSimulator sim(plant, derive_seed(s.seed, 0));
    auto apply = [&](const std::vector<Vector>& inputs, bool designed) {
        if (run.trajectory.states.empty()) run.trajectory.states.push_back(sim.state());
        for (const Vector& u : inputs) {
            run.trajectory.inputs.push_back(u);
            run.trajectory.states.push_back(sim.step(u));
            run.designed.push_back(designed);
        }
    };

    const int k0 = s.initial_excitation > 0 ? s.initial_excitation : static_cast<int>(3 * (n + m));
    apply(random_inputs(signal_spec(s, run.du_max, k0, derive_seed(s.seed, 1))), false);

    DataMatrices data = assemble_data(run.trajectory);
    Identified id = identify(data, s, sigma);
    {
        EpochLog log = make_log(0, data, id, plant);
        log.solver_status = "initial";
        log.constraint_margin_min = kNaN;
        run.logs.push_back(log);
    }

    for (int epoch = 1; epoch <= s.epochs; ++epoch) {
        const Vector u_prev = run.trajectory.inputs.back();
        std::vector<Vector> inputs;
        std::string status = "generated";
        int ccp_iters = 0;
        const auto t0 = std::chrono::steady_clock::now();

        if (method == Method::Sdp || method == Method::Lp) {
            PlanProblem prob = id.reduced ? plan_problem_from_reduced(id.red, data, sigma)
                                          : plan_problem_from_estimate(id.full, data);
            prob.sigma = sigma;
            prob.horizon = s.horizon;
            prob.u_lo = s.u_lo;
            prob.u_hi = s.u_hi;
            prob.du_max = run.du_max;
            prob.beta = s.beta;
            if (id.reduced) {
                prob.x_lo = s.xr_lo;
                prob.x_hi = s.xr_hi;
            } else {
                prob.x_lo = s.x_lo;
                prob.x_hi = s.x_hi;
                prob.terminal_target = s.terminal_target;
            }
            CcpOptions opts;
            opts.objective = method == Method::Sdp ? PlanObjective::Sdp : PlanObjective::Lp;
            opts.max_iter = s.ccp_max_iter;
            opts.tol = s.ccp_tol;
            const PlanResult res = ccp(prob, opts);
            status = to_string(res.status);
            ccp_iters = res.ccp_iterations;
            if (res.status == SolverStatus::Infeasible) {
                inputs = unstack_inputs(hold_last_input(prob), m);
            } else {
                inputs = res.inputs;
            }
        } else {
            const std::uint64_t gen_seed = derive_seed(s.seed, 100 + static_cast<std::uint64_t>(epoch));
            inputs = baseline_signal(method, s, run.du_max, gen_seed, u_prev.cwiseMax(s.u_lo).cwiseMin(s.u_hi));
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const std::size_t before = run.trajectory.states.size();
        apply(inputs, true);
        const std::vector<Vector> realized(run.trajectory.states.begin() + static_cast<std::ptrdiff_t>(before),
                                           run.trajectory.states.end());
        data = assemble_data(run.trajectory);

        id = identify(data, s, sigma);
        EpochLog log = make_log(epoch, data, id, plant);
        log.plan_wallclock = wall;
        log.solver_status = status;
        log.ccp_iterations = ccp_iters;
        log.constraint_margin_min = std::min(input_margin(inputs, u_prev, s, run.du_max), state_margin(realized, s));
        run.logs.push_back(log);
    }
    return run;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double interquartile_range(std::vector<double> v) { return quantile(v, 0.75) - quantile(v, 0.25); }

BenchmarkResult benchmark(const BenchmarkConfig& config) {
    if (config.methods.empty()) throw Error(ErrorKind::InvalidInput, "benchmark needs at least one method");
    if (config.seeds < 1) throw Error(ErrorKind::InvalidInput, "benchmark needs at least one seed");

    BenchmarkResult out;
    for (Method method : config.methods) {
        std::vector<double> tg, rt, rp, wc;
        for (int i = 0; i < config.seeds; ++i) {
            ExperimentSettings s = config.settings;
            s.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(i));
            ExperimentRun run = run_experiment(config.plant, method, s);
            const EpochLog& last = run.logs.back();
            tg.push_back(last.trace_gamma);
            rt.push_back(last.rmse_true);
            rp.push_back(last.rmse_predicted);
            double wall = 0.0;
            for (std::size_t e = 1; e < run.logs.size(); ++e) wall += run.logs[e].plan_wallclock;
            wc.push_back(run.logs.size() > 1 ? wall / static_cast<double>(run.logs.size() - 1) : 0.0);
            out.runs.push_back(std::move(run));
        }
        BenchmarkRow row;
        row.method = method;
        row.runs = config.seeds;
        row.trace_gamma_median = median(tg);
        row.trace_gamma_iqr = interquartile_range(tg);
        row.rmse_true_median = median(rt);
        row.rmse_true_iqr = interquartile_range(rt);
        row.rmse_predicted_median = median(rp);
        row.wallclock_median = median(wc);
        row.wallclock_iqr = interquartile_range(wc);
        out.rows.push_back(row);
    }
    return out;
}

} // namespace infodesign
