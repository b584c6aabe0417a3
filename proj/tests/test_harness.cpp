#include <doctest.h>

#include <algorithm>
#include <limits>
#include <set>

#include "infodesign/harness.hpp"
#include "test_support.hpp"

using namespace infodesign;
using namespace testing_support;

namespace {

ExperimentSettings settings(Index m, int epochs = 3, int horizon = 10) {
    ExperimentSettings s;
    s.epochs = epochs;
    s.horizon = horizon;
    s.u_lo = Vector::Constant(m, -1.0);
    s.u_hi = Vector::Constant(m, 1.0);
    s.du_max = Vector::Constant(m, 0.5);
    s.seed = 42;
    return s;
}

double rho(const Matrix& A) { return Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff(); }

} // namespace

TEST_SUITE("plants") {
    TEST_CASE("noise-free scalar rollout") {
        Plant p;
        p.A_true = Matrix::Constant(1, 1, 0.5);
        p.B_true = Matrix::Constant(1, 1, 1.0);
        p.x0 = Vector::Zero(1);
        const Trajectory t = simulate_plant(p, {Vector::Ones(1), Vector::Ones(1), Vector::Zero(1)}, 3, 0.2);
        REQUIRE(t.states.size() == 4);
        CHECK(t.states[1](0) == 1.0);
        CHECK(t.states[2](0) == 1.5);
        CHECK(t.states[3](0) == 0.75);
        CHECK(t.dt == 0.2);
        CHECK_THROWS_AS((void)simulate_plant(p, {Vector::Ones(1)}, 2), Error);
        CHECK_THROWS_AS((void)simulate_plant(p, {Vector::Ones(2)}, 1), Error);
    }

    TEST_CASE("process noise has the configured scale and is seeded") {
        Plant p = make_lti_plant(3, 1, 0.2, 5);
        std::vector<Vector> u(4000, Vector::Zero(1));
        const Trajectory t = simulate_plant(p, u, 4000);
        double ss = 0.0;
        for (std::size_t i = 0; i + 1 < t.states.size(); ++i) {
            ss += (t.states[i + 1] - p.A_true * t.states[i]).squaredNorm();
        }
        CHECK(std::sqrt(ss / (3.0 * 4000.0)) == doctest::Approx(0.2).epsilon(0.03));
        CHECK(simulate_plant(p, u, 4000).states == t.states);
        p.seed = 6;
        CHECK(simulate_plant(p, u, 4000).states != t.states);
    }

    TEST_CASE("generators honour dimensions and spectral radius") {
        const Plant p = make_lti_plant(5, 2, 0.01, 1, 0.8);
        CHECK(p.n() == 5);
        CHECK(p.m() == 2);
        CHECK(rho(p.A_true) == doctest::Approx(0.8).epsilon(1e-10));
        CHECK(p.x0.isZero());
        CHECK(p.theta().cols() == 7);
        CHECK(p.theta().leftCols(5) == p.A_true);

        const Plant h = make_highdim_plant(60, 4, 2, 0.01, 2, 0.9);
        CHECK(h.n() == 60);
        CHECK(h.latent_rank == 4);
        Eigen::JacobiSVD<Matrix> svd(h.A_true, Eigen::ComputeThinU);
        CHECK(svd.singularValues()(3) > 1e-8);
        CHECK(svd.singularValues()(4) < 1e-12);
        CHECK(rho(h.A_true) == doctest::Approx(0.9).epsilon(1e-8));
        // B lives in the range of A
        const Matrix Q = svd.matrixU().leftCols(4);
        CHECK((h.B_true - Q * Q.transpose() * h.B_true).norm() < 1e-10);
    }

    TEST_CASE("method names") {
        for (Method m : {Method::Sdp, Method::Lp, Method::Multisine, Method::Random, Method::Prbs}) {
            CHECK(parse_method(to_string(m)) == m);
        }
        CHECK_THROWS_AS((void)parse_method("chirp"), Error);
    }
}

TEST_SUITE("seeds and statistics") {
    TEST_CASE("derived seeds are deterministic and distinct") {
        std::set<std::uint64_t> seen;
        for (std::uint64_t base : {0u, 1u, 2u}) {
            for (std::uint64_t stream = 0; stream < 200; ++stream) seen.insert(derive_seed(base, stream));
        }
        CHECK(seen.size() == 600);
        CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    }

    TEST_CASE("median and interquartile range") {
        CHECK(median({3.0, 1.0, 2.0}) == 2.0);
        CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
        CHECK(interquartile_range({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(1.5));
        CHECK(median({5.0}) == 5.0);
        CHECK(interquartile_range({5.0}) == 0.0);
    }
}

TEST_SUITE("experiment") {
    TEST_CASE("zero epochs logs only the initial fit") {
        const Plant p = make_lti_plant(3, 2, 0.01, 1);
        const ExperimentRun r = run_experiment(p, Method::Sdp, settings(2, 0));
        REQUIRE(r.logs.size() == 1);
        CHECK(r.logs[0].solver_status == "initial");
        CHECK(r.logs[0].k == 15);
        CHECK(r.trajectory.inputs.size() == 15);
        CHECK(std::none_of(r.designed.begin(), r.designed.end(), [](bool b) { return b; }));
    }

    TEST_CASE("bookkeeping, constraints and monotone information") {
        const Plant p = make_lti_plant(3, 2, 0.01, 2);
        for (Method m : {Method::Sdp, Method::Lp, Method::Multisine, Method::Random, Method::Prbs}) {
            CAPTURE(to_string(m));
            ExperimentSettings s = settings(2, 4, 8);
            s.initial_excitation = 12;
            s.du_max.reset();  // derived from the multisine
            const ExperimentRun r = run_experiment(p, m, s);
            REQUIRE(r.logs.size() == 5);
            for (int e = 0; e <= 4; ++e) CHECK(r.logs[e].k == 12 + 8 * e);
            for (int e = 1; e <= 4; ++e) {
                CHECK(r.logs[e].trace_gamma <= r.logs[e - 1].trace_gamma * (1.0 + 1e-12));
                // entering the periodic multisine from the initial excitation is the one unconstrained jump
                if (m != Method::Multisine || e > 1) CHECK(r.logs[e].constraint_margin_min >= -1e-9);
            }
            REQUIRE(r.designed.size() == 44);
            CHECK(std::count(r.designed.begin(), r.designed.end(), true) == 32);
            for (std::size_t t = 12; t < r.trajectory.inputs.size(); ++t) {
                const Vector& u = r.trajectory.inputs[t];
                CHECK(u.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
                if (m != Method::Multisine || t > 12) {
                    CHECK(((u - r.trajectory.inputs[t - 1]).cwiseAbs().array() <= r.du_max.array() + 1e-9).all());
                }
            }
        }
    }

    TEST_CASE("logged errors match an independent refit") {
        const Plant p = make_lti_plant(3, 1, 0.02, 3);
        const ExperimentRun r = run_experiment(p, Method::Random, settings(1, 2));
        const DataMatrices d = assemble_data(r.trajectory);
        const ModelEstimate est = estimate_theta(d, 0.02);
        const EpochLog& last = r.logs.back();
        CHECK(last.trace_gamma == doctest::Approx(est.Gamma.trace()).epsilon(1e-9));
        Matrix theta(3, 4);
        theta << est.A_hat, est.B_hat;
        CHECK(last.rmse_true == doctest::Approx((theta - p.theta()).norm() / std::sqrt(12.0)).epsilon(1e-9));
        CHECK_FALSE(last.reduced);
    }

    TEST_CASE("an unreachable state box falls back to holding the input") {
        const Plant p = make_lti_plant(2, 1, 0.01, 4);
        ExperimentSettings s = settings(1, 1, 5);
        s.x_lo = Vector::Constant(2, 100.0);
        s.x_hi = Vector::Constant(2, 101.0);
        const ExperimentRun r = run_experiment(p, Method::Sdp, s);
        CHECK(r.logs[1].solver_status == "infeasible");
        const std::size_t k0 = 9;
        for (std::size_t t = k0; t < r.trajectory.inputs.size(); ++t) {
            CHECK(r.trajectory.inputs[t] == r.trajectory.inputs[k0 - 1]);
        }
    }

    TEST_CASE("high-dimensional plants take the reduced branch") {
        const Plant p = make_highdim_plant(60, 3, 2, 0.001, 5);
        ExperimentSettings s = settings(2, 2, 10);
        s.initial_excitation = 80;
        const ExperimentRun r = run_experiment(p, Method::Sdp, s);
        for (const EpochLog& l : r.logs) CHECK(l.reduced);
        CHECK(std::isfinite(r.logs.back().rmse_true));
        CHECK(r.logs.back().solver_status != "infeasible");
    }

    TEST_CASE("runs are reproducible") {
        const Plant p = make_lti_plant(3, 2, 0.01, 6);
        const ExperimentRun a = run_experiment(p, Method::Prbs, settings(2));
        const ExperimentRun b = run_experiment(p, Method::Prbs, settings(2));
        CHECK(a.trajectory.states == b.trajectory.states);
        CHECK(a.trajectory.inputs == b.trajectory.inputs);
    }

    TEST_CASE("methods share the initial excitation and noise") {
        const Plant p = make_lti_plant(3, 2, 0.01, 7);
        const ExperimentRun a = run_experiment(p, Method::Sdp, settings(2));
        const ExperimentRun b = run_experiment(p, Method::Random, settings(2));
        for (std::size_t t = 0; t <= 15; ++t) CHECK(a.trajectory.states[t] == b.trajectory.states[t]);
        CHECK(a.logs[0].trace_gamma == b.logs[0].trace_gamma);
    }
}

TEST_SUITE("benchmark") {
    TEST_CASE("single seed equals a direct run") {
        BenchmarkConfig c;
        c.plant = make_lti_plant(3, 2, 0.01, 8);
        c.methods = {Method::Sdp};
        c.seeds = 1;
        c.master_seed = 11;
        c.settings = settings(2);
        const BenchmarkResult b = benchmark(c);
        REQUIRE(b.rows.size() == 1);
        ExperimentSettings s = c.settings;
        s.seed = derive_seed(11, 0);
        const ExperimentRun r = run_experiment(c.plant, Method::Sdp, s);
        CHECK(b.rows[0].runs == 1);
        CHECK(b.rows[0].trace_gamma_median == r.logs.back().trace_gamma);
        CHECK(b.rows[0].rmse_true_median == r.logs.back().rmse_true);
        CHECK(b.rows[0].trace_gamma_iqr == 0.0);
    }

    TEST_CASE("method order does not change results") {
        BenchmarkConfig c;
        c.plant = make_lti_plant(3, 2, 0.01, 9);
        c.methods = {Method::Sdp, Method::Random, Method::Prbs};
        c.seeds = 3;
        c.settings = settings(2, 2);
        const BenchmarkResult a = benchmark(c);
        c.methods = {Method::Prbs, Method::Sdp, Method::Random};
        const BenchmarkResult b = benchmark(c);
        for (const BenchmarkRow& ra : a.rows) {
            const auto it = std::find_if(b.rows.begin(), b.rows.end(), [&](const BenchmarkRow& x) { return x.method == ra.method; });
            REQUIRE(it != b.rows.end());
            CHECK(it->trace_gamma_median == ra.trace_gamma_median);
            CHECK(it->rmse_true_median == ra.rmse_true_median);
            CHECK(it->trace_gamma_iqr == ra.trace_gamma_iqr);
        }
        CHECK(a.runs.size() == 9);
    }

    TEST_CASE("preconditions") {
        BenchmarkConfig c;
        c.plant = make_lti_plant(2, 1, 0.01, 1);
        c.settings = settings(1);
        c.methods = {};
        CHECK_THROWS_AS((void)benchmark(c), Error);
        c.methods = {Method::Random};
        c.seeds = 0;
        CHECK_THROWS_AS((void)benchmark(c), Error);
    }
}
