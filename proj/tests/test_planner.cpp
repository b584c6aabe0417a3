#include <doctest.h>

#include <limits>

#include "infodesign/planner.hpp"
#include "test_support.hpp"

using namespace infodesign;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Planning problem on an estimate from k noisy random-input samples.
PlanProblem fixture(Index n, Index m, Index k, int horizon, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Matrix A = stable_matrix(n, rng);
    const Matrix B = randn(n, m, rng);
    Trajectory t = simulate(A, B, k, 0.05, rng);
    for (auto& u : t.inputs) u = u.cwiseMax(-1.0).cwiseMin(1.0);
    const DataMatrices d = assemble_data(t);
    PlanProblem p = plan_problem_from_estimate(estimate_theta(d, 0.05), d);
    p.horizon = horizon;
    return p;
}

// Direct rollout x_{t+1} = A x_t + B u_t from x_init.
std::vector<Vector> rollout(const PlanProblem& p, const Vector& u) {
    std::vector<Vector> xs{p.x_init};
    for (int t = 0; t < p.horizon; ++t) xs.push_back(p.A * xs.back() + p.B * u.segment(t * p.m(), p.m()));
    return xs;
}

// tr(sigma^2 S^{-1}) with S the linearized Z Z^T, built column by column.
double surrogate_oracle(const PlanProblem& p, const Vector& u_c, const Vector& u) {
    const auto xc = rollout(p, u_c);
    const auto x = rollout(p, u);
    Matrix S = p.Z_past * p.Z_past.transpose();
    for (int t = 0; t < p.horizon; ++t) {
        Vector zc(p.d() + p.m()), z(p.d() + p.m());
        zc << xc[t], u_c.segment(t * p.m(), p.m());
        z << x[t], u.segment(t * p.m(), p.m());
        S += zc * z.transpose() + z * zc.transpose() - zc * zc.transpose();
    }
    return p.sigma * p.sigma * S.inverse().trace();
}

double true_oracle(const PlanProblem& p, const Vector& u) {
    const auto x = rollout(p, u);
    Matrix S = p.Z_past * p.Z_past.transpose();
    for (int t = 0; t < p.horizon; ++t) {
        Vector z(p.d() + p.m());
        z << x[t], u.segment(t * p.m(), p.m());
        S += z * z.transpose();
    }
    return p.sigma * p.sigma * S.inverse().trace();
}

} // namespace

TEST_SUITE("condensed dynamics") {
    TEST_CASE("match a direct rollout") {
        const PlanProblem p = fixture(3, 2, 30, 6, 1);
        const CondensedDynamics cd = condense_dynamics(p);
        REQUIRE(cd.F.size() == 7);
        std::mt19937_64 rng(2);
        const Vector u = randn(p.num_inputs(), rng);
        const auto xs = rollout(p, u);
        for (int t = 0; t <= p.horizon; ++t) CHECK((cd.state(t, u) - xs[t]).norm() < 1e-12 * (1.0 + xs[t].norm()));
        CHECK(cd.F[0].norm() == 0.0);
        // causality: x_{k+1+t} ignores inputs from step t on
        for (int t = 0; t <= p.horizon; ++t) CHECK(cd.F[t].rightCols(p.num_inputs() - t * p.m()).norm() == 0.0);
    }

    TEST_CASE("scalar example") {
        PlanProblem p = fixture(1, 1, 10, 3, 3);
        p.A = Matrix::Constant(1, 1, 0.5);
        p.B = Matrix::Constant(1, 1, 2.0);
        p.x_init = Vector::Constant(1, 4.0);
        const CondensedDynamics cd = condense_dynamics(p);
        // x3 = 0.25 * 4 + 0.5 * 2 u0 + 2 u1
        CHECK(cd.g[2](0) == 1.0);
        CHECK(cd.F[2](0, 0) == 1.0);
        CHECK(cd.F[2](0, 1) == 2.0);
        CHECK(cd.F[2](0, 2) == 0.0);
        CHECK(cd.g[3](0) == 0.5);
        CHECK(cd.F[3](0, 0) == 0.5);
    }

    TEST_CASE("stacking round trip") {
        std::vector<Vector> in{Vector::Constant(2, 1.0), Vector::Constant(2, 2.0), Vector::Constant(2, 3.0)};
        const Vector u = stack_inputs(in);
        CHECK(u.size() == 6);
        CHECK(u(3) == 2.0);
        const auto back = unstack_inputs(u, 2);
        REQUIRE(back.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == in[i]);
    }

    TEST_CASE("stacked data appends planned columns") {
        const PlanProblem p = fixture(2, 1, 12, 4, 4);
        const CondensedDynamics cd = condense_dynamics(p);
        const Vector u = Vector::LinSpaced(4, -1.0, 1.0);
        const Matrix Z = stacked_data(p, cd, u);
        CHECK(Z.cols() == 16);
        CHECK(Z.leftCols(12) == p.Z_past);
        const auto xs = rollout(p, u);
        for (int t = 0; t < 4; ++t) {
            CHECK((Z.col(12 + t).head(2) - xs[t]).norm() < 1e-12);
            CHECK(Z(2, 12 + t) == u(t));
        }
    }
}

TEST_SUITE("information") {
    TEST_CASE("trace of the inverse information") {
        Matrix Z(2, 3);
        Z << 1, 0, 1, 0, 2, 0;
        // Z Z^T = diag(2, 4), sigma = 0.5  ->  0.25 * (1/2 + 1/4)
        CHECK(trace_inverse_information(Z, 0.5) == doctest::Approx(0.1875).epsilon(1e-14));
        CHECK(information_matrix(Z, 0.5)(1, 1) == 16.0);
        Matrix R(2, 3);
        R << 1, 2, 3, 2, 4, 6;
        CHECK(trace_inverse_information(R, 1.0) == kInf);
    }

    TEST_CASE("linearization is a tight minorant") {
        std::mt19937_64 rng(5);
        const Matrix Zc = randn(4, 9, rng);
        const LinearizedInformation lin = linearize_W(Zc, 0.3);
        CHECK(rel_diff(lin(Zc), information_matrix(Zc, 0.3)) < 1e-14);
        for (int i = 0; i < 20; ++i) {
            const Matrix Z = randn(4, 9, rng);
            const Matrix gap = information_matrix(Z, 0.3) - lin(Z);
            const Matrix D = Z - Zc;
            CHECK(rel_diff(gap, D * D.transpose() / 0.09) < 1e-10);
            CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(gap).eigenvalues().minCoeff() > -1e-9);
        }
        CHECK_THROWS_AS((void)lin(Matrix::Zero(4, 8)), Error);
    }

    TEST_CASE("library surrogates agree with the column oracle") {
        const PlanProblem p = fixture(3, 2, 25, 5, 6);
        std::mt19937_64 rng(7);
        const Vector uc = 0.5 * randn(p.num_inputs(), rng);
        const Vector u = uc + 0.05 * randn(p.num_inputs(), rng);
        CHECK(sdp_surrogate(p, uc, u) == doctest::Approx(surrogate_oracle(p, uc, u)).epsilon(1e-9));
        CHECK(true_objective(p, u) == doctest::Approx(true_oracle(p, u)).epsilon(1e-9));
        CHECK(sdp_surrogate(p, uc, uc) == doctest::Approx(true_objective(p, uc)).epsilon(1e-10));
        CHECK(sdp_surrogate(p, uc, u) >= true_objective(p, u) * (1.0 - 1e-12));
    }
}

TEST_SUITE("constraints") {
    TEST_CASE("inflated state box tightens by beta standard deviations") {
        PlanProblem p = fixture(1, 1, 10, 3, 8);
        p.A = Matrix::Constant(1, 1, 0.5);
        p.sigma = 0.2;
        p.beta = 2.0;
        p.x_lo = Vector::Constant(1, -1.0);
        p.x_hi = Vector::Constant(1, 1.0);
        const CondensedDynamics cd = condense_dynamics(p);
        const LinearConstraints c = build_constraints(p, cd);
        REQUIRE(c.G.rows() == 6);
        double var = 0.0;
        for (int t = 1; t <= 3; ++t) {
            var = 0.25 * var + 0.04;
            const double shrink = 2.0 * std::sqrt(var);
            CHECK(c.h(2 * (t - 1)) + cd.g[t](0) == doctest::Approx(1.0 - shrink).epsilon(1e-14));
            CHECK(c.h(2 * (t - 1) + 1) - cd.g[t](0) == doctest::Approx(-(-1.0 + shrink)).epsilon(1e-14));
        }
        CHECK_FALSE(c.empty_state_box);

        p.beta = 10.0;
        CHECK(build_constraints(p, cd).empty_state_box);
    }

    TEST_CASE("slew rows and the zero-slew equality") {
        PlanProblem p = fixture(2, 2, 12, 3, 9);
        p.u_prev = Vector::Constant(2, 0.25);
        p.du_max << 0.1, kInf;
        LinearConstraints c = build_constraints(p, condense_dynamics(p));
        CHECK(c.G.rows() == 6);
        CHECK(c.E.rows() == 0);
        Vector u(6);
        u << 0.35, 0.0, 0.45, 1.0, 0.4, -1.0;
        CHECK(constraint_violation(c, u) == doctest::Approx(0.0));
        CHECK(constraint_margin(c, u) == doctest::Approx(0.0).epsilon(1e-12));
        u(2) = 0.5;
        CHECK(constraint_violation(c, u) == doctest::Approx(0.05));

        p.du_max << 0.0, kInf;
        c = build_constraints(p, condense_dynamics(p));
        CHECK(c.E.rows() == 3);
        CHECK(c.G.rows() == 0);
    }
}

TEST_SUITE("sdp subproblem") {
    TEST_CASE("horizon one matches a grid search") {
        for (std::uint64_t seed : {10u, 11u, 12u}) {
            PlanProblem p = fixture(1, 1, 8, 1, seed);
            p.u_lo << -1.0;
            p.u_hi << 1.0;
            const Vector uc = Vector::Constant(1, 0.2);
            const PlanResult r = solve_subproblem_sdp(p, uc);
            REQUIRE(r.status == SolverStatus::Optimal);
            double best = kInf;
            for (int i = 0; i <= 20000; ++i) {
                const double v = -1.0 + 2.0 * i / 20000.0;
                best = std::min(best, surrogate_oracle(p, uc, Vector::Constant(1, v)));
            }
            CHECK(r.objective_surrogate <= best * (1.0 + 1e-9));
            CHECK(r.objective_surrogate >= best * (1.0 - 1e-6));
        }
    }

    TEST_CASE("KKT residual and feasibility") {
        PlanProblem p = fixture(3, 2, 20, 5, 13);
        p.du_max = Vector::Constant(2, 0.5);
        p.x_lo = Vector::Constant(3, -5.0);
        p.x_hi = Vector::Constant(3, 5.0);
        const PlanResult r = solve_subproblem_sdp(p, hold_last_input(p));
        REQUIRE(r.status == SolverStatus::Optimal);
        CHECK(r.optimality_residual <= 1e-6);
        const Vector u = stack_inputs(r.inputs);
        CHECK(constraint_violation(build_constraints(p, condense_dynamics(p)), u) <= 1e-9);
        CHECK(r.objective_surrogate == doctest::Approx(surrogate_oracle(p, hold_last_input(p), u)).epsilon(1e-9));
    }

    TEST_CASE("a larger input box never does worse") {
        PlanProblem p = fixture(2, 2, 15, 4, 14);
        const Vector uc = hold_last_input(p);
        double prev = kInf;
        for (double a : {0.25, 0.5, 1.0, 2.0}) {
            p.u_lo = Vector::Constant(2, -a);
            p.u_hi = Vector::Constant(2, a);
            Vector ucc = uc.cwiseMax(-a).cwiseMin(a);
            const PlanResult r = solve_subproblem_sdp(p, ucc);
            REQUIRE(r.status == SolverStatus::Optimal);
            // same linearization point for every box
            if (a >= 1.0) {
                CHECK(r.objective_surrogate <= prev * (1.0 + 1e-8));
                prev = r.objective_surrogate;
            }
        }
    }

    TEST_CASE("empty state box is infeasible") {
        PlanProblem p = fixture(2, 1, 12, 3, 15);
        p.x_lo = Vector::Zero(2);
        p.x_hi = Vector::Zero(2);
        p.beta = 1.0;
        CHECK(solve_subproblem_sdp(p, hold_last_input(p)).status == SolverStatus::Infeasible);
        CHECK(ccp(p).status == SolverStatus::Infeasible);
    }

    TEST_CASE("unreachable state box is infeasible") {
        PlanProblem p = fixture(2, 1, 12, 3, 16);
        p.beta = 0.0;
        p.x_lo = Vector::Constant(2, 1e6);
        p.x_hi = Vector::Constant(2, 2e6);
        CHECK(ccp(p).status == SolverStatus::Infeasible);
    }
}

TEST_SUITE("ccp") {
    TEST_CASE("zero slew holds the last input") {
        PlanProblem p = fixture(2, 2, 12, 4, 20);
        p.u_prev << 0.3, -0.7;
        p.du_max = Vector::Zero(2);
        const PlanResult r = ccp(p);
        REQUIRE(r.status != SolverStatus::Infeasible);
        for (const Vector& u : r.inputs) CHECK((u - p.u_prev).norm() < 1e-12);
    }

    TEST_CASE("huge tolerance stops after one iteration") {
        const PlanProblem p = fixture(3, 2, 20, 5, 21);
        CcpOptions o;
        o.tol = 1e300;
        const PlanResult r = ccp(p, o);
        CHECK(r.ccp_iterations == 1);
        CHECK(r.status == SolverStatus::Optimal);
        CHECK(r.objective_history.size() == 2);
    }

    TEST_CASE("accepted iterates never increase the objective") {
        for (std::uint64_t seed : {22u, 23u, 24u, 25u}) {
            PlanProblem p = fixture(3, 2, 20, 6, seed);
            p.du_max = Vector::Constant(2, 0.4);
            CcpOptions o;
            o.tol = 1e-9;
            o.max_iter = 30;
            const PlanResult r = ccp(p, o);
            REQUIRE(r.objective_history.size() >= 2);
            for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
                CHECK(r.objective_history[i] <= r.objective_history[i - 1] * (1.0 + 1e-9));
            }
            CHECK(r.objective_true <= true_oracle(p, hold_last_input(p)));
            CHECK(r.objective_true == doctest::Approx(true_oracle(p, stack_inputs(r.inputs))).epsilon(1e-9));
        }
    }

    TEST_CASE("converged plan is a fixed point of the subproblem") {
        const PlanProblem p = fixture(2, 2, 15, 5, 26);
        CcpOptions o;
        o.tol = 1e-10;
        o.max_iter = 100;
        const PlanResult r = ccp(p, o);
        REQUIRE(r.status == SolverStatus::Optimal);
        const Vector u = stack_inputs(r.inputs);
        const PlanResult again = solve_subproblem_sdp(p, u);
        CHECK(again.objective_true >= r.objective_true * (1.0 - 1e-6));
    }

    TEST_CASE("plans respect input, slew and state constraints") {
        PlanProblem p = fixture(3, 2, 20, 8, 27);
        p.u_lo << -0.5, -1.0;
        p.u_hi << 0.5, 1.0;
        p.du_max = Vector::Constant(2, 0.3);
        p.beta = 1.0;
        p.x_lo = Vector::Constant(3, -3.0);
        p.x_hi = Vector::Constant(3, 3.0);
        for (PlanObjective obj : {PlanObjective::Sdp, PlanObjective::Lp}) {
            CcpOptions o;
            o.objective = obj;
            const PlanResult r = ccp(p, o);
            REQUIRE(r.status != SolverStatus::Infeasible);
            const Vector u = stack_inputs(r.inputs);
            CHECK(constraint_violation(build_constraints(p, condense_dynamics(p)), u) <= 1e-9);
            Vector prev = p.u_prev;
            for (const Vector& ut : r.inputs) {
                CHECK(((ut - prev).cwiseAbs().array() <= 0.3 + 1e-9).all());
                CHECK((ut.array() >= p.u_lo.array() - 1e-12).all());
                prev = ut;
            }
            REQUIRE(r.predicted_states.size() == 9);
            for (std::size_t t = 1; t < r.predicted_states.size(); ++t) {
                CHECK(r.predicted_states[t].cwiseAbs().maxCoeff() <= 3.0 + 1e-9);
            }
        }
    }

    TEST_CASE("terminal target is reached") {
        PlanProblem p = fixture(2, 2, 20, 5, 28);
        p.u_lo = Vector::Constant(2, -2.0);
        p.u_hi = Vector::Constant(2, 2.0);
        const Vector reach = rollout(p, Vector::Constant(p.num_inputs(), 0.3)).back();
        p.terminal_target = reach;
        const PlanResult r = ccp(p);
        REQUIRE(r.status != SolverStatus::Infeasible);
        CHECK((r.predicted_states.back() - reach).norm() < 1e-8 * (1.0 + reach.norm()));
    }
}

TEST_SUITE("lp planner") {
    TEST_CASE("LP wins on its own surrogate, SDP on its own") {
        const PlanProblem p = fixture(3, 2, 20, 5, 30);
        const Vector uc = hold_last_input(p);
        const PlanResult lp = solve_subproblem_lp(p, uc);
        const PlanResult sdp = solve_subproblem_sdp(p, uc);
        REQUIRE(lp.status == SolverStatus::Optimal);
        REQUIRE(sdp.status == SolverStatus::Optimal);
        const Vector ul = stack_inputs(lp.inputs);
        const Vector us = stack_inputs(sdp.inputs);
        CHECK(lp_surrogate(p, uc, ul) >= lp_surrogate(p, uc, us) * (1.0 - 1e-9));
        CHECK(sdp_surrogate(p, uc, us) <= sdp_surrogate(p, uc, ul) * (1.0 + 1e-9));
        CHECK(lp.optimality_residual <= 1e-8);
    }

    TEST_CASE("pure input design drives channels into one direction") {
        // d = 0: the LP gradient is 2 u_c, so every step jumps to the corner sign(u_prev)
        std::mt19937_64 rng(31);
        PlanProblem p;
        p.A = Matrix::Zero(0, 0);
        p.B = Matrix::Zero(0, 2);
        p.Z_past = randn(2, 6, rng);
        p.x_init = Vector::Zero(0);
        p.horizon = 10;
        p.u_lo = Vector::Constant(2, -1.0);
        p.u_hi = Vector::Constant(2, 1.0);
        p.du_max = Vector::Constant(2, kInf);
        p.u_prev = (Vector(2) << 0.4, 0.3).finished();
        p.sigma = 1.0;
        CcpOptions o;
        o.objective = PlanObjective::Lp;
        const PlanResult lp = ccp(p, o);
        REQUIRE(lp.status != SolverStatus::Infeasible);
        for (const Vector& u : lp.inputs) {
            CHECK(u(0) == doctest::Approx(1.0));
            CHECK(u(1) == doctest::Approx(1.0));
        }
        CHECK(lp.degenerate_direction);

        const PlanResult sdp = ccp(p);
        CHECK_FALSE(degenerate_direction(sdp.inputs));
        CHECK(sdp.objective_true < lp.objective_true);
    }

    TEST_CASE("degenerate direction test") {
        std::vector<Vector> in;
        for (int t = 0; t < 5; ++t) in.push_back((Vector(2) << t, 2.0 * t).finished());
        CHECK(degenerate_direction(in));
        in[2](1) = -3.0;
        CHECK_FALSE(degenerate_direction(in));
        std::vector<Vector> single{Vector::Ones(1), Vector::Ones(1)};
        CHECK_FALSE(degenerate_direction(single));
        std::vector<Vector> zero_channel{(Vector(2) << 1, 0).finished(), (Vector(2) << -1, 0).finished()};
        CHECK(degenerate_direction(zero_channel));
        CHECK_FALSE(degenerate_direction({}));
    }
}

TEST_SUITE("validation") {
    TEST_CASE("malformed problems are rejected") {
        PlanProblem p = fixture(2, 1, 10, 3, 40);
        PlanProblem q = p;
        q.horizon = 0;
        CHECK_THROWS_AS(q.validate(), Error);
        q = p;
        q.u_lo << 2.0;
        CHECK_THROWS_AS(q.validate(), Error);
        q = p;
        q.beta = -1.0;
        CHECK_THROWS_AS(q.validate(), Error);
        q = p;
        q.sigma = 0.0;
        CHECK_THROWS_AS(q.validate(), Error);
        q = p;
        q.x_init = Vector::Zero(3);
        CHECK_THROWS_AS(q.validate(), Error);
        CHECK_NOTHROW(p.validate());
        CHECK(std::string(to_string(SolverStatus::MaxIter)) == "max_iter");
    }
}
