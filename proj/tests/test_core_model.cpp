#include <doctest.h>

#include "infodesign/core_model.hpp"
#include "test_support.hpp"

using namespace infodesign;
using namespace testing_support;

namespace {

Trajectory hand_trajectory() {
    // X = [0 1], U = [1 2], X' = [1 2]
    Trajectory t;
    t.states = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
    t.inputs = {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)};
    return t;
}

} // namespace

TEST_SUITE("assemble_data") {
    TEST_CASE("scalar decay example") {
        Trajectory t;
        t.states = {Vector::Constant(1, 1.0), Vector::Constant(1, 0.5), Vector::Constant(1, 0.25)};
        t.inputs = {Vector::Zero(1), Vector::Zero(1)};
        const DataMatrices d = assemble_data(t);
        CHECK(d.X(0, 0) == 1.0);
        CHECK(d.X(0, 1) == 0.5);
        CHECK(d.Xp(0, 0) == 0.5);
        CHECK(d.Xp(0, 1) == 0.25);
        CHECK(d.U.isZero(0.0));
        REQUIRE(d.Z.rows() == 2);
        CHECK(d.Z(0, 0) == 1.0);
        CHECK(d.Z(0, 1) == 0.5);
        CHECK(d.Z.row(1).isZero(0.0));
    }

    TEST_CASE("length mismatch is rejected") {
        Trajectory t;
        t.states.assign(3, Vector::Zero(2));
        t.inputs.assign(3, Vector::Zero(1));
        CHECK_THROWS_AS(assemble_data(t), Error);
        t.inputs.assign(2, Vector::Zero(1));
        t.states[1] = Vector::Zero(3);
        CHECK_THROWS_AS(assemble_data(t), Error);
    }

    TEST_CASE("columns match index-by-index construction") {
        std::mt19937_64 rng(11);
        const Trajectory t = simulate(stable_matrix(3, rng), randn(3, 2, rng), 10, 0.1, rng);
        const DataMatrices d = assemble_data(t);
        for (Index j = 0; j < 10; ++j) {
            for (Index i = 0; i < 3; ++i) {
                CHECK(d.Z(i, j) == t.states[static_cast<std::size_t>(j)](i));
                CHECK(d.Xp(i, j) == t.states[static_cast<std::size_t>(j + 1)](i));
            }
            for (Index i = 0; i < 2; ++i) CHECK(d.Z(3 + i, j) == t.inputs[static_cast<std::size_t>(j)](i));
        }
    }

    TEST_CASE("autonomous data has an empty input block") {
        Trajectory t;
        t.states = {Vector::Ones(2), Vector::Ones(2) * 0.5, Vector::Ones(2) * 0.2};
        t.inputs.assign(2, Vector(0));
        const DataMatrices d = assemble_data(t);
        CHECK(d.m() == 0);
        CHECK(d.Z.rows() == 2);
    }

    TEST_CASE("append_data concatenates columns") {
        std::mt19937_64 rng(3);
        const DataMatrices a = assemble_data(simulate(stable_matrix(2, rng), randn(2, 1, rng), 4, 0.1, rng));
        const DataMatrices b = assemble_data(simulate(stable_matrix(2, rng), randn(2, 1, rng), 3, 0.1, rng));
        const DataMatrices c = append_data(a, b);
        CHECK(c.k() == 7);
        CHECK(c.Z.rightCols(3) == b.Z);
    }
}

TEST_SUITE("estimate_theta") {
    TEST_CASE("hand 2x2 example") {
        const ModelEstimate est = estimate_theta(assemble_data(hand_trajectory()), 1.0);
        CHECK(est.A_hat(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(est.B_hat(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("noise-free recovery") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            const Index n = 2 + trial % 4;
            const Index m = 1 + trial % 3;
            const Matrix A = stable_matrix(n, rng);
            const Matrix B = randn(n, m, rng);
            const ModelEstimate est = estimate_theta(assemble_data(simulate(A, B, 5 * (n + m), 0.0, rng)), 1.0);
            Matrix theta(n, n + m);
            theta << A, B;
            CHECK((est.theta() - theta).norm() < 1e-8);
        }
    }

    TEST_CASE("too few columns reports the numerical rank") {
        std::mt19937_64 rng(8);
        const DataMatrices d = assemble_data(simulate(stable_matrix(3, rng), randn(3, 2, rng), 4, 0.1, rng));
        try {
            (void)estimate_theta(d, 1.0);
            FAIL("expected RankDeficientError");
        } catch (const RankDeficientError& e) {
            CHECK(e.numerical_rank() == 4);
            CHECK(e.required_rank() == 5);
        }
    }

    TEST_CASE("duplicated rows are rank deficient") {
        std::mt19937_64 rng(9);
        Trajectory t = simulate(stable_matrix(2, rng), randn(2, 2, rng), 20, 0.1, rng);
        for (auto& u : t.inputs) u(1) = 2.0 * u(0);
        CHECK_THROWS_AS((void)estimate_theta(assemble_data(t), 1.0), RankDeficientError);
    }

    TEST_CASE("condition cap") {
        std::mt19937_64 rng(10);
        Trajectory t = simulate(stable_matrix(2, rng), randn(2, 1, rng), 30, 0.1, rng);
        for (auto& u : t.inputs) u *= 1e-7;
        const DataMatrices d = assemble_data(t);
        CHECK_NOTHROW((void)estimate_theta(d, 1.0, EstimateOptions{1e16, 1e-12}));
        CHECK_THROWS_AS((void)estimate_theta(d, 1.0), RankDeficientError);
    }

    TEST_CASE("Gamma is symmetric positive definite and scales with sigma squared") {
        std::mt19937_64 rng(12);
        const DataMatrices d = assemble_data(simulate(stable_matrix(3, rng), randn(3, 2, rng), 30, 0.1, rng));
        const ModelEstimate e1 = estimate_theta(d, 0.1);
        const ModelEstimate e3 = estimate_theta(d, 0.3);
        CHECK((e1.Gamma - e1.Gamma.transpose()).norm() <= 1e-10 * e1.Gamma.norm());
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(e1.Gamma).eigenvalues().minCoeff() > 0.0);
        CHECK(rel_diff(e3.Gamma, 9.0 * e1.Gamma) < 1e-14);
        CHECK(rmse(e3) == doctest::Approx(3.0 * rmse(e1)).epsilon(1e-14));
        // the oracle: explicit inverse of Z Z^T on a well-conditioned instance
        const Matrix oracle = 0.01 * (d.Z * d.Z.transpose()).inverse();
        CHECK(rel_diff(e1.Gamma, oracle) < 1e-10);
    }

    TEST_CASE("autonomous system") {
        std::mt19937_64 rng(13);
        const Matrix A = stable_matrix(3, rng);
        Trajectory t;
        Vector x = randn(3, rng);
        t.states.push_back(x);
        for (int i = 0; i < 12; ++i) {
            x = A * x + 0.5 * randn(3, rng);
            t.states.push_back(x);
            t.inputs.push_back(Vector(0));
        }
        const ModelEstimate est = estimate_theta(assemble_data(t), 0.5);
        CHECK(est.m() == 0);
        CHECK(est.Gamma.rows() == 3);
    }

    TEST_CASE("noise estimate is the mean squared residual") {
        std::mt19937_64 rng(14);
        const DataMatrices d = assemble_data(simulate(stable_matrix(2, rng), randn(2, 1, rng), 4000, 0.2, rng));
        const double s = estimate_noise_sigma(d, estimate_theta(d, 1.0));
        CHECK(s == doctest::Approx(0.2).epsilon(0.03));
    }
}

TEST_SUITE("covariance") {
    TEST_CASE("cov_theta_trace examples") {
        CHECK(cov_theta_trace(Matrix::Identity(3, 3), 2) == 6.0);
        CHECK(cov_theta_trace(Matrix::Constant(1, 1, 0.04), 1) == doctest::Approx(0.04));
    }

    TEST_CASE("cov_theta_trace equals the explicit Kronecker trace") {
        std::mt19937_64 rng(21);
        const ModelEstimate est =
            estimate_theta(assemble_data(simulate(stable_matrix(3, rng), randn(3, 2, rng), 25, 0.1, rng)), 0.1);
        const double explicit_trace = kron_identity(3, est.Gamma).trace();
        CHECK(std::abs(cov_theta_trace(est) - explicit_trace) <= 1e-12 * explicit_trace);
    }

    TEST_CASE("rmse examples") {
        CHECK(rmse(Matrix::Constant(1, 1, 0.09), 1, 0) == doctest::Approx(0.3));
        CHECK(rmse(Matrix::Identity(3, 3), 2, 1) == doctest::Approx(1.0));
    }

    TEST_CASE("Monte-Carlo RMSE matches the prediction") {
        std::mt19937_64 rng(22);
        const Matrix A = stable_matrix(2, rng);
        const Matrix B = randn(2, 1, rng);
        const double sigma = 0.1;
        // fixed regressors, fresh noise per realization
        const Trajectory base = simulate(A, B, 30, sigma, rng);
        const DataMatrices d0 = assemble_data(base);
        Matrix theta(2, 3);
        theta << A, B;
        std::normal_distribution<double> g(0.0, 1.0);
        double sq = 0.0;
        const int reps = 500;
        for (int r = 0; r < reps; ++r) {
            DataMatrices d = d0;
            for (Index j = 0; j < d.k(); ++j)
                for (Index i = 0; i < 2; ++i) d.Xp(i, j) = (theta * d.Z.col(j))(i) + sigma * g(rng);
            sq += (estimate_theta(d, sigma).theta() - theta).squaredNorm();
        }
        const double sample_rmse = std::sqrt(sq / (reps * 6.0));
        CHECK(sample_rmse == doctest::Approx(rmse(estimate_theta(d0, sigma))).epsilon(0.10));
    }
}

TEST_SUITE("propagate_uncertainty") {
    TEST_CASE("A = 0 gives sigma^2 I after one step") {
        const UncertaintyTrajectory u = propagate_uncertainty(Matrix::Zero(3, 3), Matrix::Zero(3, 3), 1.0, 1);
        REQUIRE(u.covariances.size() == 2);
        CHECK(u.covariances[1].isApprox(Matrix::Identity(3, 3)));
    }

    TEST_CASE("A = I telescopes") {
        const UncertaintyTrajectory u = propagate_uncertainty(Matrix::Identity(2, 2), Matrix::Zero(2, 2), 1.0, 7);
        for (int t = 0; t <= 7; ++t) {
            CHECK((u.covariances[static_cast<std::size_t>(t)] - t * Matrix::Identity(2, 2)).norm() == 0.0);
            CHECK(u.stddevs[static_cast<std::size_t>(t)](0) == doctest::Approx(std::sqrt(t)));
        }
    }

    TEST_CASE("Monte-Carlo rollouts match step 5") {
        std::mt19937_64 rng(31);
        const Matrix A = stable_matrix(3, rng);
        const double sigma = 0.1;
        const UncertaintyTrajectory u = propagate_uncertainty(A, Matrix::Zero(3, 3), sigma, 5);
        std::normal_distribution<double> g(0.0, 1.0);
        const int reps = 10000;
        Matrix S = Matrix::Zero(3, 3);
        for (int r = 0; r < reps; ++r) {
            Vector x = Vector::Zero(3);
            for (int t = 0; t < 5; ++t) {
                Vector v(3);
                for (Index i = 0; i < 3; ++i) v(i) = g(rng);
                x = A * x + sigma * v;
            }
            S += x * x.transpose();
        }
        S /= reps;
        CHECK(rel_diff(S, u.covariances[5]) < 0.05);
    }

    TEST_CASE("stddevs are square roots of the diagonal") {
        std::mt19937_64 rng(32);
        const Matrix A = stable_matrix(4, rng);
        const UncertaintyTrajectory u = propagate_uncertainty(A, Matrix::Identity(4, 4) * 0.3, 0.2, 6);
        for (std::size_t t = 0; t < u.covariances.size(); ++t) {
            CHECK((u.stddevs[t] - u.covariances[t].diagonal().cwiseSqrt()).norm() == 0.0);
            CHECK((u.covariances[t] - u.covariances[t].transpose()).norm() == 0.0);
        }
    }
}

TEST_SUITE("verify_kronecker_identity") {
    TEST_CASE("hand example is exact") {
        const KroneckerCheck k = verify_kronecker_identity(assemble_data(hand_trajectory()));
        CHECK(k.holds);
        CHECK(k.max_residual == 0.0);
    }

    TEST_CASE("random instances") {
        std::mt19937_64 rng(41);
        for (auto [n, m, k] : {std::tuple{2, 1, 6}, std::tuple{3, 2, 10}}) {
            const DataMatrices d = assemble_data(simulate(stable_matrix(n, rng), randn(n, m, rng), k, 0.1, rng));
            const KroneckerCheck c = verify_kronecker_identity(d);
            CHECK(c.holds);
            CHECK(c.max_residual < 1e-12);
        }
    }

    TEST_CASE("large instances are refused") {
        std::mt19937_64 rng(42);
        const DataMatrices d = assemble_data(simulate(stable_matrix(14, rng), randn(14, 2, rng), 40, 0.1, rng));
        try {
            (void)verify_kronecker_identity(d);
            FAIL("expected a size error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Size);
        }
    }
}
