#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "infodesign/core_model.hpp"

namespace testing_support {

using infodesign::Index;
using infodesign::Matrix;
using infodesign::Trajectory;
using infodesign::Vector;

inline Matrix randn(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) M(i, j) = g(rng);
    return M;
}

inline Vector randn(Index n, std::mt19937_64& rng) { return randn(n, 1, rng); }

// Random A rescaled to the given spectral radius.
inline Matrix stable_matrix(Index n, std::mt19937_64& rng, double radius = 0.9) {
    Matrix A = randn(n, n, rng);
    const double rho = Eigen::EigenSolver<Matrix>(A, false).eigenvalues().cwiseAbs().maxCoeff();
    return A * (radius / rho);
}

inline Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Matrix> qr(randn(rows, cols, rng));
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

// x_{t+1} = A x_t + B u_t + sigma v_t with standard-normal inputs, x_1 random.
inline Trajectory simulate(const Matrix& A, const Matrix& B, Index k, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Trajectory t;
    Vector x = randn(A.rows(), rng);
    t.states.push_back(x);
    for (Index i = 0; i < k; ++i) {
        Vector u = randn(B.cols(), rng);
        Vector v(A.rows());
        for (Index j = 0; j < v.size(); ++j) v(j) = g(rng);
        x = A * x + B * u + sigma * v;
        t.inputs.push_back(u);
        t.states.push_back(x);
    }
    return t;
}

// Explicit I_n (x) M.
inline Matrix kron_identity(Index n, const Matrix& M) {
    Matrix K = Matrix::Zero(n * M.rows(), n * M.cols());
    for (Index i = 0; i < n; ++i) K.block(i * M.rows(), i * M.cols(), M.rows(), M.cols()) = M;
    return K;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

} // namespace testing_support
