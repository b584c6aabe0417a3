#pragma once

#include <vector>

#include "infodesign/error.hpp"

namespace infodesign {

/**
 * @brief Raw sampled trajectory of a controlled linear system.
 *
 * states holds x_1..x_{k+1}, inputs holds u_1..u_k. An autonomous system
 * (m = 0) is represented by k zero-length input vectors.
 */
struct Trajectory {
    std::vector<Vector> states;
    std::vector<Vector> inputs;
    double dt = 1.0;

    [[nodiscard]] Index state_dim() const { return states.empty() ? 0 : states.front().size(); }
    [[nodiscard]] Index input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
    [[nodiscard]] Index steps() const { return static_cast<Index>(inputs.size()); }

    /// Throws Error(InvalidInput) when the length/dimension invariants fail.
    void validate() const;
};

/// Snapshot matrices X, X', Upsilon and Z = [X; Upsilon].
struct DataMatrices {
    Matrix X;
    Matrix Xp;
    Matrix U;
    Matrix Z;

    [[nodiscard]] Index n() const { return X.rows(); }
    [[nodiscard]] Index m() const { return U.rows(); }
    [[nodiscard]] Index k() const { return X.cols(); }
};

/// Least-squares model Theta = [A_hat B_hat] with its covariance factor.
struct ModelEstimate {
    Matrix A_hat;
    Matrix B_hat;
    double sigma = 0.0;
    Matrix Gamma;  //!< sigma^2 (Z Z^T)^{-1}

    [[nodiscard]] Index n() const { return A_hat.rows(); }
    [[nodiscard]] Index m() const { return B_hat.cols(); }
    [[nodiscard]] Matrix theta() const;
};

struct UncertaintyTrajectory {
    std::vector<Matrix> covariances;
    std::vector<Vector> stddevs;
};

struct EstimateOptions {
    double condition_cap = 1e12;    //!< maximum admissible cond(Z Z^T)
    double singular_tol = 1e-12;    //!< relative cutoff for the pseudo-inverse
};

DataMatrices assemble_data(const Trajectory& traj);

/// Append further samples (columns) to existing data. Dimensions must agree.
DataMatrices append_data(const DataMatrices& data, const DataMatrices& more);

/// Numerical rank of a matrix under the relative singular-value cutoff.
Index numerical_rank(const Matrix& M, double rel_tol = 1e-12);

/**
 * @brief Least-squares fit X' ~ [A B] Z via an SVD pseudo-inverse.
 *
 * Fails with RankDeficientError when Z Z^T is rank deficient or its condition
 * number exceeds opts.condition_cap.
 */
ModelEstimate estimate_theta(const DataMatrices& data, double sigma, const EstimateOptions& opts = {});

/// sigma_hat = sqrt(||Theta_hat Z - X'||_F^2 / (n k)).
double estimate_noise_sigma(const DataMatrices& data, const ModelEstimate& est);

/// Gamma = sigma^2 (Z Z^T)^{-1} for an arbitrary stacked data matrix.
Matrix covariance_factor(const Matrix& Z, double sigma, const EstimateOptions& opts = {});

/// tr(I_n (x) Gamma) = n tr(Gamma).
double cov_theta_trace(const Matrix& Gamma, Index n);
double cov_theta_trace(const ModelEstimate& est);

/// Predicted RMSE of Theta_hat: sqrt(n tr(Gamma) / (n (n + m))).
double rmse(const Matrix& Gamma, Index n, Index m);
double rmse(const ModelEstimate& est);

/// Sigma_{t+1} = A Sigma_t A^T + sigma^2 I, for `steps` steps starting at Sigma0.
UncertaintyTrajectory propagate_uncertainty(const Matrix& A, const Matrix& Sigma0, double sigma, int steps);

struct KroneckerCheck {
    bool holds = false;
    double max_residual = 0.0;
};

/// Largest n (n + m) for which the explicit regressor is built.
inline constexpr Index kKroneckerMaxParams = 200;

/**
 * @brief Builds the vectorized regressor Phi (kn x n(n+m)) and checks
 * Phi^T Phi == I_n (x) Z Z^T entrywise. Throws Error(Size) for large instances.
 */
KroneckerCheck verify_kronecker_identity(const DataMatrices& data);

} // namespace infodesign
