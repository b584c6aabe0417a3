#pragma once

#include <utility>

#include "infodesign/core_model.hpp"

namespace infodesign {

/**
 * @brief Reduced-order DMDc model.
 *
 * Z ~ U_tilde Sigma_tilde V_tilde^T truncated at rank p (U_tilde split row-wise
 * into the state block U_tilde_1 and the input block U_tilde_2), X' projected
 * onto its leading r left singular vectors U_hat. Reduced coordinates are
 * x_tilde = U_hat^T x.
 */
struct ReducedModel {
    Matrix U_tilde_1;    //!< n x p
    Matrix U_tilde_2;    //!< m x p
    Vector Sigma_tilde;  //!< p leading singular values of Z, non-increasing
    Matrix V_tilde;      //!< k x p
    Matrix U_hat;        //!< n x r, orthonormal columns
    Matrix A_tilde;      //!< r x r
    Matrix B_tilde;      //!< r x m
    Index p = 0;
    Index r = 0;

    [[nodiscard]] Index n() const { return U_hat.rows(); }
    [[nodiscard]] Index m() const { return B_tilde.cols(); }
};

/// Truncated DMDc reduction. Requires 1 <= r <= min(n, p), 1 <= p <= n + m, k >= p.
ReducedModel reduce(const DataMatrices& data, Index p, Index r);

Vector project_state(const ReducedModel& model, const Vector& x);
Vector lift_state(const ReducedModel& model, const Vector& x_tilde);

/// Smallest (p, r) capturing `energy` of the squared singular-value mass of Z and X', with r <= p.
std::pair<Index, Index> choose_ranks(const DataMatrices& data, double energy = 0.99);

/// Reduced stacked data Z_tilde = [U_hat^T X; Upsilon].
Matrix reduced_stack(const ReducedModel& model, const DataMatrices& data);

/// Gamma_tilde = sigma^2 (Z_tilde Z_tilde^T)^{-1}.
Matrix reduced_gamma(const ReducedModel& model, const DataMatrices& data, double sigma,
                     const EstimateOptions& opts = {});

/// Full-space operators implied by the reduced model: U_hat A_tilde U_hat^T and U_hat B_tilde.
std::pair<Matrix, Matrix> lifted_operators(const ReducedModel& model);

} // namespace infodesign
