#pragma once

#include "infodesign/error.hpp"

namespace infodesign {

/**
 * @brief Dense linear program
 *
 *     minimize    c^T x
 *     subject to  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper
 *
 * Bounds may be infinite. Empty constraint blocks are allowed (0 rows).
 */
struct LpProblem {
    Vector c;
    Matrix A_ub;
    Vector b_ub;
    Matrix A_eq;
    Vector b_eq;
    Vector lower;
    Vector upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector x;
    double objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0;      //!< |primal - dual| / max(1, |primal|)
    double primal_residual = 0.0;  //!< max constraint/bound violation of x
    double dual_residual = 0.0;    //!< max negative reduced cost at the final basis
    int iterations = 0;
};

struct LpOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-10;
    double pivot_tol = 1e-11;
    int max_iterations = 0;  //!< 0 selects a size-based default
};

/// Two-phase dense tableau simplex with a Bland fallback on degenerate streaks.
LpResult solve_lp(const LpProblem& problem, const LpOptions& opts = {});

} // namespace infodesign
