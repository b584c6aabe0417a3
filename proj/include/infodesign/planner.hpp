#pragma once

#include <optional>
#include <string>
#include <vector>

#include "infodesign/core_model.hpp"
#include "infodesign/dmdc.hpp"

namespace infodesign {

/**
 * @brief Input-design problem over the next `horizon` steps.
 *
 * Dynamics live in planning coordinates of dimension d (full state, reduced
 * DMDc state, or d = 0 for pure input design). Future inputs are the decision
 * variables; states are eliminated through the condensed dynamics.
 */
struct PlanProblem {
    Matrix A;       //!< d x d
    Matrix B;       //!< d x m
    Matrix Z_past;  //!< (d + m) x k committed data columns
    Vector x_init;  //!< d, state at the first planned step
    int horizon = 1;
    Vector u_lo;
    Vector u_hi;
    Vector du_max;  //!< per-step slew bound, +inf disables
    Vector u_prev;  //!< last executed input, anchors the first slew constraint
    std::optional<Vector> x_lo;  //!< entries may be -inf
    std::optional<Vector> x_hi;  //!< entries may be +inf
    double beta = 1.0;
    double sigma = 1.0;
    std::optional<Vector> terminal_target;

    [[nodiscard]] Index d() const { return A.rows(); }
    [[nodiscard]] Index m() const { return B.cols(); }
    [[nodiscard]] Index num_inputs() const { return static_cast<Index>(horizon) * m(); }

    void validate() const;
};

/// Planning problem on the full least-squares model; constraints left for the caller.
PlanProblem plan_problem_from_estimate(const ModelEstimate& est, const DataMatrices& data);

/// Planning problem in reduced DMDc coordinates.
PlanProblem plan_problem_from_reduced(const ReducedModel& model, const DataMatrices& data, double sigma);

enum class SolverStatus { Optimal, MaxIter, Infeasible };
enum class PlanObjective { Sdp, Lp };

const char* to_string(SolverStatus s);
const char* to_string(PlanObjective o);

struct PlanResult {
    std::vector<Vector> inputs;            //!< horizon entries of size m
    std::vector<Vector> predicted_states;  //!< horizon + 1 entries of size d
    double objective_true = 0.0;           //!< tr(W^{-1}) at the solution
    double objective_surrogate = 0.0;      //!< tr(W_hat^{-1}) (SDP) or tr(W_hat) (LP)
    int ccp_iterations = 0;
    SolverStatus status = SolverStatus::Infeasible;
    std::vector<double> objective_history;  //!< accepted tr(W^{-1}) values, initial iterate first
    double optimality_residual = 0.0;       //!< KKT residual (SDP) or relative duality gap (LP)
    bool degenerate_direction = false;
    std::string message;
};

/// x_{k+1+t} = F[t] u + g[t] for t = 0..horizon, u stacked time-major (u[t*m + j]).
struct CondensedDynamics {
    std::vector<Matrix> F;
    std::vector<Vector> g;

    [[nodiscard]] Vector state(int t, const Vector& u) const { return F[t] * u + g[t]; }
};

CondensedDynamics condense_dynamics(const PlanProblem& problem);

/// W(Z) = sigma^{-2} Z Z^T.
Matrix information_matrix(const Matrix& Z, double sigma);

/// tr(W(Z)^{-1}); +inf when W(Z) is not positive definite.
double trace_inverse_information(const Matrix& Z, double sigma);

/// Affine minorant of W about Z_c: sigma^{-2}(Z_c Z_c^T + Z_c (Z - Z_c)^T + (Z - Z_c) Z_c^T).
class LinearizedInformation {
public:
    LinearizedInformation(Matrix Z_c, double sigma);

    [[nodiscard]] Matrix operator()(const Matrix& Z) const;
    [[nodiscard]] const Matrix& center() const { return Z_c_; }

private:
    Matrix Z_c_;
    double sigma_;
};

LinearizedInformation linearize_W(const Matrix& Z_c, double sigma);

/// [Z_past, z_{k+1}(u) .. z_T(u)] for a stacked future input vector.
Matrix stacked_data(const PlanProblem& problem, const CondensedDynamics& cd, const Vector& u);

/// Linear constraint set over the stacked inputs: bounds, G u <= h, E u = e.
struct LinearConstraints {
    Vector lower;
    Vector upper;
    Matrix G;
    Vector h;
    Matrix E;
    Vector e;
    bool empty_state_box = false;  //!< beta-inflated state box is empty at some step
};

LinearConstraints build_constraints(const PlanProblem& problem, const CondensedDynamics& cd);

/// Largest violation of the constraint set (0 when feasible).
double constraint_violation(const LinearConstraints& c, const Vector& u);

/// Smallest slack over inequality rows and bounds (negative when violated).
double constraint_margin(const LinearConstraints& c, const Vector& u);

Vector stack_inputs(const std::vector<Vector>& inputs);
std::vector<Vector> unstack_inputs(const Vector& u, Index m);

/// tr(W^{-1}) at the stacked input u.
double true_objective(const PlanProblem& problem, const Vector& u);
/// tr(W_hat^{-1}) at u, linearized at u_c.
double sdp_surrogate(const PlanProblem& problem, const Vector& u_c, const Vector& u);
/// tr(W_hat) at u, linearized at u_c.
double lp_surrogate(const PlanProblem& problem, const Vector& u_c, const Vector& u);

struct SdpOptions {
    double gap_tol = 1e-10;      //!< duality gap in units of the objective at the start point
    double newton_tol = 1e-12;   //!< half squared Newton decrement
    double barrier_growth = 10.0;
    int max_newton = 200;
};

/// One convex subproblem: minimize tr(W_hat^{-1}) about the stacked inputs u_c.
PlanResult solve_subproblem_sdp(const PlanProblem& problem, const Vector& u_c, const SdpOptions& opts = {});

/// One LP subproblem: maximize tr(W_hat) about u_c.
PlanResult solve_subproblem_lp(const PlanProblem& problem, const Vector& u_c);

struct CcpOptions {
    PlanObjective objective = PlanObjective::Sdp;
    int max_iter = 20;
    double tol = 1e-4;  //!< relative change of tr(W^{-1}) between accepted iterates
    SdpOptions sdp;
};

/// Convex-concave procedure from the hold-last-input iterate.
PlanResult ccp(const PlanProblem& problem, const CcpOptions& opts = {});

/// Hold-last-input plan clipped into the input box.
Vector hold_last_input(const PlanProblem& problem);

/**
 * @brief True when every pair of input channels is nearly collinear
 * (|cosine| > threshold over the record); zero channels count as collinear.
 * Always false for fewer than two channels.
 */
bool degenerate_direction(const std::vector<Vector>& inputs, double threshold = 0.99);

} // namespace infodesign
