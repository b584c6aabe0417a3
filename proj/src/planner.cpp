#include "infodesign/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "infodesign/lp_solver.hpp"

namespace infodesign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;

// sigma^2 W_hat(u) = base + sum_j u_j M[j]
struct AffineInformation {
    Matrix base;
    std::vector<Matrix> M;

    [[nodiscard]] Matrix at(const Vector& u) const {
        Matrix S = base;
        for (std::size_t j = 0; j < M.size(); ++j) S += u(static_cast<Index>(j)) * M[j];
        return 0.5 * (S + S.transpose());
    }
};

AffineInformation affine_information(const PlanProblem& p, const CondensedDynamics& cd, const Vector& u_c) {
    const Index d = p.d();
    const Index m = p.m();
    const Index D = d + m;
    const Index N = p.num_inputs();
    const Matrix Zc = stacked_data(p, cd, u_c);
    const Index k = p.Z_past.cols();

    AffineInformation info;
    info.base = p.Z_past * p.Z_past.transpose();
    info.M.assign(static_cast<std::size_t>(N), Matrix::Zero(D, D));
    for (int t = 0; t < p.horizon; ++t) {
        const Vector zbar = Zc.col(k + t);
        Vector c = Vector::Zero(D);
        c.head(d) = cd.g[t];
        info.base += zbar * c.transpose() + c * zbar.transpose() - zbar * zbar.transpose();
        // column j of G_t = [F_t; S_t]; S_t selects inputs of step t
        const Index live = static_cast<Index>(t + 1) * m;  // F_t vanishes beyond step t-1
        for (Index j = 0; j < live; ++j) {
            Vector gcol = Vector::Zero(D);
            gcol.head(d) = cd.F[t].col(j);
            if (j >= static_cast<Index>(t) * m) gcol(d + (j - static_cast<Index>(t) * m)) = 1.0;
            info.M[j] += zbar * gcol.transpose() + gcol * zbar.transpose();
        }
    }
    return info;
}

// Affine parametrization u = u0 + N w of the equality-constrained inputs.
struct EqualityReduction {
    Vector u0;
    Matrix N;
    bool consistent = true;
};

EqualityReduction reduce_equalities(const LinearConstraints& c, Index n) {
    EqualityReduction red;
    if (c.E.rows() == 0) {
        red.u0 = Vector::Zero(n);
        red.N = Matrix::Identity(n, n);
        return red;
    }
    Eigen::JacobiSVD<Matrix> svd(c.E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    Index rank = 0;
    while (rank < s.size() && s(rank) > 1e-10 * std::max(1.0, s(0))) ++rank;
    svd.setThreshold(1e-10);
    red.u0 = svd.solve(c.e);
    red.consistent = (c.E * red.u0 - c.e).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, c.e.cwiseAbs().maxCoeff());
    red.N = svd.matrixV().rightCols(n - rank);
    return red;
}

// Inequalities in reduced coordinates, rows normalized to unit length.
struct ReducedInequalities {
    Matrix G;
    Vector h;
    bool consistent = true;
};

ReducedInequalities reduce_inequalities(const LinearConstraints& c, const EqualityReduction& er) {
    const Index n = er.N.rows();
    std::vector<std::pair<Vector, double>> rows;
    for (Index j = 0; j < n; ++j) {
        if (std::isfinite(c.upper(j))) {
            Vector a = Vector::Zero(n);
            a(j) = 1.0;
            rows.emplace_back(a, c.upper(j));
        }
        if (std::isfinite(c.lower(j))) {
            Vector a = Vector::Zero(n);
            a(j) = -1.0;
            rows.emplace_back(a, -c.lower(j));
        }
    }
    for (Index i = 0; i < c.G.rows(); ++i) rows.emplace_back(c.G.row(i).transpose(), c.h(i));

    ReducedInequalities out;
    out.G.resize(0, er.N.cols());
    std::vector<Eigen::RowVectorXd> kept;
    std::vector<double> rhs;
    for (const auto& [a, b] : rows) {
        const Eigen::RowVectorXd ar = a.transpose() * er.N;
        const double br = b - a.dot(er.u0);
        const double norm = ar.norm();
        if (norm <= 1e-12 * std::max(1.0, a.norm())) {
            if (br < -1e-8 * std::max(1.0, std::abs(b))) out.consistent = false;
            continue;
        }
        kept.push_back(ar / norm);
        rhs.push_back(br / norm);
    }
    out.G.resize(static_cast<Index>(kept.size()), er.N.cols());
    out.h.resize(static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out.G.row(static_cast<Index>(i)) = kept[i];
        out.h(static_cast<Index>(i)) = rhs[i];
    }
    return out;
}

// Largest-margin point of {G w <= h}: maximize s s.t. G w + s <= h, s <= 1.
struct InteriorPoint {
    Vector w;
    double margin = -kInf;
};

InteriorPoint chebyshev_center(const ReducedInequalities& ri) {
    const Index nw = ri.G.cols();
    InteriorPoint ip;
    if (ri.G.rows() == 0) {
        ip.w = Vector::Zero(nw);
        ip.margin = 1.0;
        return ip;
    }
    LpProblem lp;
    lp.c = Vector::Zero(nw + 1);
    lp.c(nw) = -1.0;
    lp.A_ub.resize(ri.G.rows(), nw + 1);
    lp.A_ub << ri.G, Vector::Ones(ri.G.rows());
    lp.b_ub = ri.h;
    lp.A_eq.resize(0, nw + 1);
    lp.b_eq.resize(0);
    lp.lower = Vector::Constant(nw + 1, -kInf);
    lp.upper = Vector::Constant(nw + 1, kInf);
    lp.upper(nw) = 1.0;
    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::Optimal) return ip;
    ip.w = res.x.head(nw);
    ip.margin = (ri.h - ri.G * ip.w).minCoeff();
    return ip;
}

struct SubproblemSetup {
    CondensedDynamics cd;
    LinearConstraints cons;
    EqualityReduction er;
    ReducedInequalities ri;
    bool feasible_structure = true;
    std::string why;
};

SubproblemSetup setup(const PlanProblem& p) {
    SubproblemSetup s;
    s.cd = condense_dynamics(p);
    s.cons = build_constraints(p, s.cd);
    if (s.cons.empty_state_box) {
        s.feasible_structure = false;
        s.why = "beta-inflated state box is empty";
        return s;
    }
    s.er = reduce_equalities(s.cons, p.num_inputs());
    if (!s.er.consistent) {
        s.feasible_structure = false;
        s.why = "equality constraints are inconsistent";
        return s;
    }
    s.ri = reduce_inequalities(s.cons, s.er);
    if (!s.ri.consistent) {
        s.feasible_structure = false;
        s.why = "fixed inputs violate a bound";
    }
    return s;
}

Vector simulate_model(const PlanProblem& p, const std::vector<Vector>& inputs, std::vector<Vector>& states) {
    states.clear();
    Vector x = p.x_init;
    states.push_back(x);
    for (const Vector& u : inputs) {
        x = p.A * x + p.B * u;
        states.push_back(x);
    }
    return x;
}

PlanResult finalize(const PlanProblem& p, const LinearConstraints& cons, Vector u, SolverStatus status) {
    for (Index j = 0; j < u.size(); ++j) u(j) = std::clamp(u(j), cons.lower(j), cons.upper(j));
    PlanResult r;
    r.status = status;
    r.inputs = unstack_inputs(u, p.m());
    simulate_model(p, r.inputs, r.predicted_states);
    r.objective_true = true_objective(p, u);
    return r;
}

PlanResult infeasible_result(const std::string& why) {
    PlanResult r;
    r.status = SolverStatus::Infeasible;
    r.message = why;
    return r;
}

bool positive_definite(const Matrix& S) {
    Eigen::LLT<Matrix> llt(S);
    return llt.info() == Eigen::Success;
}

// Barrier method for min tr(S(w)^{-1}) over {G w <= h}, S affine and SPD on the path.
class BarrierSolver {
public:
    BarrierSolver(AffineInformation info, const ReducedInequalities& ri, const SdpOptions& opts)
        : info_(std::move(info)), G_(ri.G), h_(ri.h), opts_(opts) {}

    // Returns false if the start point is not strictly feasible with S > 0.
    bool solve(Vector& w, double& kkt) {
        if (!admissible(w)) return false;
        const Index nw = w.size();
        if (nw == 0) {
            kkt = 0.0;
            return true;
        }
        scale_ = 1.0 / objective(w);
        const double rows = static_cast<double>(G_.rows());
        double t = 1.0;
        Vector grad_last = Vector::Zero(nw);
        for (int outer = 0; outer < 60; ++outer) {
            for (int it = 0; it < opts_.max_newton; ++it) {
                Vector g;
                Matrix H;
                derivatives(w, t, g, H);
                grad_last = g;
                Eigen::LDLT<Matrix> ldlt(H);
                Vector dx = -ldlt.solve(g);
                if (!dx.allFinite()) {
                    H.diagonal().array() += 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
                    dx = -Eigen::LDLT<Matrix>(H).solve(g);
                }
                const double dec = -g.dot(dx);
                if (dec / 2.0 <= opts_.newton_tol) break;
                const double phi0 = barrier(w, t);
                double alpha = 1.0;
                while (alpha > 1e-16) {
                    const Vector trial = w + alpha * dx;
                    if (admissible(trial) && barrier(trial, t) <= phi0 - 0.25 * alpha * dec) break;
                    alpha *= 0.5;
                }
                if (alpha <= 1e-16) break;
                w += alpha * dx;
            }
            if (rows == 0.0 || rows / t < opts_.gap_tol) break;
            t *= opts_.barrier_growth;
        }
        // stationarity residual of the Lagrangian with lambda_i = 1/(t s_i), objective normalized
        kkt = std::max(grad_last.cwiseAbs().maxCoeff() / t, rows / t);
        return true;
    }

    [[nodiscard]] double objective(const Vector& w) const {
        Eigen::LLT<Matrix> llt(info_.at(w));
        const Matrix inv = llt.solve(Matrix::Identity(info_.base.rows(), info_.base.cols()));
        return inv.trace();
    }

private:
    [[nodiscard]] bool admissible(const Vector& w) const {
        if (G_.rows() > 0 && (h_ - G_ * w).minCoeff() <= 0.0) return false;
        return positive_definite(info_.at(w));
    }

    [[nodiscard]] double barrier(const Vector& w, double t) const {
        double phi = t * scale_ * objective(w);
        if (G_.rows() > 0) phi -= (h_ - G_ * w).array().log().sum();
        return phi;
    }

    void derivatives(const Vector& w, double t, Vector& g, Matrix& H) const {
        const Index nw = w.size();
        const Index D = info_.base.rows();
        Eigen::LLT<Matrix> llt(info_.at(w));
        const Matrix P = llt.solve(Matrix::Identity(D, D));
        const Matrix P2 = P * P;
        std::vector<Matrix> PMP(static_cast<std::size_t>(nw));
        std::vector<Matrix> PM(static_cast<std::size_t>(nw));
        g.resize(nw);
        for (Index i = 0; i < nw; ++i) {
            const Matrix& Mi = info_.M[static_cast<std::size_t>(i)];
            g(i) = -(Mi.cwiseProduct(P2)).sum();
            PM[i] = P * Mi;
            PMP[i] = PM[i] * P;
        }
        H.resize(nw, nw);
        for (Index i = 0; i < nw; ++i) {
            for (Index l = i; l < nw; ++l) {
                // d2/dw_i dw_l tr(S^{-1}) = 2 tr(P M_i P M_l P)
                const double v = 2.0 * PMP[i].cwiseProduct(PM[l].transpose()).sum();
                H(i, l) = v;
                H(l, i) = v;
            }
        }
        g *= t * scale_;
        H *= t * scale_;
        if (G_.rows() > 0) {
            const Vector inv_s = (h_ - G_ * w).cwiseInverse();
            g += G_.transpose() * inv_s;
            H += G_.transpose() * inv_s.array().square().matrix().asDiagonal() * G_;
        }
    }

    AffineInformation info_;
    Matrix G_;
    Vector h_;
    SdpOptions opts_;
    double scale_ = 1.0;
};

AffineInformation to_reduced(const AffineInformation& info, const EqualityReduction& er) {
    AffineInformation out;
    out.base = info.at(er.u0);
    const Index nw = er.N.cols();
    out.M.assign(static_cast<std::size_t>(nw), Matrix::Zero(info.base.rows(), info.base.cols()));
    for (Index i = 0; i < nw; ++i) {
        for (std::size_t j = 0; j < info.M.size(); ++j) {
            const double a = er.N(static_cast<Index>(j), i);
            if (a != 0.0) out.M[static_cast<std::size_t>(i)] += a * info.M[j];
        }
    }
    return out;
}

Vector feasible_start(const SubproblemSetup& s, bool& ok) {
    const InteriorPoint ip = chebyshev_center(s.ri);
    ok = ip.margin > -kFeasTol;
    if (!ok) return {};
    return s.er.u0 + s.er.N * ip.w;
}

} // namespace

const char* to_string(SolverStatus s) {
    switch (s) {
        case SolverStatus::Optimal: return "optimal";
        case SolverStatus::MaxIter: return "max_iter";
        case SolverStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

const char* to_string(PlanObjective o) { return o == PlanObjective::Sdp ? "sdp" : "lp"; }

void PlanProblem::validate() const {
    const Index dd = d();
    const Index mm = m();
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidInput, "plan problem: " + msg); };
    if (A.cols() != dd || B.rows() != dd) fail("A must be d x d and B must be d x m");
    if (Z_past.rows() != dd + mm) fail("Z_past must have d + m rows");
    if (x_init.size() != dd) fail("x_init must have dimension d");
    if (horizon < 1) fail("horizon must be at least 1");
    if (mm < 1) fail("at least one input channel is required");
    if (u_lo.size() != mm || u_hi.size() != mm || du_max.size() != mm || u_prev.size() != mm) {
        fail("u_lo, u_hi, du_max and u_prev must have dimension m");
    }
    for (Index j = 0; j < mm; ++j) {
        if (!std::isfinite(u_lo(j)) || !std::isfinite(u_hi(j))) fail("input bounds must be finite");
        if (u_lo(j) > u_hi(j)) fail("u_lo must not exceed u_hi");
        if (!(du_max(j) >= 0.0)) fail("du_max must be non-negative");
    }
    if ((x_lo && x_lo->size() != dd) || (x_hi && x_hi->size() != dd)) fail("state bounds must have dimension d");
    if (terminal_target && terminal_target->size() != dd) fail("terminal target must have dimension d");
    if (!(beta >= 0.0)) fail("beta must be non-negative");
    if (!(sigma > 0.0)) fail("sigma must be positive");
}

PlanProblem plan_problem_from_estimate(const ModelEstimate& est, const DataMatrices& data) {
    PlanProblem p;
    p.A = est.A_hat;
    p.B = est.B_hat;
    p.Z_past = data.Z;
    p.x_init = data.Xp.col(data.k() - 1);
    p.u_prev = data.U.col(data.k() - 1);
    p.sigma = est.sigma;
    const Index m = est.m();
    p.u_lo = Vector::Constant(m, -1.0);
    p.u_hi = Vector::Constant(m, 1.0);
    p.du_max = Vector::Constant(m, kInf);
    return p;
}

PlanProblem plan_problem_from_reduced(const ReducedModel& model, const DataMatrices& data, double sigma) {
    PlanProblem p;
    p.A = model.A_tilde;
    p.B = model.B_tilde;
    p.Z_past = reduced_stack(model, data);
    p.x_init = project_state(model, data.Xp.col(data.k() - 1));
    p.u_prev = data.U.col(data.k() - 1);
    p.sigma = sigma;
    const Index m = model.m();
    p.u_lo = Vector::Constant(m, -1.0);
    p.u_hi = Vector::Constant(m, 1.0);
    p.du_max = Vector::Constant(m, kInf);
    return p;
}

CondensedDynamics condense_dynamics(const PlanProblem& p) {
    const Index d = p.d();
    const Index m = p.m();
    const Index N = p.num_inputs();
    CondensedDynamics cd;
    cd.F.reserve(static_cast<std::size_t>(p.horizon) + 1);
    cd.g.reserve(static_cast<std::size_t>(p.horizon) + 1);
    cd.F.push_back(Matrix::Zero(d, N));
    cd.g.push_back(p.x_init);
    for (int t = 0; t < p.horizon; ++t) {
        Matrix F = p.A * cd.F.back();
        F.middleCols(static_cast<Index>(t) * m, m) += p.B;
        cd.F.push_back(std::move(F));
        cd.g.push_back(p.A * cd.g.back());
    }
    return cd;
}

Matrix information_matrix(const Matrix& Z, double sigma) { return (Z * Z.transpose()) / (sigma * sigma); }

double trace_inverse_information(const Matrix& Z, double sigma) {
    const Matrix ZZt = Z * Z.transpose();
    Eigen::LLT<Matrix> llt(ZZt);
    if (llt.info() != Eigen::Success) return kInf;
    return sigma * sigma * llt.solve(Matrix::Identity(ZZt.rows(), ZZt.cols())).trace();
}

LinearizedInformation::LinearizedInformation(Matrix Z_c, double sigma) : Z_c_(std::move(Z_c)), sigma_(sigma) {}

Matrix LinearizedInformation::operator()(const Matrix& Z) const {
    if (Z.rows() != Z_c_.rows() || Z.cols() != Z_c_.cols()) {
        throw Error(ErrorKind::InvalidInput, "linearized information: Z does not match the linearization point");
    }
    const Matrix D = Z - Z_c_;
    const Matrix cross = Z_c_ * D.transpose();
    return (Z_c_ * Z_c_.transpose() + cross + cross.transpose()) / (sigma_ * sigma_);
}

LinearizedInformation linearize_W(const Matrix& Z_c, double sigma) { return LinearizedInformation(Z_c, sigma); }

Matrix stacked_data(const PlanProblem& p, const CondensedDynamics& cd, const Vector& u) {
    const Index d = p.d();
    const Index m = p.m();
    const Index k = p.Z_past.cols();
    Matrix Z(d + m, k + p.horizon);
    Z.leftCols(k) = p.Z_past;
    for (int t = 0; t < p.horizon; ++t) {
        Z.col(k + t).head(d) = cd.state(t, u);
        Z.col(k + t).tail(m) = u.segment(static_cast<Index>(t) * m, m);
    }
    return Z;
}

LinearConstraints build_constraints(const PlanProblem& p, const CondensedDynamics& cd) {
    const Index d = p.d();
    const Index m = p.m();
    const Index N = p.num_inputs();
    const int H = p.horizon;

    LinearConstraints c;
    c.lower.resize(N);
    c.upper.resize(N);
    for (int t = 0; t < H; ++t) {
        c.lower.segment(static_cast<Index>(t) * m, m) = p.u_lo;
        c.upper.segment(static_cast<Index>(t) * m, m) = p.u_hi;
    }

    std::vector<std::pair<Eigen::RowVectorXd, double>> ineq;
    std::vector<std::pair<Eigen::RowVectorXd, double>> eq;

    // slew: |u_t - u_{t-1}| <= du_max, u_{-1} = u_prev; zero bound becomes an equality
    for (Index j = 0; j < m; ++j) {
        if (!std::isfinite(p.du_max(j))) continue;
        for (int t = 0; t < H; ++t) {
            Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(N);
            a(static_cast<Index>(t) * m + j) = 1.0;
            double rhs = 0.0;
            if (t == 0) {
                rhs = p.u_prev(j);
            } else {
                a(static_cast<Index>(t - 1) * m + j) = -1.0;
            }
            if (p.du_max(j) == 0.0) {
                eq.emplace_back(a, rhs);
            } else {
                ineq.emplace_back(a, rhs + p.du_max(j));
                ineq.emplace_back(-a, p.du_max(j) - rhs);
            }
        }
    }

    // beta-inflated state box on x_{k+2} .. x_{k+1+H}
    if (p.x_lo || p.x_hi) {
        const UncertaintyTrajectory unc = propagate_uncertainty(p.A, Matrix::Zero(d, d), p.sigma, H);
        for (int t = 1; t <= H; ++t) {
            const Vector& sd = unc.stddevs[static_cast<std::size_t>(t)];
            for (Index i = 0; i < d; ++i) {
                const double lo = p.x_lo ? (*p.x_lo)(i) + p.beta * sd(i) : -kInf;
                const double hi = p.x_hi ? (*p.x_hi)(i) - p.beta * sd(i) : kInf;
                if (lo > hi) c.empty_state_box = true;
                if (std::isfinite(hi)) ineq.emplace_back(cd.F[t].row(i), hi - cd.g[t](i));
                if (std::isfinite(lo)) ineq.emplace_back(-cd.F[t].row(i), cd.g[t](i) - lo);
            }
        }
    }

    if (p.terminal_target) {
        for (Index i = 0; i < d; ++i) eq.emplace_back(cd.F[H].row(i), (*p.terminal_target)(i) - cd.g[H](i));
    }

    c.G.resize(static_cast<Index>(ineq.size()), N);
    c.h.resize(static_cast<Index>(ineq.size()));
    for (std::size_t i = 0; i < ineq.size(); ++i) {
        c.G.row(static_cast<Index>(i)) = ineq[i].first;
        c.h(static_cast<Index>(i)) = ineq[i].second;
    }
    c.E.resize(static_cast<Index>(eq.size()), N);
    c.e.resize(static_cast<Index>(eq.size()));
    for (std::size_t i = 0; i < eq.size(); ++i) {
        c.E.row(static_cast<Index>(i)) = eq[i].first;
        c.e(static_cast<Index>(i)) = eq[i].second;
    }
    return c;
}

double constraint_violation(const LinearConstraints& c, const Vector& u) {
    double v = 0.0;
    v = std::max(v, (c.lower - u).maxCoeff());
    v = std::max(v, (u - c.upper).maxCoeff());
    if (c.G.rows() > 0) v = std::max(v, (c.G * u - c.h).maxCoeff());
    if (c.E.rows() > 0) v = std::max(v, (c.E * u - c.e).cwiseAbs().maxCoeff());
    return std::max(0.0, v);
}

double constraint_margin(const LinearConstraints& c, const Vector& u) {
    double margin = kInf;
    if (u.size() > 0) {
        margin = std::min((u - c.lower).minCoeff(), (c.upper - u).minCoeff());
    }
    if (c.G.rows() > 0) margin = std::min(margin, (c.h - c.G * u).minCoeff());
    return margin;
}

Vector stack_inputs(const std::vector<Vector>& inputs) {
    const Index m = inputs.empty() ? 0 : inputs.front().size();
    Vector u(static_cast<Index>(inputs.size()) * m);
    for (std::size_t t = 0; t < inputs.size(); ++t) u.segment(static_cast<Index>(t) * m, m) = inputs[t];
    return u;
}

std::vector<Vector> unstack_inputs(const Vector& u, Index m) {
    std::vector<Vector> out;
    if (m == 0) return out;
    for (Index t = 0; t < u.size() / m; ++t) out.push_back(u.segment(t * m, m));
    return out;
}

double true_objective(const PlanProblem& p, const Vector& u) {
    return trace_inverse_information(stacked_data(p, condense_dynamics(p), u), p.sigma);
}

double sdp_surrogate(const PlanProblem& p, const Vector& u_c, const Vector& u) {
    const CondensedDynamics cd = condense_dynamics(p);
    const Matrix S = affine_information(p, cd, u_c).at(u);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success) return kInf;
    return p.sigma * p.sigma * llt.solve(Matrix::Identity(S.rows(), S.cols())).trace();
}

double lp_surrogate(const PlanProblem& p, const Vector& u_c, const Vector& u) {
    const CondensedDynamics cd = condense_dynamics(p);
    return affine_information(p, cd, u_c).at(u).trace() / (p.sigma * p.sigma);
}

Vector hold_last_input(const PlanProblem& p) {
    const Index m = p.m();
    Vector u(p.num_inputs());
    const Vector held = p.u_prev.cwiseMax(p.u_lo).cwiseMin(p.u_hi);
    for (int t = 0; t < p.horizon; ++t) u.segment(static_cast<Index>(t) * m, m) = held;
    return u;
}

PlanResult solve_subproblem_sdp(const PlanProblem& p, const Vector& u_c, const SdpOptions& opts) {
    p.validate();
    if (u_c.size() != p.num_inputs()) throw Error(ErrorKind::InvalidInput, "linearization point has wrong size");
    const SubproblemSetup s = setup(p);
    if (!s.feasible_structure) return infeasible_result(s.why);

    const AffineInformation info = affine_information(p, s.cd, u_c);
    if (!positive_definite(info.at(u_c))) {
        throw Error(ErrorKind::Numerical, "W_hat is not positive definite at the linearization point");
    }
    const AffineInformation red = to_reduced(info, s.er);

    // Start: u_c if strictly inside, else a blend towards the Chebyshev center.
    const Index nw = s.er.N.cols();
    Vector w_c = s.er.N.transpose() * (u_c - s.er.u0);
    Vector w0 = w_c;
    auto strictly_inside = [&](const Vector& w) {
        return s.ri.G.rows() == 0 || (s.ri.h - s.ri.G * w).minCoeff() > 0.0;
    };
    const bool on_affine_set = (s.er.u0 + s.er.N * w_c - u_c).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, u_c.cwiseAbs().maxCoeff());
    if (nw > 0 && !(on_affine_set && strictly_inside(w_c) && positive_definite(red.at(w_c)))) {
        const InteriorPoint ip = chebyshev_center(s.ri);
        if (ip.margin < -kFeasTol) return infeasible_result("no input sequence satisfies the constraints");
        if (ip.margin <= kFeasTol) {
            return infeasible_result("feasible set has empty interior; the barrier method needs a strictly feasible point");
        }
        double theta = 1.0;
        bool found = false;
        for (int i = 0; i < 60 && !found; ++i, theta *= 0.5) {
            w0 = w_c + theta * (ip.w - w_c);
            found = strictly_inside(w0) && positive_definite(red.at(w0));
        }
        if (!found) throw Error(ErrorKind::Numerical, "barrier failure: no strictly feasible start with W_hat > 0");
    }

    BarrierSolver solver(red, s.ri, opts);
    Vector w = w0;
    double kkt = 0.0;
    if (!solver.solve(w, kkt)) throw Error(ErrorKind::Numerical, "barrier failure: W_hat lost definiteness");

    const Vector u = s.er.u0 + s.er.N * w;
    PlanResult r = finalize(p, s.cons, u, SolverStatus::Optimal);
    r.objective_surrogate = sdp_surrogate(p, u_c, stack_inputs(r.inputs));
    r.optimality_residual = kkt;
    r.ccp_iterations = 1;
    return r;
}

PlanResult solve_subproblem_lp(const PlanProblem& p, const Vector& u_c) {
    p.validate();
    if (u_c.size() != p.num_inputs()) throw Error(ErrorKind::InvalidInput, "linearization point has wrong size");
    const SubproblemSetup s = setup(p);
    if (!s.feasible_structure) return infeasible_result(s.why);

    const AffineInformation info = affine_information(p, s.cd, u_c);
    const Index N = p.num_inputs();
    LpProblem lp;
    lp.c.resize(N);
    for (Index j = 0; j < N; ++j) lp.c(j) = -info.M[static_cast<std::size_t>(j)].trace();
    lp.A_ub = s.cons.G;
    lp.b_ub = s.cons.h;
    lp.A_eq = s.cons.E;
    lp.b_eq = s.cons.e;
    lp.lower = s.cons.lower;
    lp.upper = s.cons.upper;
    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) return infeasible_result("no input sequence satisfies the constraints");
    if (res.status == LpStatus::Unbounded) {
        throw Error(ErrorKind::Numerical, "LP subproblem reported unbounded over a compact feasible set");
    }
    if (res.status != LpStatus::Optimal) throw Error(ErrorKind::Numerical, "LP subproblem hit the iteration limit");

    PlanResult r = finalize(p, s.cons, res.x, SolverStatus::Optimal);
    r.objective_surrogate = lp_surrogate(p, u_c, stack_inputs(r.inputs));
    r.optimality_residual = std::max({res.duality_gap, res.dual_residual, res.primal_residual});
    r.ccp_iterations = 1;
    r.degenerate_direction = degenerate_direction(r.inputs);
    return r;
}

PlanResult ccp(const PlanProblem& p, const CcpOptions& opts) {
    p.validate();
    if (opts.max_iter < 1) throw Error(ErrorKind::InvalidInput, "ccp: max_iter must be at least 1");
    const SubproblemSetup s = setup(p);
    if (!s.feasible_structure) return infeasible_result(s.why);

    Vector u_c = hold_last_input(p);
    if (constraint_violation(s.cons, u_c) > kFeasTol) {
        bool ok = false;
        u_c = feasible_start(s, ok);
        if (!ok) return infeasible_result("no input sequence satisfies the constraints");
    }
    double f_c = true_objective(p, u_c);
    if (!std::isfinite(f_c)) {
        throw RankDeficientError(numerical_rank(stacked_data(p, s.cd, u_c)), p.d() + p.m(),
                                 "ccp: stacked data at the initial iterate is not full row rank");
    }

    std::optional<PlanResult> best;
    std::vector<double> history{f_c};
    bool converged = false;
    int iterations = 0;

    for (int it = 1; it <= opts.max_iter; ++it) {
        PlanResult sub = opts.objective == PlanObjective::Sdp ? solve_subproblem_sdp(p, u_c, opts.sdp)
                                                              : solve_subproblem_lp(p, u_c);
        iterations = it;
        if (sub.status == SolverStatus::Infeasible) {
            if (it == 1) return sub;
            break;
        }
        const double f_new = sub.objective_true;
        const double rel = std::abs(f_new - f_c) / std::max(std::abs(f_c), std::numeric_limits<double>::min());
        if (opts.objective == PlanObjective::Sdp && best && f_new > f_c) {
            // uphill by solver tolerance: the previous iterate stands, converged only if the step was small
            converged = rel < opts.tol;
            break;
        }
        history.push_back(f_new);
        u_c = stack_inputs(sub.inputs);
        f_c = f_new;
        if (!best || f_new <= best->objective_true) best = std::move(sub);
        if (rel < opts.tol) {
            converged = true;
            break;
        }
    }

    PlanResult out = std::move(*best);
    out.objective_history = std::move(history);
    out.ccp_iterations = iterations;
    out.status = converged ? SolverStatus::Optimal : SolverStatus::MaxIter;
    if (opts.objective == PlanObjective::Lp) out.degenerate_direction = degenerate_direction(out.inputs);
    return out;
}

bool degenerate_direction(const std::vector<Vector>& inputs, double threshold) {
    if (inputs.empty()) return false;
    const Index m = inputs.front().size();
    if (m < 2) return false;
    Matrix U(m, static_cast<Index>(inputs.size()));
    for (std::size_t t = 0; t < inputs.size(); ++t) U.col(static_cast<Index>(t)) = inputs[t];
    for (Index a = 0; a < m; ++a) {
        for (Index b = a + 1; b < m; ++b) {
            const double na = U.row(a).norm();
            const double nb = U.row(b).norm();
            if (na == 0.0 || nb == 0.0) continue;
            if (std::abs(U.row(a).dot(U.row(b))) / (na * nb) <= threshold) return false;
        }
    }
    return true;
}

} // namespace infodesign
