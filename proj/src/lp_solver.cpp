#include "infodesign/lp_solver.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace infodesign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shift/split map x = offset + T y with y >= 0.
struct VariableMap {
    Matrix T;
    Vector offset;
    std::vector<Index> bounded;  // y columns carrying an upper-bound row
    std::vector<double> bound_width;
};

VariableMap map_variables(const Vector& lower, const Vector& upper) {
    const Index n = lower.size();
    Index ny = 0;
    for (Index j = 0; j < n; ++j) ny += (std::isfinite(lower(j)) || std::isfinite(upper(j))) ? 1 : 2;

    VariableMap vm;
    vm.T = Matrix::Zero(n, ny);
    vm.offset = Vector::Zero(n);
    Index col = 0;
    for (Index j = 0; j < n; ++j) {
        if (std::isfinite(lower(j))) {
            vm.offset(j) = lower(j);
            vm.T(j, col) = 1.0;
            if (std::isfinite(upper(j))) {
                vm.bounded.push_back(col);
                vm.bound_width.push_back(upper(j) - lower(j));
            }
            ++col;
        } else if (std::isfinite(upper(j))) {
            vm.offset(j) = upper(j);
            vm.T(j, col++) = -1.0;
        } else {
            vm.T(j, col++) = 1.0;
            vm.T(j, col++) = -1.0;
        }
    }
    return vm;
}

class Tableau {
public:
    Tableau(Index rows, Index cols) : tab_(Matrix::Zero(rows + 1, cols + 1)), rows_(rows), cols_(cols) {}

    Matrix& data() { return tab_; }
    [[nodiscard]] Index rows() const { return rows_; }
    [[nodiscard]] Index cols() const { return cols_; }
    double& rhs(Index i) { return tab_(i, cols_); }
    double& cost(Index j) { return tab_(rows_, j); }

    void pivot(Index r, Index j) {
        tab_.row(r) /= tab_(r, j);
        Vector colj = tab_.col(j);
        colj(r) = 0.0;
        const Eigen::RowVectorXd rowr = tab_.row(r);
        tab_.noalias() -= colj * rowr;
        tab_.col(j).setZero();
        tab_(r, j) = 1.0;
        for (Index i = 0; i < rows_; ++i) {
            if (tab_(i, cols_) < 0.0 && tab_(i, cols_) > -1e-12) tab_(i, cols_) = 0.0;
        }
    }

private:
    Matrix tab_;
    Index rows_;
    Index cols_;
};

LpStatus iterate(Tableau& tab, std::vector<Index>& basis, const std::vector<bool>& allowed,
                 const LpOptions& opts, int max_iter, int& iterations) {
    int degenerate_streak = 0;
    while (true) {
        if (iterations >= max_iter) return LpStatus::IterationLimit;
        const bool bland = degenerate_streak > 25;

        Index enter = -1;
        double best = -opts.optimality_tol;
        for (Index j = 0; j < tab.cols(); ++j) {
            if (!allowed[j]) continue;
            const double d = tab.cost(j);
            if (d < best) {
                enter = j;
                best = d;
                if (bland) break;
            }
        }
        if (enter < 0) return LpStatus::Optimal;

        Index leave = -1;
        double ratio = kInf;
        for (Index i = 0; i < tab.rows(); ++i) {
            const double a = tab.data()(i, enter);
            if (a <= opts.pivot_tol) continue;
            const double q = tab.rhs(i) / a;
            if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis[i] < basis[leave])) {
                ratio = q;
                leave = i;
            }
        }
        if (leave < 0) return LpStatus::Unbounded;

        degenerate_streak = ratio <= 1e-13 ? degenerate_streak + 1 : 0;
        tab.pivot(leave, enter);
        basis[leave] = enter;
        ++iterations;
    }
}

} // namespace

LpResult solve_lp(const LpProblem& lp, const LpOptions& opts) {
    const Index n = lp.c.size();
    const Vector lower = lp.lower.size() == n ? lp.lower : Vector::Constant(n, -kInf);
    const Vector upper = lp.upper.size() == n ? lp.upper : Vector::Constant(n, kInf);
    if (lp.A_ub.rows() != lp.b_ub.size() || lp.A_eq.rows() != lp.b_eq.size() ||
        (lp.A_ub.rows() > 0 && lp.A_ub.cols() != n) || (lp.A_eq.rows() > 0 && lp.A_eq.cols() != n)) {
        throw Error(ErrorKind::InvalidInput, "solve_lp: constraint blocks do not match the variable count");
    }

    LpResult res;
    for (Index j = 0; j < n; ++j) {
        if (lower(j) > upper(j)) return res;  // empty box
    }

    const VariableMap vm = map_variables(lower, upper);
    const Index ny = vm.T.cols();

    // Inequality rows (original, then bound rows) and equality rows over y.
    const Index n_bound = static_cast<Index>(vm.bounded.size());
    Matrix Gub(lp.A_ub.rows() + n_bound, ny);
    Vector hub(Gub.rows());
    if (lp.A_ub.rows() > 0) {
        Gub.topRows(lp.A_ub.rows()) = lp.A_ub * vm.T;
        hub.head(lp.A_ub.rows()) = lp.b_ub - lp.A_ub * vm.offset;
    }
    for (Index b = 0; b < n_bound; ++b) {
        Gub.row(lp.A_ub.rows() + b).setZero();
        Gub(lp.A_ub.rows() + b, vm.bounded[b]) = 1.0;
        hub(lp.A_ub.rows() + b) = vm.bound_width[b];
    }
    Matrix Geq = lp.A_eq.rows() > 0 ? Matrix(lp.A_eq * vm.T) : Matrix(0, ny);
    Vector heq = lp.A_eq.rows() > 0 ? Vector(lp.b_eq - lp.A_eq * vm.offset) : Vector(0);

    // Scale rows; drop empty rows after checking them.
    struct Row {
        Eigen::RowVectorXd a;
        double b;
        bool inequality;
    };
    std::vector<Row> rows;
    auto add_rows = [&](const Matrix& G, const Vector& h, bool ineq) {
        for (Index i = 0; i < G.rows(); ++i) {
            const double s = G.row(i).cwiseAbs().maxCoeff();
            if (s == 0.0) {
                const bool ok = ineq ? h(i) >= -opts.feasibility_tol : std::abs(h(i)) <= opts.feasibility_tol;
                if (!ok) return false;
                continue;
            }
            rows.push_back({G.row(i) / s, h(i) / s, ineq});
        }
        return true;
    };
    if (ny == 0) {
        // every row is constant
        for (Index i = 0; i < hub.size(); ++i)
            if (hub(i) < -opts.feasibility_tol) return res;
        for (Index i = 0; i < heq.size(); ++i)
            if (std::abs(heq(i)) > opts.feasibility_tol) return res;
    } else if (!add_rows(Gub, hub, true) || !add_rows(Geq, heq, false)) {
        return res;
    }

    const Index R = static_cast<Index>(rows.size());
    Index n_slack = 0;
    for (const Row& row : rows) n_slack += row.inequality ? 1 : 0;
    std::vector<Index> art_rows;
    for (Index i = 0; i < R; ++i) {
        if (!rows[i].inequality || rows[i].b < 0.0) art_rows.push_back(i);
    }
    const Index n_art = static_cast<Index>(art_rows.size());
    const Index ncols = ny + n_slack + n_art;

    Tableau tab(R, ncols);
    std::vector<Index> basis(R, -1);
    std::vector<bool> is_art(ncols, false);
    {
        Index slack = ny;
        Index art = ny + n_slack;
        for (Index i = 0; i < R; ++i) {
            const double sign = rows[i].b < 0.0 ? -1.0 : 1.0;
            tab.data().row(i).head(ny) = sign * rows[i].a;
            tab.rhs(i) = sign * rows[i].b;
            if (rows[i].inequality) {
                tab.data()(i, slack) = sign;
                if (sign > 0.0) basis[i] = slack;
                ++slack;
            }
            if (basis[i] < 0) {
                tab.data()(i, art) = 1.0;
                is_art[art] = true;
                basis[i] = art++;
            }
        }
    }
    const Matrix A0 = tab.data().topLeftCorner(R, ncols);
    const Vector b0 = tab.data().col(ncols).head(R);

    Vector c_full = Vector::Zero(ncols);
    c_full.head(ny) = vm.T.transpose() * lp.c;
    const double c0 = lp.c.dot(vm.offset);

    const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(50 * (R + ncols) + 100);
    std::vector<bool> allowed(ncols, true);

    if (n_art > 0) {
        tab.data().row(R).setZero();
        for (Index i : art_rows) tab.data().row(R) -= tab.data().row(i);
        for (Index j = 0; j < ncols; ++j)
            if (is_art[j]) tab.cost(j) = 0.0;
        const LpStatus st = iterate(tab, basis, allowed, opts, max_iter, res.iterations);
        if (st == LpStatus::IterationLimit) {
            res.status = st;
            return res;
        }
        const double infeas = -tab.data()(R, ncols);
        if (infeas > opts.feasibility_tol * std::max(1.0, b0.cwiseAbs().sum())) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Pivot zero-level artificials out of the basis where possible.
        for (Index i = 0; i < R; ++i) {
            if (!is_art[basis[i]]) continue;
            Index best = -1;
            double mag = 1e-9;
            for (Index j = 0; j < ncols; ++j) {
                if (is_art[j]) continue;
                if (std::abs(tab.data()(i, j)) > mag) {
                    mag = std::abs(tab.data()(i, j));
                    best = j;
                }
            }
            if (best >= 0) {
                tab.pivot(i, best);
                basis[i] = best;
            }
        }
        for (Index j = 0; j < ncols; ++j) allowed[j] = !is_art[j];
    }

    tab.data().row(R).setZero();
    tab.data().row(R).head(ncols) = c_full.transpose();
    for (Index i = 0; i < R; ++i) {
        const double cb = c_full(basis[i]);
        if (cb != 0.0) tab.data().row(R) -= cb * tab.data().row(i);
    }
    const LpStatus st = iterate(tab, basis, allowed, opts, max_iter, res.iterations);
    if (st != LpStatus::Optimal) {
        res.status = st;
        return res;
    }

    // Certificate from the final basis against the untouched standard form.
    Vector xs = Vector::Zero(ncols);
    Vector pi = Vector::Zero(R);
    if (R > 0) {
        Matrix B(R, R);
        Vector cB(R);
        for (Index i = 0; i < R; ++i) {
            B.col(i) = A0.col(basis[i]);
            cB(i) = c_full(basis[i]);
        }
        Eigen::FullPivLU<Matrix> lu(B);
        Vector xb = lu.solve(b0);
        if (!xb.allFinite() || xb.minCoeff() < -1e-7) xb = tab.data().col(ncols).head(R);
        for (Index i = 0; i < R; ++i) xs(basis[i]) = std::max(0.0, xb(i));
        pi = lu.transpose().solve(cB);
        if (!pi.allFinite()) pi.setZero();
    }
    const Vector y = xs.head(ny);
    res.x = vm.offset + vm.T * y;
    for (Index j = 0; j < n; ++j) {
        if (std::isfinite(lower(j))) res.x(j) = std::max(res.x(j), lower(j));
        if (std::isfinite(upper(j))) res.x(j) = std::min(res.x(j), upper(j));
    }
    res.objective = lp.c.dot(res.x);
    res.dual_objective = b0.dot(pi) + c0;
    res.duality_gap = std::abs(res.objective - res.dual_objective) / std::max(1.0, std::abs(res.objective));

    double dual_res = 0.0;
    for (Index j = 0; j < ncols; ++j) {
        if (is_art[j]) continue;
        dual_res = std::max(dual_res, -(c_full(j) - A0.col(j).dot(pi)));
    }
    res.dual_residual = dual_res;

    double primal_res = 0.0;
    if (lp.A_ub.rows() > 0) primal_res = std::max(primal_res, (lp.A_ub * res.x - lp.b_ub).maxCoeff());
    if (lp.A_eq.rows() > 0) primal_res = std::max(primal_res, (lp.A_eq * res.x - lp.b_eq).cwiseAbs().maxCoeff());
    res.primal_residual = std::max(0.0, primal_res);
    res.status = LpStatus::Optimal;
    return res;
}

} // namespace infodesign
