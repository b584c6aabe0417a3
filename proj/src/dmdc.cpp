#include "infodesign/dmdc.hpp"

#include <algorithm>
#include <sstream>

namespace infodesign {

namespace {

constexpr double kRankTol = 1e-12;

Index rank_from_singular_values(const Vector& s) {
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    Index r = 0;
    while (r < s.size() && s(r) > kRankTol * s(0)) ++r;
    return r;
}

Index energy_rank(const Vector& s, double energy) {
    const Index rank = rank_from_singular_values(s);
    if (rank == 0) return 0;
    const double total = s.head(rank).squaredNorm();
    double cum = 0.0;
    for (Index i = 0; i < rank; ++i) {
        cum += s(i) * s(i);
        // slack absorbs rounding when energy == 1
        if (cum >= energy * total * (1.0 - 1e-13)) return i + 1;
    }
    return rank;
}

} // namespace

ReducedModel reduce(const DataMatrices& data, Index p, Index r) {
    const Index n = data.n();
    const Index m = data.m();
    const Index k = data.k();
    if (r < 1 || r > n) throw Error(ErrorKind::InvalidInput, "reduce: r must satisfy 1 <= r <= n");
    if (p < 1 || p > n + m) throw Error(ErrorKind::InvalidInput, "reduce: p must satisfy 1 <= p <= n + m");
    if (r > p) throw Error(ErrorKind::InvalidInput, "reduce: r must not exceed p");
    if (k < p) {
        std::ostringstream os;
        os << "reduce: p = " << p << " exceeds the number of samples k = " << k;
        throw TruncationError(std::min(k, n + m), os.str());
    }

    Eigen::BDCSVD<Matrix> zsvd(data.Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index zrank = rank_from_singular_values(zsvd.singularValues());
    if (p > zrank) {
        std::ostringstream os;
        os << "reduce: input-space rank p = " << p << " exceeds numerical rank " << zrank << " of Z";
        throw TruncationError(zrank, os.str());
    }
    Eigen::BDCSVD<Matrix> xsvd(data.Xp, Eigen::ComputeThinU);
    const Index xrank = rank_from_singular_values(xsvd.singularValues());
    if (r > xrank) {
        std::ostringstream os;
        os << "reduce: output-space rank r = " << r << " exceeds numerical rank " << xrank << " of X'";
        throw TruncationError(xrank, os.str());
    }

    ReducedModel red;
    red.p = p;
    red.r = r;
    const Matrix Ut = zsvd.matrixU().leftCols(p);
    red.U_tilde_1 = Ut.topRows(n);
    red.U_tilde_2 = Ut.bottomRows(m);
    red.Sigma_tilde = zsvd.singularValues().head(p);
    red.V_tilde = zsvd.matrixV().leftCols(p);
    red.U_hat = xsvd.matrixU().leftCols(r);

    // U_hat^T X' V_tilde Sigma_tilde^{-1}, shared by both operators.
    const Matrix core = red.U_hat.transpose() * data.Xp * red.V_tilde * red.Sigma_tilde.asDiagonal().inverse();
    red.A_tilde = core * red.U_tilde_1.transpose() * red.U_hat;
    red.B_tilde = core * red.U_tilde_2.transpose();
    return red;
}

Vector project_state(const ReducedModel& model, const Vector& x) {
    if (x.size() != model.n()) throw Error(ErrorKind::InvalidInput, "project_state: dimension mismatch");
    return model.U_hat.transpose() * x;
}

Vector lift_state(const ReducedModel& model, const Vector& x_tilde) {
    if (x_tilde.size() != model.r) throw Error(ErrorKind::InvalidInput, "lift_state: dimension mismatch");
    return model.U_hat * x_tilde;
}

std::pair<Index, Index> choose_ranks(const DataMatrices& data, double energy) {
    if (!(energy > 0.0 && energy <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "choose_ranks: energy must lie in (0, 1]");
    }
    const Index p = energy_rank(Eigen::BDCSVD<Matrix>(data.Z).singularValues(), energy);
    const Index r = energy_rank(Eigen::BDCSVD<Matrix>(data.Xp).singularValues(), energy);
    return {p, std::min(r, p)};
}

Matrix reduced_stack(const ReducedModel& model, const DataMatrices& data) {
    Matrix Zt(model.r + data.m(), data.k());
    Zt.topRows(model.r) = model.U_hat.transpose() * data.X;
    Zt.bottomRows(data.m()) = data.U;
    return Zt;
}

Matrix reduced_gamma(const ReducedModel& model, const DataMatrices& data, double sigma, const EstimateOptions& opts) {
    return covariance_factor(reduced_stack(model, data), sigma, opts);
}

std::pair<Matrix, Matrix> lifted_operators(const ReducedModel& model) {
    return {model.U_hat * model.A_tilde * model.U_hat.transpose(), model.U_hat * model.B_tilde};
}

} // namespace infodesign
