#include "infodesign/core_model.hpp"

#include <cmath>
#include <sstream>

namespace infodesign {

void Trajectory::validate() const {
    if (states.size() < 2) {
        throw Error(ErrorKind::InvalidInput, "trajectory needs at least two states");
    }
    if (inputs.size() + 1 != states.size()) {
        std::ostringstream os;
        os << "trajectory has " << states.size() << " states but " << inputs.size()
           << " inputs; expected exactly one more state than inputs";
        throw Error(ErrorKind::InvalidInput, os.str());
    }
    const Index n = states.front().size();
    if (n < 1) throw Error(ErrorKind::InvalidInput, "state dimension must be at least 1");
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i].size() != n) {
            std::ostringstream os;
            os << "state " << i << " has dimension " << states[i].size() << ", expected " << n;
            throw Error(ErrorKind::InvalidInput, os.str());
        }
    }
    const Index m = input_dim();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != m) {
            std::ostringstream os;
            os << "input " << i << " has dimension " << inputs[i].size() << ", expected " << m;
            throw Error(ErrorKind::InvalidInput, os.str());
        }
    }
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInput, "sample period dt must be positive");
}

Matrix ModelEstimate::theta() const {
    Matrix T(A_hat.rows(), A_hat.cols() + B_hat.cols());
    T << A_hat, B_hat;
    return T;
}

DataMatrices assemble_data(const Trajectory& traj) {
    traj.validate();
    const Index n = traj.state_dim();
    const Index m = traj.input_dim();
    const Index k = traj.steps();

    DataMatrices d;
    d.X.resize(n, k);
    d.Xp.resize(n, k);
    d.U.resize(m, k);
    for (Index j = 0; j < k; ++j) {
        d.X.col(j) = traj.states[j];
        d.Xp.col(j) = traj.states[j + 1];
        d.U.col(j) = traj.inputs[j];
    }
    d.Z.resize(n + m, k);
    d.Z.topRows(n) = d.X;
    d.Z.bottomRows(m) = d.U;
    return d;
}

DataMatrices append_data(const DataMatrices& a, const DataMatrices& b) {
    if (a.n() != b.n() || a.m() != b.m()) {
        throw Error(ErrorKind::InvalidInput, "cannot append data of different dimensions");
    }
    auto hcat = [](const Matrix& l, const Matrix& r) {
        Matrix out(l.rows(), l.cols() + r.cols());
        out << l, r;
        return out;
    };
    return DataMatrices{hcat(a.X, b.X), hcat(a.Xp, b.Xp), hcat(a.U, b.U), hcat(a.Z, b.Z)};
}

Index numerical_rank(const Matrix& M, double rel_tol) {
    if (M.size() == 0) return 0;
    Eigen::BDCSVD<Matrix> svd(M);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
    return r;
}

namespace {

// Thin SVD of Z with rank/conditioning checks shared by the estimate and Gamma.
struct CheckedSvd {
    Matrix U;
    Vector s;
    Matrix V;
};

CheckedSvd checked_svd(const Matrix& Z, const EstimateOptions& opts) {
    const Index rows = Z.rows();
    const Index k = Z.cols();
    if (k < rows) {
        std::ostringstream os;
        os << "Z Z^T is rank deficient: " << k << " samples for " << rows
           << " regressors (numerical rank at most " << k << ")";
        throw RankDeficientError(k, rows, os.str());
    }
    Eigen::BDCSVD<Matrix> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Index rank = 0;
    if (rows > 0 && s(0) > 0.0) {
        while (rank < s.size() && s(rank) > opts.singular_tol * s(0)) ++rank;
    }
    if (rank < rows) {
        std::ostringstream os;
        os << "Z Z^T is rank deficient: numerical rank " << rank << " of " << rows;
        throw RankDeficientError(rank, rows, os.str());
    }
    if (rows > 0) {
        const double cond = (s(0) / s(rows - 1)) * (s(0) / s(rows - 1));
        if (cond > opts.condition_cap) {
            std::ostringstream os;
            os << "Z Z^T is ill-conditioned (condition number " << cond << " exceeds cap "
               << opts.condition_cap << "); numerical rank " << rank << " of " << rows;
            throw RankDeficientError(rank, rows, os.str());
        }
    }
    return {svd.matrixU(), s, svd.matrixV()};
}

Matrix gamma_from_svd(const CheckedSvd& svd, double sigma) {
    const Vector inv_s2 = svd.s.array().square().inverse();
    Matrix G = svd.U * inv_s2.asDiagonal() * svd.U.transpose();
    G = (0.5 * (G + G.transpose())).eval();
    return sigma * sigma * G;
}

} // namespace

ModelEstimate estimate_theta(const DataMatrices& data, double sigma, const EstimateOptions& opts) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorKind::InvalidInput, "noise scale sigma must be positive and finite");
    }
    const CheckedSvd svd = checked_svd(data.Z, opts);
    const Matrix theta = data.Xp * svd.V * svd.s.asDiagonal().inverse() * svd.U.transpose();

    ModelEstimate est;
    est.A_hat = theta.leftCols(data.n());
    est.B_hat = theta.rightCols(data.m());
    est.sigma = sigma;
    est.Gamma = gamma_from_svd(svd, sigma);
    return est;
}

double estimate_noise_sigma(const DataMatrices& data, const ModelEstimate& est) {
    const Matrix resid = est.theta() * data.Z - data.Xp;
    return std::sqrt(resid.squaredNorm() / static_cast<double>(data.n() * data.k()));
}

Matrix covariance_factor(const Matrix& Z, double sigma, const EstimateOptions& opts) {
    return gamma_from_svd(checked_svd(Z, opts), sigma);
}

double cov_theta_trace(const Matrix& Gamma, Index n) { return static_cast<double>(n) * Gamma.trace(); }

double cov_theta_trace(const ModelEstimate& est) { return cov_theta_trace(est.Gamma, est.n()); }

double rmse(const Matrix& Gamma, Index n, Index m) {
    return std::sqrt(cov_theta_trace(Gamma, n) / static_cast<double>(n * (n + m)));
}

double rmse(const ModelEstimate& est) { return rmse(est.Gamma, est.n(), est.m()); }

UncertaintyTrajectory propagate_uncertainty(const Matrix& A, const Matrix& Sigma0, double sigma, int steps) {
    if (A.rows() != A.cols() || Sigma0.rows() != A.rows() || Sigma0.cols() != A.cols()) {
        throw Error(ErrorKind::InvalidInput, "propagate_uncertainty: A and Sigma0 must be square and conformant");
    }
    if (steps < 0) throw Error(ErrorKind::InvalidInput, "propagate_uncertainty: steps must be non-negative");

    const Index n = A.rows();
    UncertaintyTrajectory out;
    out.covariances.reserve(static_cast<std::size_t>(steps) + 1);
    out.stddevs.reserve(static_cast<std::size_t>(steps) + 1);

    Matrix S = (0.5 * (Sigma0 + Sigma0.transpose())).eval();
    for (int t = 0; t <= steps; ++t) {
        if (t > 0) {
            S = A * S * A.transpose() + sigma * sigma * Matrix::Identity(n, n);
            S = (0.5 * (S + S.transpose())).eval();
        }
        out.covariances.push_back(S);
        out.stddevs.push_back(S.diagonal().cwiseMax(0.0).cwiseSqrt());
    }
    return out;
}

KroneckerCheck verify_kronecker_identity(const DataMatrices& data) {
    const Index n = data.n();
    const Index q = data.Z.rows();
    const Index k = data.k();
    if (n * q > kKroneckerMaxParams) {
        std::ostringstream os;
        os << "Kronecker check needs n(n+m) <= " << kKroneckerMaxParams << ", got " << n * q;
        throw Error(ErrorKind::Size, os.str());
    }

    // Row (i, j) of Phi regresses output j of sample i on z_i, placed in block j.
    Matrix Phi = Matrix::Zero(k * n, n * q);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < n; ++j) {
            Phi.block(i * n + j, j * q, 1, q) = data.Z.col(i).transpose();
        }
    }
    const Matrix PtP = Phi.transpose() * Phi;

    const Matrix ZZt = data.Z * data.Z.transpose();
    Matrix kron = Matrix::Zero(n * q, n * q);
    for (Index j = 0; j < n; ++j) kron.block(j * q, j * q, q, q) = ZZt;

    KroneckerCheck out;
    out.max_residual = (PtP - kron).cwiseAbs().maxCoeff();
    out.holds = out.max_residual < 1e-12 * std::max(1.0, ZZt.cwiseAbs().maxCoeff());
    return out;
}

} // namespace infodesign
