#include "csc/error.hpp"
#include "csc/kernels.hpp"
#include "csc/solvers.hpp"

#include <cmath>

namespace csc {

namespace {

// Largest-magnitude entry made positive; first index wins on ties.
void fix_sign(Eigen::Ref<Vector> v) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double a = std::fabs(v[i]);
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (v[arg] < 0.0) v = -v;
}

Matrix combine_covariates(const std::vector<Matrix>& covariates, const Vector& beta, Eigen::Index rows,
                          Eigen::Index cols) {
    Matrix out = Matrix::Zero(rows, cols);
    for (std::size_t p = 0; p < covariates.size(); ++p) out += beta[static_cast<Eigen::Index>(p)] * covariates[p];
    return out;
}

// OLS of vec(target) on (vec(X_1), ..., vec(X_p)).
Vector pooled_beta(const std::vector<Matrix>& covariates, const Matrix& target) {
    const Eigen::Index cells = target.size();
    Matrix design(cells, static_cast<Eigen::Index>(covariates.size()));
    for (std::size_t p = 0; p < covariates.size(); ++p) {
        design.col(static_cast<Eigen::Index>(p)) = covariates[p].reshaped();
    }
    return ols(design, target.reshaped());
}

}  // namespace

FactorEstimate pca_factors(const Matrix& y, int k) {
    const Eigen::Index t = y.rows();
    const Eigen::Index n = y.cols();
    if (k < 1 || k > std::min(t, n)) {
        throw DimensionError("factor count k = " + std::to_string(k) + " must satisfy 1 <= k <= min(T, N) = " +
                             std::to_string(std::min(t, n)));
    }
    if (!y.allFinite()) throw NumericalError("PCA input has non-finite entries");

    // Y Y' through the Gram kernel on Y'.
    const Matrix yt = y.transpose();
    Matrix outer(t, t);
    kernels::gram(yt.data(), n, t, outer.data());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(outer);
    if (eig.info() != Eigen::Success) throw NumericalError("eigen-decomposition of Y Y' failed");

    FactorEstimate out;
    out.factors.resize(t, k);
    out.eigenvalues.resize(k);
    const double scale = std::sqrt(static_cast<double>(t));
    for (int c = 0; c < k; ++c) {
        const Eigen::Index src = t - 1 - c;  // eigenvalues ascend
        Vector v = eig.eigenvectors().col(src);
        fix_sign(v);
        out.factors.col(c) = scale * v;
        out.eigenvalues[c] = eig.eigenvalues()[src];
    }
    out.loadings = y.transpose() * out.factors / static_cast<double>(t);
    return out;
}

InteractiveFeEstimate alternating_ls(const Matrix& y, const std::vector<Matrix>& covariates, int k,
                                     const SolverConfig& cfg) {
    cfg.validate();
    for (const auto& c : covariates) {
        if (c.rows() != y.rows() || c.cols() != y.cols()) throw DimensionError("covariate block is not conformable");
    }
    InteractiveFeEstimate out;
    auto objective = [&](const Matrix& xb) {
        return (y - xb - out.factors * out.loadings.transpose()).squaredNorm();
    };
    const double floor = 1e-24 * (1.0 + y.squaredNorm());
    out.report.kkt_threshold = cfg.tol;

    if (covariates.empty()) {
        FactorEstimate f = pca_factors(y, k);
        out.factors = std::move(f.factors);
        out.loadings = std::move(f.loadings);
        out.beta = Vector();
        out.report.final_objective = objective(Matrix::Zero(y.rows(), y.cols()));
        out.report.objective_trace.push_back(out.report.final_objective);
        out.report.converged = true;
        return out;
    }

    // Start from the pooled regression that ignores the factors.
    out.beta = pooled_beta(covariates, y);
    Matrix xb = combine_covariates(covariates, out.beta, y.rows(), y.cols());
    {
        FactorEstimate f = pca_factors(y - xb, k);
        out.factors = std::move(f.factors);
        out.loadings = std::move(f.loadings);
    }
    double previous = objective(xb);
    out.report.objective_trace.push_back(previous);

    int it = 0;
    double rel_decrease = INFINITY;
    while (it < cfg.max_iters) {
        ++it;
        out.beta = pooled_beta(covariates, y - out.factors * out.loadings.transpose());
        xb = combine_covariates(covariates, out.beta, y.rows(), y.cols());
        FactorEstimate f = pca_factors(y - xb, k);
        out.factors = std::move(f.factors);
        out.loadings = std::move(f.loadings);
        const double current = objective(xb);
        out.report.objective_trace.push_back(current);
        rel_decrease = previous > 0.0 ? (previous - current) / previous : 0.0;
        previous = current;
        if (current <= floor || rel_decrease < cfg.tol) break;
    }
    out.report.iterations = it;
    out.report.final_objective = previous;
    out.report.kkt_residual = std::max(0.0, rel_decrease);
    out.report.converged = previous <= floor || rel_decrease < cfg.tol;
    return out;
}

double default_nuclear_radius(const Matrix& y) {
    const Eigen::Index m = std::min(y.rows(), y.cols());
    if (m == 0) throw DimensionError("empty matrix");
    const Eigen::Index rank = (m + 9) / 10;
    Eigen::BDCSVD<Matrix> svd(y);
    const double nuclear = svd.singularValues().head(rank).sum();
    return nuclear > 0.0 ? 1.5 * nuclear : 1.0;
}

}  // namespace csc
