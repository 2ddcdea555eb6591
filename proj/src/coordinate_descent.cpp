#include "csc/error.hpp"
#include "csc/kernels.hpp"
#include "csc/solvers.hpp"

#include <cmath>

namespace csc {

namespace {

struct PenaltyWeights {
    double l1;
    double l2;
};

PenaltyWeights weights_of(const Penalty& penalty) {
    return std::visit(
        [](const auto& p) -> PenaltyWeights {
            using P = std::decay_t<decltype(p)>;
            if (!(p.lambda >= 0.0)) throw std::invalid_argument("penalty lambda must be >= 0");
            if constexpr (std::is_same_v<P, Lasso>) {
                return {p.lambda, 0.0};
            } else {
                if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) throw std::invalid_argument("elastic net alpha must be in [0, 1]");
                return {p.lambda * p.alpha, p.lambda * (1.0 - p.alpha)};
            }
        },
        penalty);
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Largest violation of the subgradient optimality condition over coordinates.
double subgradient_violation(const Vector& w, const Vector& gw, const Vector& b, PenaltyWeights pw) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double g = 2.0 * (gw[j] - b[j]) + 2.0 * pw.l2 * w[j];
        double v;
        if (w[j] > 0.0) {
            v = std::fabs(g + pw.l1);
        } else if (w[j] < 0.0) {
            v = std::fabs(g - pw.l1);
        } else {
            v = std::max(0.0, std::fabs(g) - pw.l1);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace

PenalizedSolution coordinate_descent_penalized(const Matrix& x, const Vector& y, const Penalty& penalty,
                                               const SolverConfig& cfg) {
    cfg.validate();
    if (x.rows() != y.size()) throw DimensionError("design rows do not match the response length");
    const PenaltyWeights pw = weights_of(penalty);
    const Eigen::Index n = x.cols();

    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const Matrix xc = x.rowwise() - x_mean;
    const Vector yc = y.array() - y_mean;

    Matrix gram(n, n);
    Vector b(n);
    kernels::gram(xc.data(), xc.rows(), n, gram.data());
    kernels::gemv_t(xc.data(), xc.rows(), n, yc.data(), b.data());
    const double threshold = cfg.tol * (1.0 + b.lpNorm<Eigen::Infinity>());

    Vector w = Vector::Zero(n);
    Vector gw = Vector::Zero(n);  // gram * w
    SolveReport report;
    report.kkt_threshold = threshold;
    report.kkt_residual = subgradient_violation(w, gw, b, pw);

    auto objective = [&] {
        const double rss = (yc - xc * w).squaredNorm();
        return rss + pw.l1 * w.lpNorm<1>() + pw.l2 * w.squaredNorm();
    };
    if (cfg.record_trace) report.objective_trace.push_back(objective());

    int sweep = 0;
    while (report.kkt_residual > threshold && sweep < cfg.max_iters) {
        ++sweep;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double gjj = gram(j, j);
            const double denom = gjj + pw.l2;
            const double rho = b[j] - (gw[j] - gjj * w[j]);
            const double updated = denom > 0.0 ? soft_threshold(rho, 0.5 * pw.l1) / denom : 0.0;
            const double delta = updated - w[j];
            if (delta != 0.0) {
                gw += gram.col(j) * delta;
                w[j] = updated;
            }
        }
        if (sweep % 100 == 0) gw = gram * w;
        report.kkt_residual = subgradient_violation(w, gw, b, pw);
        if (cfg.record_trace) report.objective_trace.push_back(objective());
    }

    report.iterations = sweep;
    report.converged = report.kkt_residual <= threshold;
    report.final_objective = objective();
    PenalizedSolution out;
    out.intercept = y_mean - x_mean.dot(w);
    out.coefficients = std::move(w);
    out.report = std::move(report);
    return out;
}

Vector ols(const Matrix& x, const Vector& y) {
    if (x.rows() != y.size()) throw DimensionError("design rows do not match the response length");
    const Eigen::Index n = x.cols();
    if (n == 0) throw DimensionError("design matrix has no columns");
    if (x.rows() < n) throw RankDeficiencyError("fewer observations than regressors", INFINITY);

    Matrix gram(n, n);
    Vector xty(n);
    kernels::gram(x.data(), x.rows(), n, gram.data());
    kernels::gemv_t(x.data(), x.rows(), n, y.data(), xty.data());

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : INFINITY;
    if (!(cond <= kMaxGramCondition)) throw RankDeficiencyError("singular or ill-conditioned design", cond);

    const Eigen::LLT<Matrix> chol(gram);
    if (chol.info() != Eigen::Success) throw RankDeficiencyError("Cholesky factorization of X'X failed", cond);
    Vector coef = chol.solve(xty);
    coef += chol.solve(xty - gram * coef);
    return coef;
}

}  // namespace csc
