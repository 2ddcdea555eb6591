#include "csc/error.hpp"
#include "csc/kernels.hpp"
#include "csc/solvers.hpp"

#include <cmath>
#include <limits>
#include <span>

namespace csc {

void SolverConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
}

namespace {

// Largest eigenvalue of a symmetric PSD matrix from a few power steps (a lower
// bound; backtracking corrects it upward).
double power_iteration(const Matrix& g, int steps) {
    const Eigen::Index n = g.rows();
    Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    Vector gv(n);
    double lambda = 0.0;
    for (int i = 0; i < steps; ++i) {
        kernels::gemv(g.data(), n, n, v.data(), gv.data());
        const double norm = gv.norm();
        if (norm == 0.0) return 0.0;
        lambda = v.dot(gv);
        v = gv / norm;
    }
    return lambda;
}

class QuadraticLs {
public:
    QuadraticLs(const Matrix& x, const Vector& y) : n_(x.cols()), gram_(n_, n_), xty_(n_) {
        kernels::gram(x.data(), x.rows(), n_, gram_.data());
        kernels::gemv_t(x.data(), x.rows(), n_, y.data(), xty_.data());
        const std::span<const double> ys(y.data(), static_cast<std::size_t>(y.size()));
        yy_ = kernels::dot(ys, ys);
    }

    [[nodiscard]] Vector apply(const Vector& w) const {
        Vector out(n_);
        kernels::gemv(gram_.data(), n_, n_, w.data(), out.data());
        return out;
    }
    // f(w) given G w.
    [[nodiscard]] double objective(const Vector& w, const Vector& gw) const {
        return w.dot(gw - 2.0 * xty_) + yy_;
    }
    [[nodiscard]] const Matrix& gram() const noexcept { return gram_; }
    [[nodiscard]] const Vector& xty() const noexcept { return xty_; }
    [[nodiscard]] double yy() const noexcept { return yy_; }

private:
    Eigen::Index n_;
    Matrix gram_;
    Vector xty_;
    double yy_ = 0.0;
};

double gradient_mapping_norm(const Vector& w, const Vector& grad, double lipschitz, const Projector& project) {
    Vector p = w - grad / lipschitz;
    project(p);
    return lipschitz * (w - p).lpNorm<Eigen::Infinity>();
}

}  // namespace

LeastSquaresSolution projected_gradient_ls(const Matrix& x, const Vector& y, const Projector& project,
                                           const SolverConfig& cfg, const Vector& init) {
    cfg.validate();
    if (x.rows() != y.size()) throw DimensionError("design rows do not match the response length");
    const Eigen::Index n = x.cols();
    if (n == 0) throw DimensionError("design matrix has no columns");
    if (init.size() != 0 && init.size() != n) throw DimensionError("initial point has the wrong length");

    const QuadraticLs problem(x, y);
    const Vector& b = problem.xty();
    const double threshold = cfg.tol * (1.0 + b.lpNorm<Eigen::Infinity>());

    double lipschitz = 0.0;
    if (cfg.step_rule == StepRule::fixed) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.gram(), Eigen::EigenvaluesOnly);
        lipschitz = 2.0 * eig.eigenvalues().maxCoeff();
    } else {
        lipschitz = 2.0 * power_iteration(problem.gram(), 10);
    }
    if (!(lipschitz > 0.0)) lipschitz = 1.0;

    Vector w = init.size() == n ? init : Vector::Zero(n);
    project(w);
    Vector gw = problem.apply(w);
    Vector w_prev = w;
    Vector gw_prev = gw;
    Vector v = w;  // extrapolated point
    Vector gv = gw;
    double momentum = 1.0;

    SolveReport report;
    report.kkt_threshold = threshold;
    report.kkt_residual = gradient_mapping_norm(w, 2.0 * (gw - b), lipschitz, project);
    if (cfg.record_trace) report.objective_trace.push_back(problem.objective(w, gw));

    int it = 0;
    while (report.kkt_residual > threshold && it < cfg.max_iters) {
        ++it;
        const Vector grad = 2.0 * (gv - b);
        Vector z(n);
        Vector gz(n);
        for (;;) {
            z = v - grad / lipschitz;
            project(z);
            gz = problem.apply(z);
            if (cfg.step_rule == StepRule::fixed) break;
            const Vector d = z - v;
            // f(z) <= f(v) + grad'd + L/2 |d|^2  <=>  d'G d <= L/2 |d|^2 for a quadratic.
            const double curvature = d.dot(gz - gv);
            const double bound = 0.5 * lipschitz * d.squaredNorm();
            if (curvature <= bound * (1.0 + 1e-12)) break;
            lipschitz *= 1.5;
        }

        // f(z) - f(w) = (z - w)'(G z + G w - 2 b). Increases below the
        // rounding level of f itself count as no increase.
        const double decrease = (z - w).dot(gz + gw - 2.0 * b);
        const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                             (std::fabs(w.dot(gw)) + 2.0 * std::fabs(b.dot(w)) + problem.yy());
        const bool accept = decrease <= noise;
        if (accept) {
            w_prev = w;
            gw_prev = gw;
            w = z;
            gw = gz;
        }
        if (cfg.accelerated && accept) {
            const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            const double beta = (momentum - 1.0) / next;
            v = w + beta * (w - w_prev);
            gv = gw + beta * (gw - gw_prev);
            momentum = next;
        } else {
            // Restart from the monotone iterate.
            v = w;
            gv = gw;
            momentum = 1.0;
        }
        if (it % 100 == 0) {
            // Refresh the products carried by linearity.
            gw = problem.apply(w);
            gv = problem.apply(v);
        }
        report.kkt_residual = gradient_mapping_norm(w, 2.0 * (gw - b), lipschitz, project);
        if (cfg.record_trace) report.objective_trace.push_back(problem.objective(w, gw));
    }

    report.iterations = it;
    report.converged = report.kkt_residual <= threshold;
    report.final_objective = (y - x * w).squaredNorm();
    return {std::move(w), std::move(report)};
}

NuclearBallSolution nuclear_ball_least_squares(const Matrix& y, double radius, const SolverConfig& cfg) {
    cfg.validate();
    if (!(radius > 0.0)) throw std::invalid_argument("nuclear ball radius must be positive");
    constexpr double lipschitz = 2.0;
    const double threshold = cfg.tol * (1.0 + y.lpNorm<Eigen::Infinity>());

    Matrix a = Matrix::Zero(y.rows(), y.cols());
    SolveReport report;
    report.kkt_threshold = threshold;
    auto step = [&](const Matrix& current) {
        return project_nuclear_ball(current - 2.0 * (current - y) / lipschitz, radius);
    };
    Matrix next = step(a);
    report.kkt_residual = lipschitz * (a - next).lpNorm<Eigen::Infinity>();
    if (cfg.record_trace) report.objective_trace.push_back((y - a).squaredNorm());
    int it = 0;
    while (report.kkt_residual > threshold && it < cfg.max_iters) {
        ++it;
        a = std::move(next);
        next = step(a);
        report.kkt_residual = lipschitz * (a - next).lpNorm<Eigen::Infinity>();
        if (cfg.record_trace) report.objective_trace.push_back((y - a).squaredNorm());
    }
    report.iterations = it;
    report.converged = report.kkt_residual <= threshold;
    report.final_objective = (y - a).squaredNorm();
    return {std::move(a), std::move(report)};
}

}  // namespace csc
