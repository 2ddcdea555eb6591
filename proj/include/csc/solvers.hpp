#pragma once

// Least-squares machinery shared by the estimators: Euclidean projections,
// projected gradient, coordinate descent for penalized regression, principal
// components, alternating least squares and plain OLS.

#include "csc/panel.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace csc {

enum class StepRule { fixed, backtracking };

struct SolverConfig {
    int max_iters = 10'000;
    // Stationarity threshold, relative to 1 + |X'y|_inf (or the problem's
    // natural gradient scale for solvers without a design matrix).
    double tol = 1e-8;
    StepRule step_rule = StepRule::backtracking;
    // Monotone Nesterov acceleration on top of the projected-gradient step.
    bool accelerated = true;
    std::uint64_t seed = 0;
    // Keep the per-iteration objective in SolveReport::objective_trace.
    bool record_trace = false;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double final_objective = 0.0;
    bool converged = false;
    double kkt_residual = 0.0;
    // Threshold kkt_residual was compared against.
    double kkt_threshold = 0.0;
    std::vector<double> objective_trace;
};

// --- projections -----------------------------------------------------------

// argmin over {w >= 0, sum w = radius} of |w - v|_2.
[[nodiscard]] Vector project_simplex(const Vector& v, double radius = 1.0);

// Projection onto {w : |w|_1 <= radius}.
[[nodiscard]] Vector project_l1_ball(const Vector& v, double radius);

// Singular values projected onto the l1 ball of the given radius.
[[nodiscard]] Matrix project_nuclear_ball(const Matrix& a, double radius);

// In-place Euclidean projection onto a closed convex set.
using Projector = std::function<void(Vector&)>;

// Only the first `constrained` coordinates are projected; the rest are free.
[[nodiscard]] Projector simplex_projector(Eigen::Index constrained);
[[nodiscard]] Projector l1_ball_projector(double radius, Eigen::Index constrained);
[[nodiscard]] Projector identity_projector();

// --- solvers ---------------------------------------------------------------

struct LeastSquaresSolution {
    Vector coefficients;
    SolveReport report;
};

// Minimizes |y - X w|^2 over the set defined by `project`, starting from
// project(init) (zero vector when init is empty).
[[nodiscard]] LeastSquaresSolution projected_gradient_ls(const Matrix& x, const Vector& y, const Projector& project,
                                                         const SolverConfig& cfg, const Vector& init = Vector());

struct Lasso {
    double lambda = 0.0;
};
// lambda * ((1 - alpha) |w|_2^2 + alpha |w|_1)
struct ElasticNet {
    double lambda = 0.0;
    double alpha = 0.5;
};
using Penalty = std::variant<Lasso, ElasticNet>;

struct PenalizedSolution {
    double intercept = 0.0;
    Vector coefficients;
    SolveReport report;
};

// Minimizes sum_t (y_t - mu - X_t' w)^2 + P(w) by cyclic coordinate descent.
[[nodiscard]] PenalizedSolution coordinate_descent_penalized(const Matrix& x, const Vector& y, const Penalty& penalty,
                                                             const SolverConfig& cfg);

struct FactorEstimate {
    Matrix factors;   // T x k, F'F / T = I
    Matrix loadings;  // N x k, Lambda = Y'F / T
    Vector eigenvalues;  // k largest eigenvalues of Y Y', descending
};

// Principal components of a T x N matrix. Eigenvector signs are fixed so that
// the largest-magnitude entry of each column of F is positive.
[[nodiscard]] FactorEstimate pca_factors(const Matrix& y, int k);

struct InteractiveFeEstimate {
    Matrix factors;
    Matrix loadings;
    Vector beta;  // one coefficient per covariate block
    SolveReport report;
};

// min over (F, Lambda, beta) of sum (Y - sum_p beta_p X_p - F Lambda')^2 with
// F'F/T = I, alternating an OLS step for beta with a PCA step for (F, Lambda).
// The objective after every full sweep is recorded in report.objective_trace.
[[nodiscard]] InteractiveFeEstimate alternating_ls(const Matrix& y, const std::vector<Matrix>& covariates, int k,
                                                   const SolverConfig& cfg);

struct NuclearBallSolution {
    Matrix estimate;
    SolveReport report;
};

// min |Y - A|_F^2 s.t. |A|_* <= radius, by projected gradient.
[[nodiscard]] NuclearBallSolution nuclear_ball_least_squares(const Matrix& y, double radius, const SolverConfig& cfg);

// Upper bound on cond(X'X) accepted by ols().
inline constexpr double kMaxGramCondition = 1e12;

// Least squares via the normal equations with one refinement step.
// Throws RankDeficiencyError when cond(X'X) exceeds kMaxGramCondition.
[[nodiscard]] Vector ols(const Matrix& x, const Vector& y);

// Default radius for the nuclear-norm ball: 1.5 times the nuclear norm of the
// rank ceil(min(N, T) / 10) truncated SVD of y.
[[nodiscard]] double default_nuclear_radius(const Matrix& y);

}  // namespace csc
