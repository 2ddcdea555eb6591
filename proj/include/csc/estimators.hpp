#pragma once

// Counterfactual proxy models. Every fit takes the null-adjusted data Z(alpha0)
// and estimates the proxy from all T periods, then returns the fitted proxy and
// the residuals u_t = Y^N_1t - P_t of the treated unit.
//
// Covariates: sc and classo append the treated unit's covariates as
// unconstrained regressors; interactive_fe uses them for every unit; the
// remaining panel models ignore them.

#include "csc/panel.hpp"
#include "csc/solvers.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace csc {

struct ProxyFit {
    // Fitted window is periods consumed+1..T (1-based); both vectors have
    // length T - consumed.
    Vector proxy;
    Vector residuals;
    int consumed = 0;
    std::string estimator_id;
    // Residuals of a row-permuted panel are the permuted residuals.
    bool permutation_invariant = false;
    SolveReport diagnostics;
    // Linear models only: intercept and control-unit weights (then covariate
    // coefficients, when present).
    double intercept = 0.0;
    Vector coefficients;
    std::vector<std::string> flags;

    [[nodiscard]] int window_length() const noexcept { return static_cast<int>(residuals.size()); }
    [[nodiscard]] bool has_flag(std::string_view f) const;
};

namespace model {

struct Did {};
struct Sc {};
struct Classo {
    double radius = 1.0;
};
struct Factor {
    int k = 1;
};
struct InteractiveFe {
    int k = 1;
};
struct MatrixCompletion {
    // Defaults to default_nuclear_radius() of the null-adjusted panel.
    std::optional<double> radius;
};
struct Ar {
    int lags = 1;
};

// Models usable as the first stage of a fused fit.
using Panel = std::variant<Did, Sc, Classo, Lasso, ElasticNet, Factor, InteractiveFe, MatrixCompletion>;

struct Fused {
    Panel base;
    int lags = 1;
};

// User-supplied autoregressive fitter. Given the treated null-adjusted series
// (length T) it returns fitted values for periods lags+1..T.
struct NonlinearAr {
    std::string id;
    int lags = 1;
    std::function<Vector(std::span<const double> series, int lags)> fit_predict;
};

// Any other proxy estimator, e.g. an augmented synthetic control.
struct Custom {
    std::string id;
    std::function<ProxyFit(const NullAdjustedData&)> fit;
};

using Any = std::variant<Did, Sc, Classo, Lasso, ElasticNet, Factor, InteractiveFe, MatrixCompletion, Ar, Fused,
                         NonlinearAr, Custom>;

}  // namespace model

struct EstimatorSpec {
    model::Any model = model::Sc{};
    SolverConfig solver{};
};

[[nodiscard]] std::string estimator_id(const EstimatorSpec& spec);

// Leading periods without a residual (the lag order for ar / fused models).
[[nodiscard]] int consumed_periods(const EstimatorSpec& spec);

[[nodiscard]] ProxyFit fit(const NullAdjustedData& z, const EstimatorSpec& spec);

[[nodiscard]] ProxyFit fit_did(const NullAdjustedData& z);
[[nodiscard]] ProxyFit fit_sc(const NullAdjustedData& z, const SolverConfig& cfg = {});
[[nodiscard]] ProxyFit fit_classo(const NullAdjustedData& z, double radius = 1.0, const SolverConfig& cfg = {});
[[nodiscard]] ProxyFit fit_penalized(const NullAdjustedData& z, const Penalty& penalty, const SolverConfig& cfg = {});
[[nodiscard]] ProxyFit fit_factor(const NullAdjustedData& z, int k);
[[nodiscard]] ProxyFit fit_interactive_fe(const NullAdjustedData& z, int k, const SolverConfig& cfg = {});
[[nodiscard]] ProxyFit fit_matrix_completion(const NullAdjustedData& z, std::optional<double> radius,
                                             const SolverConfig& cfg = {});
[[nodiscard]] ProxyFit fit_ar(const NullAdjustedData& z, int lags);
[[nodiscard]] ProxyFit fit_fused(const NullAdjustedData& z, const model::Panel& base, int lags,
                                 const SolverConfig& cfg = {});

// Fits did / sc / classo / lasso / elastic_net on rows 1..t0 only, ignoring
// the post-treatment data, and extrapolates the proxy to all T periods. This
// is the conventional procedure that does not impose the null; it exists as a
// comparison baseline.
[[nodiscard]] ProxyFit fit_pre_treatment_only(const PanelData& panel, const EstimatorSpec& spec);

}  // namespace csc
