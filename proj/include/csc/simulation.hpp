#pragma once

// Monte Carlo designs for size and power experiments: synthetic panels with a
// single treated unit whose outcome is a fixed combination of the controls
// plus AR(1) noise, and harnesses that replicate the permutation test on
// fresh draws.

#include "csc/estimators.hpp"
#include "csc/inference.hpp"
#include "csc/panel.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace csc {

enum class WeightsKind { dgp1, dgp2, dgp3, dgp4 };
enum class FactorTrend { stationary, trending };
enum class ControlDesign {
    // Y_jt = mu_j + theta_t + lambda_j F_t + eps_jt with mu_j = lambda_j = j/J.
    factor_model,
    // Y_jt iid N(0, 1).
    iid_normal,
};

[[nodiscard]] std::string_view to_string(WeightsKind k) noexcept;
[[nodiscard]] std::string_view to_string(FactorTrend k) noexcept;
[[nodiscard]] std::string_view to_string(ControlDesign k) noexcept;

struct DgpSpec {
    int t0 = 20;
    int n_controls = 50;
    double rho_u = 0.0;
    double rho_eps = 0.0;
    WeightsKind weights = WeightsKind::dgp1;
    FactorTrend factor_trend = FactorTrend::stationary;
    ControlDesign controls = ControlDesign::factor_model;
    int post_periods = 1;
    double alpha_true = 0.0;  // added to the treated unit in every post period
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] int periods() const noexcept { return t0 + post_periods; }
    bool operator==(const DgpSpec&) const = default;
};

// DGP1 (1/J, ...), DGP2 (1/3, 1/3, 1/3, 0, ...), DGP3 -(1/J, ...),
// DGP4 (1, -1, 0, ...).
[[nodiscard]] Vector dgp_weights(WeightsKind kind, int n_controls);

// Stationary AR(1) path of length n: x_1 ~ N(0, 1), x_t = rho x_{t-1} + v_t
// with v_t ~ N(0, 1 - rho^2).
[[nodiscard]] Vector ar1_path(int n, double rho, std::mt19937_64& rng);

[[nodiscard]] PanelData simulate_panel(const DgpSpec& spec, std::mt19937_64& rng);
// Draws from stream_rng(spec.seed, 0).
[[nodiscard]] PanelData simulate_panel(const DgpSpec& spec);

enum class FitMode {
    // Fit on all T periods of the data adjusted under H0: alpha = 0.
    under_null,
    // Fit on rows 1..t0 only and extrapolate.
    pre_only,
};

[[nodiscard]] std::string_view to_string(FitMode m) noexcept;

struct ExperimentOptions {
    int n_reps = 5000;
    double level = 0.1;
    FitMode mode = FitMode::under_null;
    int workers = 1;
    bool keep_p_values = true;
};

struct ExperimentResult {
    double rejection_rate = 0.0;
    int n_reps = 0;
    double level = 0.1;
    DgpSpec dgp;
    std::string estimator_id;
    std::string statistic_id;
    PermutationKind scheme_kind = PermutationKind::moving_block;
    FitMode mode = FitMode::under_null;
    std::vector<double> p_values;  // by replication index, when kept
    int rejections = 0;
    int solver_warnings = 0;  // replications flagged solver_not_converged

    // Binomial Monte Carlo standard error of rejection_rate.
    [[nodiscard]] double mc_standard_error() const;
};

// Replication r draws its panel from stream_rng(dgp.seed, r), tests
// H0: alpha = 0 for the post periods, and rejects when p <= level. For
// iid_sampled schemes the permutation seed is derived from the same stream.
[[nodiscard]] ExperimentResult run_size_experiment(const DgpSpec& dgp, const EstimatorSpec& estimator,
                                                   const SchemeSpec& scheme, const Statistic& statistic,
                                                   const ExperimentOptions& options = {});

// run_size_experiment for each alpha_true in alpha_grid; every point reuses
// dgp.seed.
[[nodiscard]] std::vector<ExperimentResult> run_power_curve(const DgpSpec& dgp, const EstimatorSpec& estimator,
                                                            const SchemeSpec& scheme, const Statistic& statistic,
                                                            const std::vector<double>& alpha_grid,
                                                            const ExperimentOptions& options = {});

// Rejection probability of the test that knows u_T ~ N(0, 1) and rejects when
// |u_T + alpha| > z_{1 - level/2}: Phi(-c - alpha) + Phi(-c + alpha).
[[nodiscard]] std::vector<double> oracle_power_bound(const std::vector<double>& alpha_grid, double level);

// The same rejection probability estimated from n_draws standard normals.
[[nodiscard]] double simulate_oracle_power(double alpha, double level, int n_draws, std::uint64_t seed);

struct FigureOptions {
    std::vector<double> rho_grid{0.0, 0.3, 0.6};
    std::vector<int> t0_grid{19};
    int n_controls = 50;
    int n_reps = 2000;
    double level = 0.1;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct FigureRow {
    int t0 = 0;
    double rho_u = 0.0;
    FitMode mode = FitMode::under_null;
    double rejection_rate = 0.0;
    int n_reps = 0;
};

// Size of the synthetic-control test under both fitting modes. Controls are
// iid N(0, 1), weights follow DGP2, and the treated noise is AR(1) with rho_u.
[[nodiscard]] std::vector<FigureRow> reproduce_figure_null_vs_pre(const FigureOptions& options);

}  // namespace csc
