#include "csc/simulation.hpp"

#include "csc/error.hpp"
#include "csc/parallel.hpp"
#include "csc/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace csc {

std::string_view to_string(WeightsKind k) noexcept {
    switch (k) {
        case WeightsKind::dgp1: return "DGP1";
        case WeightsKind::dgp2: return "DGP2";
        case WeightsKind::dgp3: return "DGP3";
        case WeightsKind::dgp4: return "DGP4";
    }
    return "unknown";
}

std::string_view to_string(FactorTrend k) noexcept {
    return k == FactorTrend::stationary ? "stationary" : "trending";
}

std::string_view to_string(ControlDesign k) noexcept {
    return k == ControlDesign::factor_model ? "factor_model" : "iid_normal";
}

std::string_view to_string(FitMode m) noexcept { return m == FitMode::under_null ? "under_null" : "pre_only"; }

void DgpSpec::validate() const {
    if (t0 < 1) throw std::invalid_argument("t0 must be >= 1");
    if (post_periods < 1) throw std::invalid_argument("post_periods must be >= 1");
    if (n_controls < 1) throw std::invalid_argument("n_controls must be >= 1");
    if (!(rho_u >= 0.0 && rho_u < 1.0)) throw std::invalid_argument("rho_u must be in [0, 1)");
    if (!(rho_eps >= 0.0 && rho_eps < 1.0)) throw std::invalid_argument("rho_eps must be in [0, 1)");
    if (weights == WeightsKind::dgp2 && n_controls < 3) throw std::invalid_argument("DGP2 needs at least 3 controls");
    if (weights == WeightsKind::dgp4 && n_controls < 2) throw std::invalid_argument("DGP4 needs at least 2 controls");
    if (!std::isfinite(alpha_true)) throw std::invalid_argument("alpha_true must be finite");
}

Vector dgp_weights(WeightsKind kind, int n_controls) {
    const double j = static_cast<double>(n_controls);
    Vector w = Vector::Zero(n_controls);
    switch (kind) {
        case WeightsKind::dgp1: w.setConstant(1.0 / j); break;
        case WeightsKind::dgp2:
            if (n_controls < 3) throw std::invalid_argument("DGP2 needs at least 3 controls");
            w.head(3).setConstant(1.0 / 3.0);
            break;
        case WeightsKind::dgp3: w.setConstant(-1.0 / j); break;
        case WeightsKind::dgp4:
            if (n_controls < 2) throw std::invalid_argument("DGP4 needs at least 2 controls");
            w[0] = 1.0;
            w[1] = -1.0;
            break;
    }
    return w;
}

Vector ar1_path(int n, double rho, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double innovation_sd = std::sqrt(1.0 - rho * rho);
    Vector x(n);
    for (int t = 0; t < n; ++t) {
        const double v = z(rng);
        x[t] = t == 0 ? v : rho * x[t - 1] + innovation_sd * v;
    }
    return x;
}

PanelData simulate_panel(const DgpSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    const int periods = spec.periods();
    const int n_controls = spec.n_controls;
    std::normal_distribution<double> z(0.0, 1.0);

    Matrix y(periods, n_controls + 1);
    if (spec.controls == ControlDesign::iid_normal) {
        for (int j = 1; j <= n_controls; ++j) {
            for (int t = 0; t < periods; ++t) y(t, j) = z(rng);
        }
    } else {
        Vector theta(periods);
        Vector factor(periods);
        for (int t = 0; t < periods; ++t) theta[t] = z(rng);
        for (int t = 0; t < periods; ++t) {
            const double mean = spec.factor_trend == FactorTrend::trending ? static_cast<double>(t + 1) : 0.0;
            factor[t] = mean + z(rng);
        }
        for (int j = 1; j <= n_controls; ++j) {
            const double load = static_cast<double>(j) / n_controls;
            const Vector eps = ar1_path(periods, spec.rho_eps, rng);
            y.col(j) = (load + theta.array() + load * factor.array() + eps.array()).matrix();
        }
    }
    const Vector u = ar1_path(periods, spec.rho_u, rng);
    y.col(0) = y.rightCols(n_controls) * dgp_weights(spec.weights, n_controls) + u;
    y.col(0).tail(spec.post_periods).array() += spec.alpha_true;
    return PanelData(std::move(y), spec.t0);
}

PanelData simulate_panel(const DgpSpec& spec) {
    auto rng = stream_rng(spec.seed, 0);
    return simulate_panel(spec, rng);
}

double ExperimentResult::mc_standard_error() const {
    if (n_reps == 0) return 0.0;
    return std::sqrt(rejection_rate * (1.0 - rejection_rate) / n_reps);
}

namespace {

struct RepOutcome {
    double p_value = 1.0;
    bool solver_warning = false;
};

RepOutcome run_replication(const DgpSpec& dgp, const EstimatorSpec& estimator, SchemeSpec scheme,
                           const Statistic& statistic, FitMode mode, std::uint64_t rep) {
    auto rng = stream_rng(dgp.seed, rep);
    const PanelData panel = simulate_panel(dgp, rng);
    scheme.seed = rng();
    if (mode == FitMode::under_null) {
        const TestResult r =
            test_sharp_null(panel, EffectTrajectory::zeros(dgp.post_periods), estimator, scheme, statistic);
        return {r.p_value, r.has_flag("solver_not_converged")};
    }
    const ProxyFit f = fit_pre_treatment_only(panel, estimator);
    const int n = f.window_length();
    const PermutationScheme pi = PermutationScheme::build(scheme, n);
    const TestResult r = p_value(f.residuals, PeriodRange{n - dgp.post_periods + 1, n}, pi, statistic);
    return {r.p_value, f.has_flag("solver_not_converged")};
}

}  // namespace

ExperimentResult run_size_experiment(const DgpSpec& dgp, const EstimatorSpec& estimator, const SchemeSpec& scheme,
                                     const Statistic& statistic, const ExperimentOptions& options) {
    dgp.validate();
    if (options.n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    if (!(options.level > 0.0 && options.level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");

    std::vector<RepOutcome> reps(static_cast<std::size_t>(options.n_reps));
    parallel_for(reps.size(), options.workers, [&](std::size_t r) {
        reps[r] = run_replication(dgp, estimator, scheme, statistic, options.mode, r);
    });

    ExperimentResult out;
    out.n_reps = options.n_reps;
    out.level = options.level;
    out.dgp = dgp;
    out.estimator_id = estimator_id(estimator);
    out.statistic_id = statistic.describe();
    out.scheme_kind = scheme.kind;
    out.mode = options.mode;
    for (const RepOutcome& r : reps) {
        if (r.p_value <= options.level) ++out.rejections;
        if (r.solver_warning) ++out.solver_warnings;
        if (options.keep_p_values) out.p_values.push_back(r.p_value);
    }
    out.rejection_rate = static_cast<double>(out.rejections) / options.n_reps;
    return out;
}

std::vector<ExperimentResult> run_power_curve(const DgpSpec& dgp, const EstimatorSpec& estimator,
                                              const SchemeSpec& scheme, const Statistic& statistic,
                                              const std::vector<double>& alpha_grid,
                                              const ExperimentOptions& options) {
    std::vector<ExperimentResult> out;
    out.reserve(alpha_grid.size());
    for (double a : alpha_grid) {
        DgpSpec point = dgp;
        point.alpha_true = a;
        out.push_back(run_size_experiment(point, estimator, scheme, statistic, options));
    }
    return out;
}

std::vector<double> oracle_power_bound(const std::vector<double>& alpha_grid, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
    const boost::math::normal_distribution<double> normal;
    const double c = boost::math::quantile(boost::math::complement(normal, level / 2.0));
    std::vector<double> out;
    out.reserve(alpha_grid.size());
    for (double a : alpha_grid) {
        if (a == 0.0) {
            out.push_back(level);
            continue;
        }
        out.push_back(boost::math::cdf(normal, -c - a) + boost::math::cdf(normal, -c + a));
    }
    return out;
}

double simulate_oracle_power(double alpha, double level, int n_draws, std::uint64_t seed) {
    if (n_draws < 1) throw std::invalid_argument("n_draws must be >= 1");
    const boost::math::normal_distribution<double> normal;
    const double c = boost::math::quantile(boost::math::complement(normal, level / 2.0));
    auto rng = stream_rng(seed, 0);
    std::normal_distribution<double> z(0.0, 1.0);
    long long hits = 0;
    for (int i = 0; i < n_draws; ++i) {
        if (std::fabs(z(rng) + alpha) > c) ++hits;
    }
    return static_cast<double>(hits) / n_draws;
}

std::vector<FigureRow> reproduce_figure_null_vs_pre(const FigureOptions& options) {
    const EstimatorSpec sc{model::Sc{}, {}};
    std::vector<FigureRow> out;
    for (int t0 : options.t0_grid) {
        for (double rho : options.rho_grid) {
            DgpSpec dgp;
            dgp.t0 = t0;
            dgp.n_controls = options.n_controls;
            dgp.rho_u = rho;
            dgp.weights = WeightsKind::dgp2;
            dgp.controls = ControlDesign::iid_normal;
            dgp.seed = options.seed;
            for (FitMode mode : {FitMode::under_null, FitMode::pre_only}) {
                ExperimentOptions eo;
                eo.n_reps = options.n_reps;
                eo.level = options.level;
                eo.mode = mode;
                eo.workers = options.workers;
                eo.keep_p_values = false;
                const ExperimentResult r = run_size_experiment(dgp, sc, SchemeSpec{}, Statistic::sq(1.0), eo);
                out.push_back(FigureRow{t0, rho, mode, r.rejection_rate, r.n_reps});
            }
        }
    }
    return out;
}

}  // namespace csc
