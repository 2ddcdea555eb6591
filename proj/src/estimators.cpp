#include "csc/estimators.hpp"

#include "csc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace csc {

bool ProxyFit::has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string panel_id(const model::Panel& m) {
    return std::visit(overloaded{
                          [](const model::Did&) { return std::string("did"); },
                          [](const model::Sc&) { return std::string("sc"); },
                          [](const model::Classo& c) { return "classo(K=" + num(c.radius) + ")"; },
                          [](const Lasso& l) { return "lasso(lambda=" + num(l.lambda) + ")"; },
                          [](const ElasticNet& e) {
                              return "elastic_net(lambda=" + num(e.lambda) + ",alpha=" + num(e.alpha) + ")";
                          },
                          [](const model::Factor& f) { return "factor(k=" + std::to_string(f.k) + ")"; },
                          [](const model::InteractiveFe& f) { return "interactive_fe(k=" + std::to_string(f.k) + ")"; },
                          [](const model::MatrixCompletion& m) {
                              return m.radius ? "matrix_completion(K=" + num(*m.radius) + ")"
                                              : std::string("matrix_completion(K=auto)");
                          },
                      },
                      m);
}

model::Any widen(const model::Panel& m) {
    return std::visit([](const auto& v) -> model::Any { return v; }, m);
}

void require_single_treated(const PanelData& p) {
    if (p.n_treated() != 1) {
        throw std::invalid_argument("estimators expect one treated series; average multiple treated units first");
    }
}

void require_controls(const PanelData& p) {
    if (p.n_controls() < 1) throw MissingControlsError("estimator needs at least one control unit (J = 0)");
}

// Controls followed by the treated unit's covariates.
Matrix weight_design(const PanelData& p, bool with_covariates) {
    const Eigen::Index j = p.n_controls();
    const Eigen::Index q = with_covariates ? p.n_covariates() : 0;
    Matrix d(p.periods(), j + q);
    d.leftCols(j) = p.controls();
    for (Eigen::Index c = 0; c < q; ++c) d.col(j + c) = p.covariates()[static_cast<std::size_t>(c)].col(0);
    return d;
}

struct LinearCoef {
    double intercept = 0.0;
    Vector weights;
    SolveReport report;
};

LinearCoef solve_sc(const Matrix& d, const Vector& y, Eigen::Index n_controls, const SolverConfig& cfg) {
    Vector init = Vector::Zero(d.cols());
    init.head(n_controls).setConstant(1.0 / static_cast<double>(n_controls));
    auto sol = projected_gradient_ls(d, y, simplex_projector(n_controls), cfg, init);
    return {0.0, std::move(sol.coefficients), std::move(sol.report)};
}

LinearCoef solve_classo(const Matrix& d, const Vector& y, Eigen::Index n_controls, double radius,
                        const SolverConfig& cfg) {
    if (!(radius > 0.0)) throw std::invalid_argument("classo radius K must be positive");
    const Eigen::RowVectorXd d_mean = d.colwise().mean();
    const double y_mean = y.mean();
    const Matrix dc = d.rowwise() - d_mean;
    const Vector yc = y.array() - y_mean;
    auto sol = projected_gradient_ls(dc, yc, l1_ball_projector(radius, n_controls), cfg);
    const double mu = y_mean - d_mean.dot(sol.coefficients);
    return {mu, std::move(sol.coefficients), std::move(sol.report)};
}

LinearCoef solve_penalized(const Matrix& d, const Vector& y, const Penalty& penalty, const SolverConfig& cfg) {
    auto sol = coordinate_descent_penalized(d, y, penalty, cfg);
    return {sol.intercept, std::move(sol.coefficients), std::move(sol.report)};
}

double did_intercept(const Vector& y, const Matrix& controls) {
    return (y - controls.rowwise().mean()).mean();
}

ProxyFit finish(Vector proxy, const Vector& y, std::string id, bool invariant) {
    ProxyFit out;
    out.residuals = y - proxy;
    out.proxy = std::move(proxy);
    out.estimator_id = std::move(id);
    out.permutation_invariant = invariant;
    return out;
}

ProxyFit linear_fit(const Matrix& d, const Vector& y, LinearCoef coef, std::string id, bool invariant) {
    Vector proxy = (d * coef.weights).array() + coef.intercept;
    ProxyFit out = finish(std::move(proxy), y, std::move(id), invariant);
    out.intercept = coef.intercept;
    out.coefficients = std::move(coef.weights);
    out.diagnostics = std::move(coef.report);
    if (!out.diagnostics.converged) out.flags.emplace_back("solver_not_converged");
    return out;
}

void check_lags(int lags, int periods) {
    if (lags < 1) throw std::invalid_argument("lag order must be >= 1");
    if (periods <= lags + 1) {
        throw DimensionError("series of length " + std::to_string(periods) + " is too short for " +
                             std::to_string(lags) + " lags");
    }
}

}  // namespace

std::string estimator_id(const EstimatorSpec& spec) {
    return std::visit(overloaded{
                          [](const model::Ar& a) { return "ar(lags=" + std::to_string(a.lags) + ")"; },
                          [](const model::Fused& f) {
                              return "fused(" + panel_id(f.base) + ",lags=" + std::to_string(f.lags) + ")";
                          },
                          [](const model::NonlinearAr& n) { return n.id; },
                          [](const model::Custom& c) { return c.id; },
                          [](const auto& m) { return panel_id(model::Panel(m)); },
                      },
                      spec.model);
}

int consumed_periods(const EstimatorSpec& spec) {
    return std::visit(overloaded{
                          [](const model::Ar& a) { return a.lags; },
                          [](const model::Fused& f) { return f.lags; },
                          [](const model::NonlinearAr& n) { return n.lags; },
                          [](const auto&) { return 0; },
                      },
                      spec.model);
}

ProxyFit fit_did(const NullAdjustedData& z) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    require_controls(p);
    const Vector y = p.treated();
    const Matrix controls = p.controls();
    const double mu = did_intercept(y, controls);
    Vector proxy = controls.rowwise().mean().array() + mu;
    ProxyFit out = finish(std::move(proxy), y, "did", true);
    out.intercept = mu;
    out.coefficients = Vector::Constant(p.n_controls(), 1.0 / p.n_controls());
    out.diagnostics.converged = true;
    out.diagnostics.final_objective = out.residuals.squaredNorm();
    return out;
}

ProxyFit fit_sc(const NullAdjustedData& z, const SolverConfig& cfg) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    require_controls(p);
    const Matrix d = weight_design(p, true);
    const Vector y = p.treated();
    return linear_fit(d, y, solve_sc(d, y, p.n_controls(), cfg), "sc", true);
}

ProxyFit fit_classo(const NullAdjustedData& z, double radius, const SolverConfig& cfg) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    require_controls(p);
    const Matrix d = weight_design(p, true);
    const Vector y = p.treated();
    return linear_fit(d, y, solve_classo(d, y, p.n_controls(), radius, cfg), "classo(K=" + num(radius) + ")", true);
}

ProxyFit fit_penalized(const NullAdjustedData& z, const Penalty& penalty, const SolverConfig& cfg) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    require_controls(p);
    const Matrix d = weight_design(p, false);
    const Vector y = p.treated();
    const std::string id = std::visit([](const auto& pen) { return panel_id(model::Panel(pen)); }, penalty);
    return linear_fit(d, y, solve_penalized(d, y, penalty, cfg), id, true);
}

ProxyFit fit_factor(const NullAdjustedData& z, int k) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    const FactorEstimate f = pca_factors(p.outcomes(), k);
    Vector proxy = f.factors * f.loadings.row(0).transpose();
    ProxyFit out = finish(std::move(proxy), p.treated(), "factor(k=" + std::to_string(k) + ")", true);
    out.diagnostics.converged = true;
    out.diagnostics.final_objective = out.residuals.squaredNorm();
    return out;
}

ProxyFit fit_interactive_fe(const NullAdjustedData& z, int k, const SolverConfig& cfg) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    if (!p.has_covariates()) {
        throw MissingCovariatesError("interactive fixed effects need covariates; use the factor model without them");
    }
    InteractiveFeEstimate est = alternating_ls(p.outcomes(), p.covariates(), k, cfg);
    Vector proxy = est.factors * est.loadings.row(0).transpose();
    for (int c = 0; c < p.n_covariates(); ++c) proxy += est.beta[c] * p.covariates()[static_cast<std::size_t>(c)].col(0);
    ProxyFit out = finish(std::move(proxy), p.treated(), "interactive_fe(k=" + std::to_string(k) + ")", true);
    out.coefficients = std::move(est.beta);
    out.diagnostics = std::move(est.report);
    if (!out.diagnostics.converged) out.flags.emplace_back("solver_not_converged");
    return out;
}

ProxyFit fit_matrix_completion(const NullAdjustedData& z, std::optional<double> radius, const SolverConfig& cfg) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    const double k = radius ? *radius : default_nuclear_radius(p.outcomes());
    NuclearBallSolution sol = nuclear_ball_least_squares(p.outcomes(), k, cfg);
    Vector proxy = sol.estimate.col(0);
    ProxyFit out = finish(std::move(proxy), p.treated(), "matrix_completion(K=" + num(k) + ")", true);
    out.diagnostics = std::move(sol.report);
    if (!out.diagnostics.converged) out.flags.emplace_back("solver_not_converged");
    return out;
}

ProxyFit fit_ar(const NullAdjustedData& z, int lags) {
    const PanelData& p = z.panel();
    require_single_treated(p);
    const int t = p.periods();
    check_lags(lags, t);
    const Vector y = p.treated();
    const int rows = t - lags;

    // Lag columns with no variation over the window are collinear with the
    // intercept; they are dropped and get coefficient 0.
    std::vector<int> kept;
    for (int j = 1; j <= lags; ++j) {
        const auto col = y.segment(lags - j, rows);
        if (col.maxCoeff() > col.minCoeff()) kept.push_back(j);
    }
    Matrix design(rows, 1 + static_cast<Eigen::Index>(kept.size()));
    design.col(0).setOnes();
    for (std::size_t c = 0; c < kept.size(); ++c) {
        design.col(static_cast<Eigen::Index>(c) + 1) = y.segment(lags - kept[c], rows);
    }
    const Vector target = y.tail(rows);
    const Vector rho_kept = ols(design, target);

    Vector rho = Vector::Zero(lags + 1);
    rho[0] = rho_kept[0];
    for (std::size_t c = 0; c < kept.size(); ++c) rho[kept[c]] = rho_kept[static_cast<Eigen::Index>(c) + 1];

    ProxyFit out = finish(design * rho_kept, target, "ar(lags=" + std::to_string(lags) + ")", false);
    out.consumed = lags;
    out.intercept = rho[0];
    out.coefficients = rho.tail(lags);
    out.diagnostics.converged = true;
    out.diagnostics.final_objective = out.residuals.squaredNorm();
    if (static_cast<int>(kept.size()) < lags) out.flags.emplace_back("constant_lags_dropped");
    return out;
}

ProxyFit fit_fused(const NullAdjustedData& z, const model::Panel& base, int lags, const SolverConfig& cfg) {
    const int t = z.periods();
    check_lags(lags, t);
    ProxyFit stage1 = fit(z, EstimatorSpec{widen(base), cfg});
    const Vector& eps = stage1.residuals;
    const int rows = t - lags;

    Matrix lagged(rows, lags);
    for (int j = 1; j <= lags; ++j) lagged.col(j - 1) = eps.segment(lags - j, rows);
    const Vector target = eps.tail(rows);

    Vector rho = Vector::Zero(lags);
    bool degenerate = false;
    const double scale = 1.0 + z.treated().lpNorm<Eigen::Infinity>();
    if (eps.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
        degenerate = true;
    } else {
        try {
            rho = ols(lagged, target);
        } catch (const RankDeficiencyError&) {
            degenerate = true;
        }
    }
    const Vector correction = lagged * rho;

    ProxyFit out;
    out.proxy = stage1.proxy.tail(rows) + correction;
    out.residuals = target - correction;
    out.consumed = lags;
    out.estimator_id = "fused(" + panel_id(base) + ",lags=" + std::to_string(lags) + ")";
    out.permutation_invariant = false;
    out.intercept = stage1.intercept;
    out.coefficients = rho;
    out.diagnostics = std::move(stage1.diagnostics);
    out.flags = std::move(stage1.flags);
    if (degenerate) out.flags.emplace_back("degenerate_stage2");
    return out;
}

ProxyFit fit(const NullAdjustedData& z, const EstimatorSpec& spec) {
    const SolverConfig& cfg = spec.solver;
    return std::visit(overloaded{
                          [&](const model::Did&) { return fit_did(z); },
                          [&](const model::Sc&) { return fit_sc(z, cfg); },
                          [&](const model::Classo& c) { return fit_classo(z, c.radius, cfg); },
                          [&](const Lasso& l) { return fit_penalized(z, l, cfg); },
                          [&](const ElasticNet& e) { return fit_penalized(z, e, cfg); },
                          [&](const model::Factor& f) { return fit_factor(z, f.k); },
                          [&](const model::InteractiveFe& f) { return fit_interactive_fe(z, f.k, cfg); },
                          [&](const model::MatrixCompletion& m) { return fit_matrix_completion(z, m.radius, cfg); },
                          [&](const model::Ar& a) { return fit_ar(z, a.lags); },
                          [&](const model::Fused& f) { return fit_fused(z, f.base, f.lags, cfg); },
                          [&](const model::NonlinearAr& n) {
                              require_single_treated(z.panel());
                              check_lags(n.lags, z.periods());
                              if (!n.fit_predict) throw std::invalid_argument("nonlinear AR fitter is empty");
                              const Vector y = z.treated();
                              Vector pred = n.fit_predict(std::span<const double>(y.data(), y.size()), n.lags);
                              if (pred.size() != z.periods() - n.lags) {
                                  throw DimensionError("nonlinear AR fitter returned the wrong number of predictions");
                              }
                              ProxyFit out = finish(std::move(pred), y.tail(z.periods() - n.lags), n.id, false);
                              out.consumed = n.lags;
                              out.diagnostics.converged = true;
                              return out;
                          },
                          [&](const model::Custom& c) {
                              if (!c.fit) throw std::invalid_argument("custom estimator has no fit function");
                              ProxyFit out = c.fit(z);
                              if (out.residuals.size() != z.periods() - out.consumed ||
                                  out.proxy.size() != out.residuals.size()) {
                                  throw DimensionError("custom estimator returned an inconsistent fit window");
                              }
                              if (out.estimator_id.empty()) out.estimator_id = c.id;
                              return out;
                          },
                      },
                      spec.model);
}

ProxyFit fit_pre_treatment_only(const PanelData& panel, const EstimatorSpec& spec) {
    require_single_treated(panel);
    require_controls(panel);
    const int t0 = panel.t0();
    const Vector y = panel.treated();
    const Vector y_pre = y.head(t0);
    const std::string suffix = "[pre-only]";

    return std::visit(
        overloaded{
            [&](const model::Did&) {
                const Matrix controls = panel.controls();
                const double mu = did_intercept(y_pre, controls.topRows(t0));
                Vector proxy = controls.rowwise().mean().array() + mu;
                ProxyFit out = finish(std::move(proxy), y, "did" + suffix, false);
                out.intercept = mu;
                out.diagnostics.converged = true;
                return out;
            },
            [&](const model::Sc&) {
                const Matrix d = weight_design(panel, true);
                return linear_fit(d, y, solve_sc(d.topRows(t0), y_pre, panel.n_controls(), spec.solver),
                                  "sc" + suffix, false);
            },
            [&](const model::Classo& c) {
                const Matrix d = weight_design(panel, true);
                return linear_fit(d, y, solve_classo(d.topRows(t0), y_pre, panel.n_controls(), c.radius, spec.solver),
                                  "classo(K=" + num(c.radius) + ")" + suffix, false);
            },
            [&](const Lasso& l) {
                const Matrix d = weight_design(panel, false);
                return linear_fit(d, y, solve_penalized(d.topRows(t0), y_pre, l, spec.solver),
                                  panel_id(model::Panel(l)) + suffix, false);
            },
            [&](const ElasticNet& e) {
                const Matrix d = weight_design(panel, false);
                return linear_fit(d, y, solve_penalized(d.topRows(t0), y_pre, e, spec.solver),
                                  panel_id(model::Panel(e)) + suffix, false);
            },
            [&](const auto&) -> ProxyFit {
                throw std::invalid_argument("pre-treatment-only fitting is available for did, sc, classo, lasso and "
                                            "elastic_net");
            },
        },
        spec.model);
}

}  // namespace csc
