// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "csc/estimators.hpp"
#include "csc/inference.hpp"
#include "csc/io.hpp"
#include "csc/rng.hpp"
#include "csc/simulation.hpp"
#include "csc/solvers.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace csc;
using csc::testing::random_matrix;
using csc::testing::random_vector;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!ok || detail.size() < 400) {
            if (!detail.empty()) detail += "; ";
            detail += (ok ? "" : "FAILED ") + what;
        }
    }
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

bool within(double v, double target, double tol) { return std::fabs(v - target) <= tol; }

std::string rate_note(const std::string& name, double v, double target, double tol) {
    return name + " " + num(v) + " (target " + num(target, 2) + " +- " + num(tol, 3) + ")";
}

// Size of the SC moving-block test on the factor design with rho = 0.
Outcome ac1() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    DgpSpec dgp;
    dgp.t0 = 20;
    dgp.n_controls = 20;
    dgp.weights = WeightsKind::dgp2;
    dgp.seed = 1;
    ExperimentOptions opt;
    opt.n_reps = 5000;
    const auto r = run_size_experiment(dgp, {model::Sc{}}, {}, Statistic::sq(1), opt);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(r.rejection_rate >= 0.08 && r.rejection_rate <= 0.12,
              "rejection " + num(r.rejection_rate) + " in [0.08, 0.12]");
    for (const double a : {0.05, 0.1, 0.2}) {
        const auto k = std::count_if(r.p_values.begin(), r.p_values.end(), [&](double p) { return p <= a + 1e-12; });
        const double cdf = static_cast<double>(k) / r.n_reps;
        o.require(cdf <= a + 0.015, "P(p<=" + num(a, 2) + ") " + num(cdf) + " <= " + num(a + 0.015, 3));
    }
    o.require(secs < 600.0, "runtime " + num(secs, 1) + " s");
    return o;
}

struct SizeCells {
    std::vector<double> rates;
    std::string error;
};

// The size-table preset of the simulate command, 5000 reps per cell.
SizeCells size_subset() {
    SizeCells out;
    try {
        io::RunConfig c;
        c.command = io::Command::simulate;
        c.preset = "size_subset";
        c.n_reps = 5000;
        c.seed = 0;
        c.out = (std::filesystem::temp_directory_path() / "csc_acceptance_size").string();
        const json doc = json::parse(io::cmd_simulate(c));
        for (const auto& e : doc["experiments"]) out.rates.push_back(e["rejection_rate"].get<double>());
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

Outcome table_cells(const SizeCells& cells, std::size_t first, const std::vector<std::string>& names,
                    const std::vector<double>& targets, const std::vector<double>& tols) {
    Outcome o;
    if (!cells.error.empty() || cells.rates.size() < first + names.size()) {
        o.require(false, "simulate preset failed: " + cells.error);
        return o;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = cells.rates[first + i];
        o.require(within(v, targets[i], tols[i]), rate_note(names[i], v, targets[i], tols[i]));
    }
    return o;
}

Outcome ac5() {
    Outcome o;
    FigureOptions f;
    f.rho_grid = {0.0, 0.3, 0.6};
    f.t0_grid = {19};
    f.n_controls = 50;
    f.n_reps = 2000;
    f.seed = 0;
    const auto rows = reproduce_figure_null_vs_pre(f);
    std::vector<double> gaps;
    for (const double rho : f.rho_grid) {
        double under = NAN, pre = NAN;
        for (const auto& r : rows) {
            if (r.rho_u != rho) continue;
            (r.mode == FitMode::under_null ? under : pre) = r.rejection_rate;
        }
        o.require(under <= 0.13, "rho " + num(rho, 1) + " under-null " + num(under) + " <= 0.13");
        o.require(pre > under, "pre-only " + num(pre) + " > under-null");
        gaps.push_back(pre - under);
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        o.require(gaps[i] > gaps[i - 1],
                  "gap at rho " + num(f.rho_grid[i], 1) + " " + num(gaps[i]) + " > " + num(gaps[i - 1]));
    }
    return o;
}

// |y - mu - X w|^2 minimized over mu: the centered quadratic.
csc::testing::Quadratic centered(const Matrix& x, const Vector& y) {
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Vector yc = y.array() - y.mean();
    return csc::testing::Quadratic(xc, yc);
}

Vector simplex_by_bisection(const Vector& v) {
    double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((v.array() - mid).max(0.0).sum() > 1.0 ? lo : hi) = mid;
    }
    return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

Outcome ac6() {
    Outcome o;
    double worst_sc = 0.0, worst_classo = 0.0, worst_proj = 0.0;
    int solver_beats_grid = 0;
    for (int i = 0; i < 100; ++i) {
        auto rng = stream_rng(6, static_cast<std::uint64_t>(i));
        std::uniform_int_distribution<int> t_dist(4, 12), j_dist(1, 3);
        const int t = t_dist(rng), j = j_dist(rng);
        const Matrix x = random_matrix(t, j, rng);
        const Vector y = x * random_vector(j, rng) * 0.5 + random_vector(t, rng);
        Matrix m(t, j + 1);
        m.col(0) = y;
        m.rightCols(j) = x;
        const NullAdjustedData z = adjust_under_null(PanelData(m, t - 1, 1), EffectTrajectory::zeros(1));

        const double sc = fit_sc(z).residuals.squaredNorm();
        const csc::testing::Quadratic f_sc(x, y);
        const auto g_sc = csc::testing::simplex_grid_minimize(j, 1e-3, f_sc);
        worst_sc = std::max(worst_sc, std::fabs(sc - g_sc.value));

        const double classo = fit_classo(z, 1.0).residuals.squaredNorm();
        const auto f_cl = centered(x, y);
        const std::vector<double> lo(static_cast<std::size_t>(j), -1.0), hi(static_cast<std::size_t>(j), 1.0);
        const auto g_cl = csc::testing::zoom_minimize(
            lo, hi, j == 3 ? 0.02 : 0.01, 1e-3, [](const Vector& w) { return w.lpNorm<1>() <= 1.0 + 1e-12; }, f_cl);
        worst_classo = std::max(worst_classo, std::fabs(classo - g_cl.value));
        if (sc <= g_sc.value + 1e-9 && classo <= g_cl.value + 1e-9) ++solver_beats_grid;

        const Vector v = 1.5 * random_vector(j + 2, rng);
        worst_proj = std::max(worst_proj, (project_simplex(v) - simplex_by_bisection(v)).cwiseAbs().maxCoeff());
        const double radius = 0.2 + 0.1 * (i % 10);
        worst_proj = std::max(worst_proj, (project_l1_ball(v, radius) -
                                           csc::testing::l1_projection_by_bisection(v, radius))
                                              .cwiseAbs()
                                              .maxCoeff());
        Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector s = csc::testing::l1_projection_by_bisection(svd.singularValues(), radius * 3.0);
        const Matrix nuc = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
        worst_proj = std::max(worst_proj, (project_nuclear_ball(m, radius * 3.0) - nuc).cwiseAbs().maxCoeff());
    }
    o.require(worst_sc <= 5e-3, "SC max |gap| " + sci(worst_sc) + " <= 5e-3");
    o.require(worst_classo <= 5e-3, "classo max |gap| " + sci(worst_classo) + " <= 5e-3");
    o.require(worst_proj <= 1e-6, "projection max diff " + sci(worst_proj) + " <= 1e-6");
    o.detail += "; solver at or below grid on " + std::to_string(solver_beats_grid) + "/100";
    return o;
}

Outcome ac7() {
    Outcome o;
    const std::vector<std::pair<std::string, model::Any>> models{{"did", model::Did{}},
                                                                 {"sc", model::Sc{}},
                                                                 {"classo", model::Classo{}},
                                                                 {"factor", model::Factor{1}},
                                                                 {"mc", model::MatrixCompletion{}}};
    for (const auto& [name, m] : models) {
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            auto rng = stream_rng(7, static_cast<std::uint64_t>(i));
            std::uniform_int_distribution<int> t_dist(6, 14), j_dist(2, 6);
            const int t = t_dist(rng);
            const PanelData p = csc::testing::random_panel(t, t - 2, j_dist(rng) + 1, rng);
            const auto order = csc::testing::random_order(t, rng);
            const EstimatorSpec spec{m};
            const auto base = fit(adjust_under_null(p, EffectTrajectory::zeros(2)), spec);
            const PanelData q = permute_rows(p, order);
            const auto perm = fit(adjust_under_null(q, EffectTrajectory::zeros(2)), spec);
            for (int r = 0; r < t; ++r) {
                worst = std::max(worst, std::fabs(perm.residuals[r] - base.residuals[order[static_cast<std::size_t>(r)]]));
            }
        }
        o.require(worst <= 1e-8, name + " " + sci(worst));
    }
    return o;
}

Outcome ac8() {
    Outcome o;
    Vector u(4);
    u << 1, 2, 3, 4;
    const auto r = p_value(u, {4, 4}, PermutationScheme::moving_block(4), Statistic::sq(1));
    o.require(r.p_value == 0.25, "p = " + num(r.p_value, 17));
    return o;
}

Outcome ac9() {
    Outcome o;
    double worst_norm = 0.0, worst_rec = 0.0;
    int monotone = 0;
    for (int i = 0; i < 50; ++i) {
        auto rng = stream_rng(9, static_cast<std::uint64_t>(i));
        const int t = 8 + i % 13, n = 4 + i % 7, k = 1 + i % 3;
        const Matrix y = random_matrix(t, n, rng);
        const auto est = pca_factors(y, k);
        worst_norm = std::max(
            worst_norm, (est.factors.transpose() * est.factors / t - Matrix::Identity(k, k)).cwiseAbs().maxCoeff());

        const Matrix low = random_matrix(t, k, rng) * random_matrix(k, n, rng);
        const auto exact = pca_factors(low, k);
        worst_rec = std::max(worst_rec, (exact.factors * exact.loadings.transpose() - low).cwiseAbs().maxCoeff());

        const Matrix x = random_matrix(t, n, rng);
        SolverConfig cfg;
        const auto als = alternating_ls(y + 0.5 * x, {x}, k, cfg);
        const auto& tr = als.report.objective_trace;
        bool ok = tr.size() >= 2;
        for (std::size_t s = 1; s < tr.size(); ++s) ok = ok && tr[s] <= tr[s - 1] * (1.0 + 1e-12);
        monotone += ok ? 1 : 0;
    }
    o.require(worst_norm <= 1e-8, "F'F/T - I max " + sci(worst_norm));
    o.require(worst_rec <= 1e-6, "low-rank reconstruction max " + sci(worst_rec));
    o.require(monotone == 50, "ALS monotone on " + std::to_string(monotone) + "/50");
    return o;
}

Outcome ac10() {
    Outcome o;
    const std::vector<double> grid{0.0, 0.5, 1.0, 1.6449, 2.0, 3.0, 4.0};
    const auto bound = oracle_power_bound(grid, 0.1);
    o.require(bound[0] == 0.1, "alpha 0 bound " + num(bound[0], 17) + " == 0.1");
    double worst = 0.0;
    // One sample of 10^6 draws, evaluated at every alpha.
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double sim = simulate_oracle_power(grid[i], 0.1, 1'000'000, 10);
        const double se = std::sqrt(bound[i] * (1.0 - bound[i]) / 1e6);
        worst = std::max(worst, std::fabs(sim - bound[i]) / se);
    }
    o.require(worst <= 3.0, "max |sim - bound| / MC-SE " + num(worst, 2) + " <= 3");
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](const char* id, const Outcome& o) {
        std::printf("%s %s %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    };
    report("AC1", ac1());
    const SizeCells cells = size_subset();
    report("AC2", table_cells(cells, 0, {"SC/DGP2/20/50", "classo/DGP3/50/50", "DiD/DGP1/100/100"}, {0.10, 0.10, 0.10},
                              {0.02, 0.02, 0.02}));
    report("AC3", table_cells(cells, 3, {"SC/DGP2/20/50", "classo/DGP1/50/100", "DiD/DGP4/100/20"}, {0.11, 0.12, 0.11},
                              {0.025, 0.025, 0.025}));
    report("AC4", table_cells(cells, 6, {"DiD trending", "classo trending"}, {0.75, 0.10}, {0.04, 0.02}));
    report("AC5", ac5());
    report("AC6", ac6());
    report("AC7", ac7());
    report("AC8", ac8());
    report("AC9", ac9());
    report("AC10", ac10());
    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
