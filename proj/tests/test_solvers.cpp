#include "csc/error.hpp"
#include "csc/solvers.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace csc;
using csc::testing::random_matrix;
using csc::testing::random_vector;

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

SolverConfig tight() {
    SolverConfig cfg;
    cfg.tol = 1e-10;
    cfg.max_iters = 100'000;
    return cfg;
}

}  // namespace

TEST_CASE("simplex projection") {
    SUBCASE("point on the simplex is fixed") {
        const Vector v = Vector::Constant(4, 0.25);
        CHECK(max_abs_diff(project_simplex(v), v) <= 1e-15);
        Vector u(3);
        u << 0.2, 0.5, 0.3;
        CHECK(max_abs_diff(project_simplex(u), u) <= 1e-15);
    }
    SUBCASE("vertex") {
        Vector v(2);
        v << 2.0, 0.0;
        const Vector p = project_simplex(v);
        CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p[1] == doctest::Approx(0.0));
    }
    SUBCASE("random vectors against a grid oracle") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 12; ++trial) {
            const int j = 2 + trial % 3;
            const Vector v = 1.5 * random_vector(j, rng);
            const Vector p = project_simplex(v);
            CHECK(p.minCoeff() >= 0.0);
            CHECK(std::fabs(p.sum() - 1.0) <= 1e-12);
            const auto oracle =
                csc::testing::simplex_grid_minimize(j, 1e-3, [&](const Vector& w) { return (w - v).squaredNorm(); });
            CHECK(max_abs_diff(p, oracle.point) <= 2e-3);
        }
    }
    SUBCASE("radius other than one") {
        Vector v(3);
        v << 5.0, 1.0, -2.0;
        const Vector p = project_simplex(v, 2.0);
        CHECK(p.sum() == doctest::Approx(2.0));
        CHECK(p[0] == doctest::Approx(2.0));
    }
}

TEST_CASE("l1 ball projection") {
    SUBCASE("interior point is fixed") {
        Vector v(3);
        v << 0.2, -0.3, 0.1;
        CHECK(max_abs_diff(project_l1_ball(v, 1.0), v) == 0.0);
    }
    SUBCASE("scalar clip") {
        Vector v(1);
        v << 3.0;
        CHECK(project_l1_ball(v, 1.0)[0] == doctest::Approx(1.0));
        v << -3.0;
        CHECK(project_l1_ball(v, 1.0)[0] == doctest::Approx(-1.0));
    }
    SUBCASE("random vectors against threshold bisection") {
        std::mt19937_64 rng(12);
        for (int trial = 0; trial < 200; ++trial) {
            const int n = 1 + trial % 9;
            const double radius = 0.25 + 0.25 * (trial % 8);
            const Vector v = 2.0 * random_vector(n, rng);
            const Vector p = project_l1_ball(v, radius);
            CHECK(p.lpNorm<1>() <= radius + 1e-12);
            CHECK(max_abs_diff(p, csc::testing::l1_projection_by_bisection(v, radius)) <= 1e-10);
        }
    }
}

TEST_CASE("nuclear ball projection") {
    SUBCASE("interior matrix is fixed") {
        std::mt19937_64 rng(13);
        const Matrix a = random_matrix(5, 4, rng);
        const double nuc = a.jacobiSvd().singularValues().sum();
        CHECK(max_abs_diff(project_nuclear_ball(a, nuc + 1.0), a) <= 1e-10);
    }
    SUBCASE("diagonal") {
        Matrix a = Matrix::Zero(2, 2);
        a(0, 0) = 3.0;
        a(1, 1) = 1.0;
        Matrix expected = Matrix::Zero(2, 2);
        expected(0, 0) = 2.0;
        CHECK(max_abs_diff(project_nuclear_ball(a, 2.0), expected) <= 1e-12);
    }
    SUBCASE("rank one is rescaled") {
        std::mt19937_64 rng(14);
        const Vector u = random_vector(6, rng).normalized();
        const Vector v = random_vector(4, rng).normalized();
        const Matrix a = 5.0 * u * v.transpose();
        CHECK(max_abs_diff(project_nuclear_ball(a, 2.0), 2.0 * u * v.transpose()) <= 1e-12);
    }
    SUBCASE("output norm bound") {
        std::mt19937_64 rng(15);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix a = random_matrix(6, 3 + trial % 4, rng);
            const Matrix p = project_nuclear_ball(a, 1.5);
            CHECK(p.jacobiSvd().singularValues().sum() <= 1.5 + 1e-9);
        }
    }
}

TEST_CASE("projections are idempotent and non-expansive") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 6;
        const Vector u = 2.0 * random_vector(n, rng);
        const Vector v = 2.0 * random_vector(n, rng);

        const Vector su = project_simplex(u), sv = project_simplex(v);
        CHECK(max_abs_diff(project_simplex(su), su) <= 1e-12);
        CHECK((su - sv).norm() <= (u - v).norm() + 1e-12);

        const Vector lu = project_l1_ball(u, 1.0), lv = project_l1_ball(v, 1.0);
        CHECK(max_abs_diff(project_l1_ball(lu, 1.0), lu) <= 1e-12);
        CHECK((lu - lv).norm() <= (u - v).norm() + 1e-12);

        const Matrix a = random_matrix(n, 3, rng), b = random_matrix(n, 3, rng);
        const Matrix pa = project_nuclear_ball(a, 1.0), pb = project_nuclear_ball(b, 1.0);
        CHECK(max_abs_diff(project_nuclear_ball(pa, 1.0), pa) <= 1e-12);
        CHECK((pa - pb).norm() <= (a - b).norm() + 1e-12);
    }
}

TEST_CASE("partial projectors leave free coordinates alone") {
    Vector v(4);
    v << 2.0, 0.0, 7.0, -3.0;
    simplex_projector(2)(v);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
    CHECK(v[2] == 7.0);
    CHECK(v[3] == -3.0);

    Vector w(3);
    w << 3.0, 0.0, 5.0;
    l1_ball_projector(1.0, 1)(w);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[2] == 5.0);

    Vector z(2);
    z << 1.0, 2.0;
    identity_projector()(z);
    CHECK(z[1] == 2.0);
}

TEST_CASE("projected gradient least squares") {
    SUBCASE("noise-free feasible truth is recovered") {
        std::mt19937_64 rng(21);
        const Matrix x = random_matrix(15, 4, rng);
        Vector w_true(4);
        w_true << 0.1, 0.6, 0.0, 0.3;
        const Vector y = x * w_true;
        const auto sol = projected_gradient_ls(x, y, simplex_projector(4), tight());
        CHECK(sol.report.converged);
        CHECK(sol.report.final_objective <= 1e-6);
        CHECK(max_abs_diff(sol.coefficients, w_true) <= 1e-5);
    }
    SUBCASE("two-unit simplex matches a line search") {
        std::mt19937_64 rng(22);
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix x = random_matrix(10, 2, rng);
            const Vector y = random_vector(10, rng);
            const auto sol = projected_gradient_ls(x, y, simplex_projector(2), tight());
            const csc::testing::Quadratic f(x, y);
            const auto oracle = csc::testing::zoom_minimize(
                {0.0}, {1.0}, 1e-2, 1e-6, [](const Vector&) { return true; },
                [&](const Vector& a) { return f(csc::testing::complete_simplex(a)); });
            CHECK(std::fabs(sol.coefficients[0] - oracle.point[0]) <= 1e-4);
            CHECK(sol.report.final_objective <= oracle.value + 1e-9);
        }
    }
    SUBCASE("three-unit l1 ball matches a dense grid") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 3; ++trial) {
            const Matrix x = random_matrix(10, 3, rng);
            const Vector y = random_vector(10, rng) + x.col(0);
            const auto sol = projected_gradient_ls(x, y, l1_ball_projector(1.0, 3), tight());
            CHECK(sol.coefficients.lpNorm<1>() <= 1.0 + 1e-12);
            const csc::testing::Quadratic f(x, y);
            const auto oracle = csc::testing::grid_minimize(
                {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, 1e-2,
                [](const Vector& w) { return w.lpNorm<1>() <= 1.0 + 1e-12; }, f);
            CHECK(sol.report.final_objective <= oracle.value + 1e-9);
            CHECK(sol.report.final_objective >= oracle.value - 5e-3);
        }
    }
    SUBCASE("objective trace is nonincreasing") {
        std::mt19937_64 rng(24);
        for (const bool accelerated : {false, true}) {
            SolverConfig cfg = tight();
            cfg.record_trace = true;
            cfg.accelerated = accelerated;
            const Matrix x = random_matrix(30, 8, rng);
            const Vector y = random_vector(30, rng);
            const auto sol = projected_gradient_ls(x, y, simplex_projector(8), cfg);
            const auto& trace = sol.report.objective_trace;
            REQUIRE(trace.size() >= 2);
            for (std::size_t i = 1; i < trace.size(); ++i) {
                // Rounding in the objective itself is the only allowed rise.
                CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12) + 1e-14);
            }
        }
    }
    SUBCASE("iteration cap reports non-convergence") {
        std::mt19937_64 rng(25);
        SolverConfig cfg;
        cfg.max_iters = 1;
        cfg.tol = 1e-14;
        const Matrix x = random_matrix(20, 6, rng);
        const Vector y = random_vector(20, rng);
        const auto sol = projected_gradient_ls(x, y, simplex_projector(6), cfg);
        CHECK_FALSE(sol.report.converged);
        CHECK(sol.report.iterations == 1);
        CHECK(sol.coefficients.sum() == doctest::Approx(1.0));
    }
    SUBCASE("converged implies certificate below threshold") {
        std::mt19937_64 rng(26);
        const Matrix x = random_matrix(20, 5, rng);
        const Vector y = random_vector(20, rng);
        const auto sol = projected_gradient_ls(x, y, l1_ball_projector(1.0, 5), SolverConfig{});
        REQUIRE(sol.report.converged);
        CHECK(sol.report.kkt_residual <= sol.report.kkt_threshold);
    }
}

TEST_CASE("solver config validation") {
    SolverConfig cfg;
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.tol = 1e-8;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("coordinate descent") {
    std::mt19937_64 rng(31);
    const Matrix x = random_matrix(10, 3, rng);
    const Vector y = random_vector(10, rng) + 0.5 * x.col(1);

    SUBCASE("no penalty is OLS with an intercept") {
        const auto sol = coordinate_descent_penalized(x, y, Lasso{0.0}, tight());
        Matrix design(10, 4);
        design.col(0).setOnes();
        design.rightCols(3) = x;
        const Vector b = design.householderQr().solve(y);
        CHECK(std::fabs(sol.intercept - b[0]) <= 1e-8);
        CHECK(max_abs_diff(sol.coefficients, b.tail(3)) <= 1e-8);
    }
    SUBCASE("large penalty shrinks to zero") {
        const Vector yc = y.array() - y.mean();
        const double lambda_max = 2.0 * (x.transpose() * yc).cwiseAbs().maxCoeff();
        const auto sol = coordinate_descent_penalized(x, y, Lasso{lambda_max * 1.01}, tight());
        CHECK(sol.coefficients.cwiseAbs().maxCoeff() == 0.0);
        CHECK(sol.intercept == doctest::Approx(y.mean()));
    }
    SUBCASE("perturbation never improves the objective") {
        for (const Penalty& pen : {Penalty{Lasso{1.5}}, Penalty{ElasticNet{2.0, 0.3}}, Penalty{Lasso{0.2}}}) {
            const auto sol = coordinate_descent_penalized(x, y, pen, tight());
            auto objective = [&](double mu, const Vector& w) {
                double p = 0.0;
                if (const auto* l = std::get_if<Lasso>(&pen)) p = l->lambda * w.lpNorm<1>();
                if (const auto* e = std::get_if<ElasticNet>(&pen)) {
                    p = e->lambda * ((1.0 - e->alpha) * w.squaredNorm() + e->alpha * w.lpNorm<1>());
                }
                return (y - x * w - Vector::Constant(10, mu)).squaredNorm() + p;
            };
            const double f0 = objective(sol.intercept, sol.coefficients);
            CHECK(sol.report.final_objective == doctest::Approx(f0));
            for (const double h : {1e-4, -1e-4}) {
                CHECK(objective(sol.intercept + h, sol.coefficients) >= f0 - 1e-12);
                for (int j = 0; j < 3; ++j) {
                    Vector w = sol.coefficients;
                    w[j] += h;
                    CHECK(objective(sol.intercept, w) >= f0 - 1e-12);
                }
            }
        }
    }
    SUBCASE("invalid penalties") {
        CHECK_THROWS_AS((void)coordinate_descent_penalized(x, y, Lasso{-1.0}, tight()), std::invalid_argument);
        CHECK_THROWS_AS((void)coordinate_descent_penalized(x, y, ElasticNet{1.0, 1.5}, tight()),
                        std::invalid_argument);
    }
}

TEST_CASE("principal components") {
    SUBCASE("rank one is reproduced") {
        std::mt19937_64 rng(41);
        const Vector f = random_vector(12, rng);
        const Vector l = random_vector(7, rng);
        const Matrix y = f * l.transpose();
        const auto est = pca_factors(y, 1);
        CHECK(max_abs_diff(est.factors * est.loadings.transpose(), y) <= 1e-8);
    }
    SUBCASE("full rank is reproduced") {
        std::mt19937_64 rng(42);
        const Matrix y = random_matrix(8, 5, rng);
        const auto est = pca_factors(y, 5);
        CHECK(max_abs_diff(est.factors * est.loadings.transpose(), y) <= 1e-8);
    }
    SUBCASE("residual energy matches an independent SVD") {
        std::mt19937_64 rng(43);
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix y = random_matrix(20, 10, rng);
            const auto est = pca_factors(y, 2);
            const Vector s = Eigen::JacobiSVD<Matrix>(y).singularValues();
            const double tail = s.tail(s.size() - 2).squaredNorm();
            CHECK((y - est.factors * est.loadings.transpose()).squaredNorm() == doctest::Approx(tail).epsilon(1e-10));
            CHECK(est.eigenvalues[0] == doctest::Approx(s[0] * s[0]));
        }
    }
    SUBCASE("normalization") {
        std::mt19937_64 rng(44);
        for (int trial = 0; trial < 10; ++trial) {
            const int t = 6 + trial, n = 4 + trial % 5, k = 1 + trial % 3;
            const Matrix y = random_matrix(t, n, rng);
            const auto est = pca_factors(y, k);
            const Matrix ftf = est.factors.transpose() * est.factors / t;
            CHECK(max_abs_diff(ftf, Matrix::Identity(k, k)) <= 1e-8);
            Matrix ltl = est.loadings.transpose() * est.loadings;
            ltl.diagonal().setZero();
            CHECK(ltl.cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + est.eigenvalues[0]));
            CHECK(max_abs_diff(est.loadings, y.transpose() * est.factors / t) <= 1e-12);
            for (int c = 0; c < k; ++c) {
                Eigen::Index at = 0;
                est.factors.col(c).cwiseAbs().maxCoeff(&at);
                CHECK(est.factors(at, c) > 0.0);
            }
        }
    }
    SUBCASE("rank above the panel dimensions") {
        std::mt19937_64 rng(45);
        CHECK_THROWS_AS((void)pca_factors(random_matrix(4, 3, rng), 4), std::invalid_argument);
    }
}

TEST_CASE("alternating least squares") {
    SUBCASE("no covariates gives the principal components") {
        std::mt19937_64 rng(51);
        const Matrix y = random_matrix(15, 6, rng);
        const auto als = alternating_ls(y, {}, 2, tight());
        const auto pca = pca_factors(y, 2);
        CHECK(max_abs_diff(als.factors, pca.factors) <= 1e-12);
        CHECK(max_abs_diff(als.loadings, pca.loadings) <= 1e-12);
        CHECK(als.beta.size() == 0);
    }
    SUBCASE("realizable model is fit exactly") {
        std::mt19937_64 rng(52);
        const Matrix f = random_matrix(20, 2, rng);
        const Matrix lam = random_matrix(8, 2, rng);
        const Matrix x1 = random_matrix(20, 8, rng);
        const Matrix y = f * lam.transpose() + 0.7 * x1;
        const auto est = alternating_ls(y, {x1}, 2, tight());
        const Matrix resid = y - est.beta[0] * x1 - est.factors * est.loadings.transpose();
        CHECK(resid.squaredNorm() <= 1e-6);
        CHECK(est.beta[0] == doctest::Approx(0.7).epsilon(1e-4));
    }
    SUBCASE("objective is monotone") {
        std::mt19937_64 rng(53);
        for (int trial = 0; trial < 10; ++trial) {
            const Matrix y = random_matrix(12, 6, rng);
            const Matrix x1 = random_matrix(12, 6, rng);
            const Matrix x2 = random_matrix(12, 6, rng);
            const auto est = alternating_ls(y + 0.5 * x1, {x1, x2}, 1, tight());
            const auto& trace = est.report.objective_trace;
            REQUIRE(trace.size() >= 2);
            for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("nuclear ball least squares") {
    std::mt19937_64 rng(61);
    const Matrix y = random_matrix(10, 6, rng);
    const double nuc = y.jacobiSvd().singularValues().sum();
    SUBCASE("loose radius returns the data") {
        const auto sol = nuclear_ball_least_squares(y, nuc * 2.0, tight());
        CHECK(max_abs_diff(sol.estimate, y) <= 1e-8);
    }
    SUBCASE("tight radius is the projection of the data") {
        const auto sol = nuclear_ball_least_squares(y, 2.0, tight());
        CHECK(max_abs_diff(sol.estimate, project_nuclear_ball(y, 2.0)) <= 1e-6);
    }
    SUBCASE("default radius") {
        Eigen::JacobiSVD<Matrix> svd(y);
        const int r = 1;  // ceil(6 / 10)
        CHECK(default_nuclear_radius(y) == doctest::Approx(1.5 * svd.singularValues().head(r).sum()));
    }
}

TEST_CASE("ordinary least squares") {
    SUBCASE("identity design") {
        std::mt19937_64 rng(71);
        const Vector y = random_vector(5, rng);
        CHECK(max_abs_diff(ols(Matrix::Identity(5, 5), y), y) <= 1e-15);
    }
    SUBCASE("exact fit") {
        std::mt19937_64 rng(72);
        const Matrix x = random_matrix(20, 4, rng);
        const Vector b = random_vector(4, rng);
        CHECK(max_abs_diff(ols(x, x * b), b) <= 1e-10);
    }
    SUBCASE("agrees with QR and satisfies the normal equations") {
        std::mt19937_64 rng(73);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix x = random_matrix(30, 1 + trial % 6, rng);
            const Vector y = random_vector(30, rng);
            const Vector b = ols(x, y);
            CHECK(max_abs_diff(b, x.colPivHouseholderQr().solve(y)) <= 1e-9);
            const double scale = (x.transpose() * y).cwiseAbs().maxCoeff();
            CHECK((x.transpose() * (y - x * b)).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        }
    }
    SUBCASE("collinear design") {
        std::mt19937_64 rng(74);
        Matrix x = random_matrix(10, 3, rng);
        x.col(2) = x.col(0) - 2.0 * x.col(1);
        try {
            (void)ols(x, random_vector(10, rng));
            FAIL("expected RankDeficiencyError");
        } catch (const RankDeficiencyError& e) {
            CHECK(e.condition_number() > kMaxGramCondition);
            CHECK(std::string(e.what()).find("condition number") != std::string::npos);
        }
    }
}
