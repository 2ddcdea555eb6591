#include "csc/error.hpp"
#include "csc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace csc {

Vector project_simplex(const Vector& v, double radius) {
    const Eigen::Index n = v.size();
    if (n == 0) return v;
    // Stable order on equal values keeps the result reproducible bit for bit.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] > v[b]; });

    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += v[order[static_cast<std::size_t>(j)]];
        const double candidate = (cumsum - radius) / static_cast<double>(j + 1);
        if (v[order[static_cast<std::size_t>(j)]] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).max(0.0).matrix();
}

Vector project_l1_ball(const Vector& v, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("l1 ball radius must be positive");
    if (v.lpNorm<1>() <= radius) return v;
    const Vector magnitude = project_simplex(v.cwiseAbs(), radius);
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] < 0.0 ? -magnitude[i] : magnitude[i];
    return out;
}

Matrix project_nuclear_ball(const Matrix& a, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("nuclear ball radius must be positive");
    if (!a.allFinite()) {
        throw NumericalError("SVD failed: matrix of size " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " has non-finite entries");
    }
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        const auto& s = svd.singularValues();
        const double cond = s.size() > 0 && s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
        throw NumericalError("SVD failed to converge (condition number " + std::to_string(cond) + ")");
    }
    const Vector& s = svd.singularValues();
    if (s.sum() <= radius) return a;
    const Vector shrunk = project_simplex(s, radius);
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

Projector simplex_projector(Eigen::Index constrained) {
    return [constrained](Vector& w) { w.head(constrained) = project_simplex(w.head(constrained)); };
}

Projector l1_ball_projector(double radius, Eigen::Index constrained) {
    if (!(radius > 0.0)) throw std::invalid_argument("l1 ball radius must be positive");
    return [radius, constrained](Vector& w) { w.head(constrained) = project_l1_ball(w.head(constrained), radius); };
}

Projector identity_projector() {
    return [](Vector&) {};
}

}  // namespace csc
