#include "csc/panel.hpp"

#include "csc/error.hpp"

#include <string>

namespace csc {

namespace {

Matrix rows_mean_blocks(const Matrix& m, int block) {
    const Eigen::Index blocks = m.rows() / block;
    Matrix out(blocks, m.cols());
    for (Eigen::Index r = 0; r < blocks; ++r) {
        out.row(r) = m.middleRows(r * block, block).colwise().mean();
    }
    return out;
}

Matrix average_treated(const Matrix& m, int n_treated) {
    Matrix out(m.rows(), m.cols() - n_treated + 1);
    out.col(0) = m.leftCols(n_treated).rowwise().mean();
    out.rightCols(m.cols() - n_treated) = m.rightCols(m.cols() - n_treated);
    return out;
}

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

PanelData rebuild(const PanelData& src, const std::vector<int>& rows, int new_t0) {
    std::vector<Matrix> cov;
    cov.reserve(src.covariates().size());
    for (const auto& c : src.covariates()) cov.push_back(take_rows(c, rows));
    std::vector<std::string> times;
    if (!src.time_labels().empty()) {
        for (int r : rows) times.push_back(src.time_labels()[static_cast<std::size_t>(r)]);
    }
    return PanelData(take_rows(src.outcomes(), rows), new_t0, src.n_treated(), std::move(cov),
                     src.unit_labels(), std::move(times));
}

}  // namespace

PanelData::PanelData(Matrix outcomes, int t0, int n_treated, std::vector<Matrix> covariates,
                     std::vector<std::string> unit_labels, std::vector<std::string> time_labels)
    : outcomes_(std::move(outcomes)),
      covariates_(std::move(covariates)),
      t0_(t0),
      n_treated_(n_treated),
      unit_labels_(std::move(unit_labels)),
      time_labels_(std::move(time_labels)) {
    const auto T = outcomes_.rows();
    if (n_treated_ < 1) throw std::invalid_argument("panel needs at least one treated unit");
    if (outcomes_.cols() < n_treated_) throw DimensionError("panel has fewer columns than treated units");
    if (t0_ < 1 || t0_ >= T) {
        throw std::invalid_argument("t0 must satisfy 1 <= t0 < T (t0=" + std::to_string(t0_) +
                                    ", T=" + std::to_string(T) + ")");
    }
    if (!outcomes_.allFinite()) throw std::invalid_argument("panel outcomes contain missing or non-finite entries");
    for (const auto& c : covariates_) {
        if (c.rows() != T || c.cols() != outcomes_.cols()) {
            throw DimensionError("covariate block shape does not match the outcome matrix");
        }
        if (!c.allFinite()) throw std::invalid_argument("covariates contain missing or non-finite entries");
    }
    if (!unit_labels_.empty() && static_cast<Eigen::Index>(unit_labels_.size()) != outcomes_.cols()) {
        throw DimensionError("unit label count does not match the number of units");
    }
    if (!time_labels_.empty() && static_cast<Eigen::Index>(time_labels_.size()) != T) {
        throw DimensionError("time label count does not match the number of periods");
    }
}

bool operator==(const PanelData& a, const PanelData& b) {
    if (a.t0_ != b.t0_ || a.n_treated_ != b.n_treated_) return false;
    if (a.outcomes_.rows() != b.outcomes_.rows() || a.outcomes_.cols() != b.outcomes_.cols()) return false;
    if (a.outcomes_ != b.outcomes_) return false;
    if (a.covariates_.size() != b.covariates_.size()) return false;
    for (std::size_t i = 0; i < a.covariates_.size(); ++i) {
        if (a.covariates_[i] != b.covariates_[i]) return false;
    }
    return true;
}

EffectTrajectory::EffectTrajectory(Vector values) : values_(std::move(values)) {
    if (values_.size() == 0) throw std::invalid_argument("effect trajectory is empty");
    if (!values_.allFinite()) throw std::invalid_argument("effect trajectory has non-finite entries");
}

EffectTrajectory EffectTrajectory::zeros(int post_periods) { return EffectTrajectory(Vector::Zero(post_periods)); }

EffectTrajectory EffectTrajectory::constant(int post_periods, double value) {
    return EffectTrajectory(Vector::Constant(post_periods, value));
}

NullAdjustedData adjust_under_null(const PanelData& panel, const EffectTrajectory& alpha0) {
    if (alpha0.size() != panel.post_periods()) {
        throw DimensionError("trajectory length " + std::to_string(alpha0.size()) + " != T - t0 = " +
                             std::to_string(panel.post_periods()));
    }
    Matrix y = panel.outcomes();
    for (int l = 0; l < panel.n_treated(); ++l) {
        y.col(l).tail(panel.post_periods()) -= alpha0.values();
    }
    PanelData adjusted(std::move(y), panel.t0(), panel.n_treated(), panel.covariates(), panel.unit_labels(),
                       panel.time_labels());
    return NullAdjustedData(std::move(adjusted), alpha0);
}

PanelData select_post_period(const PanelData& panel, int t) {
    if (t <= panel.t0() || t > panel.periods()) {
        throw InvalidWindowError("period " + std::to_string(t) + " is not a post-treatment period");
    }
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(panel.t0()) + 1);
    for (int r = 0; r < panel.t0(); ++r) rows.push_back(r);
    rows.push_back(t - 1);
    return rebuild(panel, rows, panel.t0());
}

PanelData aggregate_time_blocks(const PanelData& panel) {
    const int block = panel.post_periods();
    if (panel.periods() % block != 0) {
        throw UnsupportedShapeError("T = " + std::to_string(panel.periods()) + " is not a multiple of T_* = " +
                                    std::to_string(block) + "; refusing to drop periods");
    }
    std::vector<Matrix> cov;
    for (const auto& c : panel.covariates()) cov.push_back(rows_mean_blocks(c, block));
    std::vector<std::string> times;
    if (!panel.time_labels().empty()) {
        for (int r = 0; r < panel.periods(); r += block) times.push_back(panel.time_labels()[static_cast<std::size_t>(r)]);
    }
    const int rows = panel.periods() / block;
    return PanelData(rows_mean_blocks(panel.outcomes(), block), rows - 1, panel.n_treated(), std::move(cov),
                     panel.unit_labels(), std::move(times));
}

PanelData aggregate_units(const PanelData& panel) {
    if (panel.n_treated() == 1) return panel;
    std::vector<Matrix> cov;
    for (const auto& c : panel.covariates()) cov.push_back(average_treated(c, panel.n_treated()));
    std::vector<std::string> units;
    if (!panel.unit_labels().empty()) {
        units.push_back("treated_mean");
        units.insert(units.end(), panel.unit_labels().begin() + panel.n_treated(), panel.unit_labels().end());
    }
    return PanelData(average_treated(panel.outcomes(), panel.n_treated()), panel.t0(), 1, std::move(cov),
                     std::move(units), panel.time_labels());
}

PanelData pre_treatment_slice(const PanelData& panel, int tau) {
    if (tau < 1 || tau >= panel.t0()) {
        throw InvalidWindowError("placebo window tau = " + std::to_string(tau) + " must satisfy 1 <= tau < t0 = " +
                                 std::to_string(panel.t0()));
    }
    return slice_rows(panel, 1, panel.t0(), panel.t0() - tau);
}

PanelData slice_rows(const PanelData& panel, int first, int last, int new_t0) {
    if (first < 1 || last > panel.periods() || first > last) throw InvalidWindowError("row range out of bounds");
    std::vector<int> rows;
    for (int r = first - 1; r < last; ++r) rows.push_back(r);
    return rebuild(panel, rows, new_t0);
}

PanelData permute_rows(const PanelData& panel, const std::vector<int>& order) {
    if (static_cast<int>(order.size()) != panel.periods()) throw DimensionError("row order has the wrong length");
    std::vector<bool> seen(order.size(), false);
    for (int r : order) {
        if (r < 0 || r >= panel.periods() || seen[static_cast<std::size_t>(r)]) {
            throw std::invalid_argument("row order is not a permutation of 0..T-1");
        }
        seen[static_cast<std::size_t>(r)] = true;
    }
    return rebuild(panel, order, panel.t0());
}

}  // namespace csc
