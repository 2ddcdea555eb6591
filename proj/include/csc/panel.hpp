#pragma once

// Panel data model and the data transformations used before fitting.
//
// Time is 1-based in every public argument (period t runs over 1..T, t0 is
// the number of pre-treatment periods). Internally matrices are 0-based
// Eigen column-major storage with rows = time and columns = units; the first
// n_treated columns are treated units, the remaining columns are controls.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace csc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class PanelData {
public:
    // Throws DimensionError / std::invalid_argument when the shape or t0 is
    // inconsistent, or when any entry is not finite.
    PanelData(Matrix outcomes, int t0, int n_treated = 1, std::vector<Matrix> covariates = {},
              std::vector<std::string> unit_labels = {}, std::vector<std::string> time_labels = {});

    [[nodiscard]] const Matrix& outcomes() const noexcept { return outcomes_; }
    // One T x N matrix per covariate; empty when the panel has none.
    [[nodiscard]] const std::vector<Matrix>& covariates() const noexcept { return covariates_; }
    [[nodiscard]] bool has_covariates() const noexcept { return !covariates_.empty(); }
    [[nodiscard]] int n_covariates() const noexcept { return static_cast<int>(covariates_.size()); }

    [[nodiscard]] int periods() const noexcept { return static_cast<int>(outcomes_.rows()); }
    [[nodiscard]] int t0() const noexcept { return t0_; }
    [[nodiscard]] int post_periods() const noexcept { return periods() - t0_; }
    [[nodiscard]] int n_treated() const noexcept { return n_treated_; }
    [[nodiscard]] int n_units() const noexcept { return static_cast<int>(outcomes_.cols()); }
    [[nodiscard]] int n_controls() const noexcept { return n_units() - n_treated_; }

    // Column `unit` (0-based among treated units) of the outcome matrix.
    [[nodiscard]] Vector treated(int unit = 0) const { return outcomes_.col(unit); }
    [[nodiscard]] auto controls() const { return outcomes_.rightCols(n_controls()); }

    [[nodiscard]] const std::vector<std::string>& unit_labels() const noexcept { return unit_labels_; }
    [[nodiscard]] const std::vector<std::string>& time_labels() const noexcept { return time_labels_; }

    friend bool operator==(const PanelData& a, const PanelData& b);

private:
    Matrix outcomes_;
    std::vector<Matrix> covariates_;
    int t0_;
    int n_treated_;
    std::vector<std::string> unit_labels_;
    std::vector<std::string> time_labels_;
};

// Postulated effects for the post-treatment periods t0+1..T.
class EffectTrajectory {
public:
    explicit EffectTrajectory(Vector values);
    static EffectTrajectory zeros(int post_periods);
    static EffectTrajectory constant(int post_periods, double value);

    [[nodiscard]] const Vector& values() const noexcept { return values_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] EffectTrajectory negated() const { return EffectTrajectory(-values_); }

private:
    Vector values_;
};

// Panel with the treated outcomes replaced by Y_1t - alpha0_t after t0.
class NullAdjustedData {
public:
    NullAdjustedData(PanelData adjusted, EffectTrajectory alpha0)
        : data_(std::move(adjusted)), alpha0_(std::move(alpha0)) {}

    [[nodiscard]] const PanelData& panel() const noexcept { return data_; }
    [[nodiscard]] const EffectTrajectory& alpha0() const noexcept { return alpha0_; }

    [[nodiscard]] int periods() const noexcept { return data_.periods(); }
    [[nodiscard]] int t0() const noexcept { return data_.t0(); }
    [[nodiscard]] Vector treated() const { return data_.treated(0); }

private:
    PanelData data_;
    EffectTrajectory alpha0_;
};

// Subtracts alpha0 from every treated column over t0+1..T.
[[nodiscard]] NullAdjustedData adjust_under_null(const PanelData& panel, const EffectTrajectory& alpha0);

// Rows 1..t0 followed by row t (t0 < t <= T); the result has one post period.
[[nodiscard]] PanelData select_post_period(const PanelData& panel, int t);

// Block means over T_* consecutive periods; the last block is the post period.
// Throws UnsupportedShapeError unless T is a multiple of T_*.
//
// Covariates are averaged the same way; that is only meaningful for proxy
// models that are linear in the data.
[[nodiscard]] PanelData aggregate_time_blocks(const PanelData& panel);

// Replaces the treated columns by their cross-unit average.
[[nodiscard]] PanelData aggregate_units(const PanelData& panel);

// Pre-treatment rows only, with the last tau of them relabeled as post periods.
// Throws InvalidWindowError unless 1 <= tau < t0.
[[nodiscard]] PanelData pre_treatment_slice(const PanelData& panel, int tau);

// Rows first..last (1-based, inclusive) with the given t0.
[[nodiscard]] PanelData slice_rows(const PanelData& panel, int first, int last, int new_t0);

// Copy of the panel with rows reordered: row i of the result is row order[i]
// (0-based) of the source. t0 is preserved.
[[nodiscard]] PanelData permute_rows(const PanelData& panel, const std::vector<int>& order);

}  // namespace csc
