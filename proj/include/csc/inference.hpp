#pragma once

// Permutation (conformal) inference on fitted residuals: test statistics,
// permutation sets, p-values, sharp-null tests, pointwise confidence sets by
// test inversion, and the average-effect, multi-unit and placebo variants.

#include "csc/estimators.hpp"
#include "csc/panel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace csc {

enum class PermutationKind { moving_block, iid_all, iid_sampled };

[[nodiscard]] std::string_view to_string(PermutationKind k) noexcept;

// How to build a permutation set once the residual window length is known.
struct SchemeSpec {
    PermutationKind kind = PermutationKind::moving_block;
    int n_samples = 5000;  // iid_sampled only; includes the identity
    std::uint64_t seed = 0;
};

// Finite set of bijections on {0, ..., n-1}. Element 0 is always the identity.
class PermutationScheme {
public:
    // The n cyclic shifts pi_j(i) = i + j mod n.
    static PermutationScheme moving_block(int n);
    // All n! permutations in lexicographic order; n <= kMaxAllLength.
    static PermutationScheme iid_all(int n);
    // The identity plus count-1 uniform draws with replacement.
    static PermutationScheme iid_sampled(int n, int count, std::uint64_t seed);
    static PermutationScheme build(const SchemeSpec& spec, int n);

    static constexpr int kMaxAllLength = 10;

    [[nodiscard]] PermutationKind kind() const noexcept { return kind_; }
    [[nodiscard]] int length() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] static constexpr bool contains_identity() noexcept { return true; }

    // pi(i) for i = 0..n-1 of element idx, written to out (size n).
    void element(std::size_t idx, std::span<int> out) const;
    [[nodiscard]] std::vector<int> element(std::size_t idx) const;

private:
    PermutationScheme(PermutationKind kind, int n, std::size_t size, std::uint64_t seed)
        : kind_(kind), n_(n), size_(size), seed_(seed) {}

    PermutationKind kind_;
    int n_;
    std::size_t size_;
    std::uint64_t seed_;
    std::vector<int> sampled_;  // iid_sampled: size_ * n_ entries
};

// Checks Pi pi = Pi for every pi in Pi by enumeration.
[[nodiscard]] bool is_group(const PermutationScheme& scheme);

// 1-based inclusive positions within a residual vector.
struct PeriodRange {
    int first = 1;
    int last = 1;
    [[nodiscard]] int length() const noexcept { return last - first + 1; }
};

class Statistic {
public:
    enum class Kind { sq, mean };

    // S_q(u) = (T_*^{-1/2} sum_{post} |u_t|^q)^{1/q}, q >= 1.
    static Statistic sq(double q = 1.0);
    // S(u) = T_*^{-1/2} |sum_{post} u_t|.
    static Statistic mean();

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double q() const noexcept { return q_; }
    [[nodiscard]] std::string describe() const;

    // Evaluates on the post-window values only.
    [[nodiscard]] double operator()(std::span<const double> post_values) const;

private:
    Statistic(Kind kind, double q) : kind_(kind), q_(q) {}
    Kind kind_;
    double q_;
};

[[nodiscard]] double statistic_sq(std::span<const double> residuals, PeriodRange post, double q = 1.0);
[[nodiscard]] double statistic_mean(std::span<const double> residuals, PeriodRange post);

// Reindexed copy (u_{pi(1)}, ..., u_{pi(n)}).
[[nodiscard]] Vector permute_residuals(const Vector& residuals, std::span<const int> pi);

struct TestResult {
    double statistic = 0.0;
    std::vector<double> permuted_statistics;  // indexed like the scheme
    double p_value = 1.0;
    PermutationKind scheme_kind = PermutationKind::moving_block;
    std::size_t scheme_size = 0;
    std::uint64_t seed = 0;
    std::string estimator_id;
    std::string statistic_id;
    // Residual window: periods consumed+1..T of the tested panel.
    int consumed = 0;
    int window_length = 0;
    PeriodRange post{};
    Vector residuals;
    int effective_sample_size = 0;  // rows of the panel the test ran on
    std::vector<std::string> flags;
    SolveReport diagnostics;

    [[nodiscard]] bool has_flag(std::string_view f) const;
};

// p = 1 - F(S(u)) with F(x) = |Pi|^-1 sum 1{S(u_pi) < x}. The scheme length
// must equal residuals.size(). Permuted statistics within tie_tolerance below
// S(u) count as ties.
[[nodiscard]] TestResult p_value(const Vector& residuals, PeriodRange post, const PermutationScheme& scheme,
                                 const Statistic& statistic, double tie_tolerance = 0.0);

// Relative size, against the largest outcome, of residual differences that are
// treated as rounding noise by the sharp-null tests.
inline constexpr double kTieRelativeScale = 1e-10;

// Adjust -> fit -> permutation p-value. Statistics that differ from S(u) only
// by residual noise of kTieRelativeScale (1 + max |Z|) count as ties.
[[nodiscard]] TestResult test_sharp_null(const PanelData& panel, const EffectTrajectory& alpha0,
                                         const EstimatorSpec& spec, const SchemeSpec& scheme,
                                         const Statistic& statistic);

// Same, on data already adjusted under the null.
[[nodiscard]] TestResult test_adjusted(const NullAdjustedData& z, const EstimatorSpec& spec, const SchemeSpec& scheme,
                                       const Statistic& statistic);

struct CiOptions {
    // Candidate values; when empty a default grid is built (see pointwise_ci).
    std::vector<double> grid;
    int grid_points = 41;
    double half_width_sd = 5.0;
    int workers = 1;
};

struct ConfidenceSet {
    int period = 0;  // 1-based, > t0
    double level = 0.9;
    double point_estimate = 0.0;
    std::vector<double> grid;
    std::vector<double> p_values;
    std::vector<bool> accepted;
    double lower = 0.0;  // min / max of the accepted set (NaN when empty)
    double upper = 0.0;
    bool empty = true;
    bool non_convex = false;  // accepted set has gaps on the grid
};

// Test inversion for alpha_t: keeps grid values a with p(a) > 1 - level. The
// default grid has grid_points values spanning point_estimate +-
// half_width_sd robust standard deviations (1.4826 MAD of the pre-period
// residuals of the fit under alpha_t = 0). One permutation set is shared by
// all grid points.
[[nodiscard]] ConfidenceSet pointwise_ci(const PanelData& panel, int period, const EstimatorSpec& spec,
                                         const SchemeSpec& scheme, const Statistic& statistic, double level,
                                         const CiOptions& options = {});

// pointwise_ci for every post period.
[[nodiscard]] std::vector<ConfidenceSet> confidence_band(const PanelData& panel, const EstimatorSpec& spec,
                                                         const SchemeSpec& scheme, const Statistic& statistic,
                                                         double level, const CiOptions& options = {});

// H0: mean effect over the post periods equals alpha_bar0, tested on block
// means of length T_*. Requires T divisible by T_*.
[[nodiscard]] TestResult test_average_effect(const PanelData& panel, double alpha_bar0, const EstimatorSpec& spec,
                                             const SchemeSpec& scheme, const Statistic& statistic);

// H0 on the cross-unit average effect trajectory of L >= 2 treated units.
[[nodiscard]] TestResult test_multi_unit(const PanelData& panel, const EffectTrajectory& alpha_bar0,
                                         const EstimatorSpec& spec, const SchemeSpec& scheme,
                                         const Statistic& statistic);

// H0: zero effects over the last tau pre-treatment periods, using only
// pre-treatment data. TestResult::residuals holds u_1..u_t0 for plotting.
[[nodiscard]] TestResult placebo_test(const PanelData& panel, int tau, const EstimatorSpec& spec,
                                      const SchemeSpec& scheme, const Statistic& statistic);

}  // namespace csc
