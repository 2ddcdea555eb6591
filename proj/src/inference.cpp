#include "csc/inference.hpp"

#include "csc/error.hpp"
#include "csc/kernels.hpp"
#include "csc/parallel.hpp"
#include "csc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace csc {

std::string_view to_string(PermutationKind k) noexcept {
    switch (k) {
        case PermutationKind::moving_block: return "moving_block";
        case PermutationKind::iid_all: return "iid_all";
        case PermutationKind::iid_sampled: return "iid_sampled";
    }
    return "unknown";
}

// --- permutation sets ------------------------------------------------------

PermutationScheme PermutationScheme::moving_block(int n) {
    if (n < 1) throw std::invalid_argument("permutation length must be >= 1");
    return PermutationScheme(PermutationKind::moving_block, n, static_cast<std::size_t>(n), 0);
}

PermutationScheme PermutationScheme::iid_all(int n) {
    if (n < 1) throw std::invalid_argument("permutation length must be >= 1");
    if (n > kMaxAllLength) {
        throw std::invalid_argument("enumerating all permutations is limited to length " +
                                    std::to_string(kMaxAllLength) + " (got " + std::to_string(n) +
                                    "); use iid_sampled");
    }
    std::size_t count = 1;
    for (int i = 2; i <= n; ++i) count *= static_cast<std::size_t>(i);
    return PermutationScheme(PermutationKind::iid_all, n, count, 0);
}

PermutationScheme PermutationScheme::iid_sampled(int n, int count, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("permutation length must be >= 1");
    if (count < 1) throw std::invalid_argument("number of sampled permutations must be >= 1");
    PermutationScheme s(PermutationKind::iid_sampled, n, static_cast<std::size_t>(count), seed);
    s.sampled_.resize(static_cast<std::size_t>(count) * static_cast<std::size_t>(n));
    auto rng = stream_rng(seed, 0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < s.size_; ++e) {
        std::iota(perm.begin(), perm.end(), 0);
        if (e > 0) std::shuffle(perm.begin(), perm.end(), rng);
        std::copy(perm.begin(), perm.end(), s.sampled_.begin() + static_cast<std::ptrdiff_t>(e * static_cast<std::size_t>(n)));
    }
    return s;
}

PermutationScheme PermutationScheme::build(const SchemeSpec& spec, int n) {
    switch (spec.kind) {
        case PermutationKind::moving_block: return moving_block(n);
        case PermutationKind::iid_all: return iid_all(n);
        case PermutationKind::iid_sampled: return iid_sampled(n, spec.n_samples, spec.seed);
    }
    throw std::invalid_argument("unknown permutation kind");
}

void PermutationScheme::element(std::size_t idx, std::span<int> out) const {
    if (idx >= size_) throw std::out_of_range("permutation index out of range");
    if (static_cast<int>(out.size()) != n_) throw DimensionError("permutation buffer has the wrong length");
    switch (kind_) {
        case PermutationKind::moving_block: {
            const int shift = static_cast<int>(idx);
            for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = (i + shift) % n_;
            return;
        }
        case PermutationKind::iid_all: {
            // Unrank idx in lexicographic order through its factorial digits.
            std::vector<int> pool(static_cast<std::size_t>(n_));
            std::iota(pool.begin(), pool.end(), 0);
            std::size_t fact = size_;
            std::size_t rest = idx;
            for (int i = 0; i < n_; ++i) {
                fact /= static_cast<std::size_t>(n_ - i);
                const std::size_t digit = rest / fact;
                rest %= fact;
                out[static_cast<std::size_t>(i)] = pool[digit];
                pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
            }
            return;
        }
        case PermutationKind::iid_sampled: {
            const auto begin = sampled_.begin() + static_cast<std::ptrdiff_t>(idx * static_cast<std::size_t>(n_));
            std::copy(begin, begin + n_, out.begin());
            return;
        }
    }
}

std::vector<int> PermutationScheme::element(std::size_t idx) const {
    std::vector<int> out(static_cast<std::size_t>(n_));
    element(idx, out);
    return out;
}

bool is_group(const PermutationScheme& scheme) {
    const int n = scheme.length();
    std::set<std::vector<int>> members;
    for (std::size_t i = 0; i < scheme.size(); ++i) members.insert(scheme.element(i));
    if (members.size() != scheme.size()) return false;
    std::vector<int> composed(static_cast<std::size_t>(n));
    for (const auto& fixed : members) {
        for (const auto& p : members) {
            for (int i = 0; i < n; ++i) composed[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(fixed[static_cast<std::size_t>(i)])];
            if (!members.contains(composed)) return false;
        }
    }
    return true;
}

// --- statistics ------------------------------------------------------------

Statistic Statistic::sq(double q) {
    if (!(q >= 1.0) || !std::isfinite(q)) throw std::invalid_argument("statistic order q must be a finite value >= 1");
    return Statistic(Kind::sq, q);
}

Statistic Statistic::mean() { return Statistic(Kind::mean, 1.0); }

std::string Statistic::describe() const {
    if (kind_ == Kind::mean) return "mean";
    char buf[32];
    std::snprintf(buf, sizeof buf, "S_q(q=%g)", q_);
    return buf;
}

double Statistic::operator()(std::span<const double> post) const {
    if (post.empty()) throw InvalidWindowError("post-treatment window is empty");
    const double root = std::sqrt(static_cast<double>(post.size()));
    if (kind_ == Kind::mean) return std::fabs(kernels::sum(post)) / root;
    if (q_ == 1.0) return kernels::abs_sum(post) / root;
    if (q_ == 2.0) return std::sqrt(kernels::dot(post, post) / root);
    double s = 0.0;
    for (double v : post) s += std::pow(std::fabs(v), q_);
    return std::pow(s / root, 1.0 / q_);
}

namespace {

std::span<const double> post_span(std::span<const double> residuals, PeriodRange post) {
    if (post.first < 1 || post.last > static_cast<int>(residuals.size()) || post.first > post.last) {
        throw InvalidWindowError("post window [" + std::to_string(post.first) + ", " + std::to_string(post.last) +
                                 "] is outside the residual window of length " + std::to_string(residuals.size()));
    }
    return residuals.subspan(static_cast<std::size_t>(post.first - 1), static_cast<std::size_t>(post.length()));
}

}  // namespace

double statistic_sq(std::span<const double> residuals, PeriodRange post, double q) {
    return Statistic::sq(q)(post_span(residuals, post));
}

double statistic_mean(std::span<const double> residuals, PeriodRange post) {
    return Statistic::mean()(post_span(residuals, post));
}

Vector permute_residuals(const Vector& residuals, std::span<const int> pi) {
    if (static_cast<Eigen::Index>(pi.size()) != residuals.size()) throw DimensionError("permutation length mismatch");
    Vector out(residuals.size());
    for (std::size_t i = 0; i < pi.size(); ++i) out[static_cast<Eigen::Index>(i)] = residuals[pi[i]];
    return out;
}

bool TestResult::has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

// --- p-values --------------------------------------------------------------

TestResult p_value(const Vector& residuals, PeriodRange post, const PermutationScheme& scheme,
                   const Statistic& statistic, double tie_tolerance) {
    const int n = static_cast<int>(residuals.size());
    if (scheme.length() != n) {
        throw DimensionError("permutation length " + std::to_string(scheme.length()) +
                             " does not match the residual window " + std::to_string(n));
    }
    (void)post_span(std::span<const double>(residuals.data(), residuals.size()), post);

    const std::size_t first = static_cast<std::size_t>(post.first - 1);
    const std::size_t len = static_cast<std::size_t>(post.length());
    std::vector<int> pi(static_cast<std::size_t>(n));
    std::vector<double> gathered(len);

    TestResult out;
    out.permuted_statistics.resize(scheme.size());
    for (std::size_t e = 0; e < scheme.size(); ++e) {
        scheme.element(e, pi);
        for (std::size_t i = 0; i < len; ++i) gathered[i] = residuals[pi[first + i]];
        out.permuted_statistics[e] = statistic(gathered);
    }
    // Element 0 is the identity, so this is S(u) computed by the same path.
    out.statistic = out.permuted_statistics.front();
    const auto below = static_cast<std::size_t>(std::count_if(out.permuted_statistics.begin(),
                                                              out.permuted_statistics.end(),
                                                              [&](double s) { return s < out.statistic - tie_tolerance; }));
    out.p_value = static_cast<double>(scheme.size() - below) / static_cast<double>(scheme.size());
    out.scheme_kind = scheme.kind();
    out.scheme_size = scheme.size();
    out.seed = scheme.seed();
    out.statistic_id = statistic.describe();
    out.window_length = n;
    out.post = post;
    out.residuals = residuals;
    return out;
}

namespace {

// Statistic of a post window whose residuals all sit at the rounding scale.
double tie_tolerance(const NullAdjustedData& z, const Statistic& statistic, int post_len) {
    const double delta = kTieRelativeScale * (1.0 + z.panel().outcomes().cwiseAbs().maxCoeff());
    const std::vector<double> noise(static_cast<std::size_t>(post_len), delta);
    return statistic(noise);
}

}  // namespace

TestResult test_adjusted(const NullAdjustedData& z, const EstimatorSpec& spec, const SchemeSpec& scheme,
                         const Statistic& statistic) {
    const ProxyFit f = fit(z, spec);
    const int n = f.window_length();
    const int post_len = z.panel().post_periods();
    if (n - post_len < 1) {
        throw InvalidWindowError("residual window of length " + std::to_string(n) +
                                 " leaves no pre-treatment residuals for " + std::to_string(post_len) +
                                 " post periods");
    }
    const PermutationScheme pi = PermutationScheme::build(scheme, n);
    TestResult out = p_value(f.residuals, PeriodRange{n - post_len + 1, n}, pi, statistic,
                             tie_tolerance(z, statistic, post_len));
    out.estimator_id = f.estimator_id;
    out.consumed = f.consumed;
    out.effective_sample_size = z.periods();
    out.flags = f.flags;
    out.diagnostics = f.diagnostics;
    return out;
}

TestResult test_sharp_null(const PanelData& panel, const EffectTrajectory& alpha0, const EstimatorSpec& spec,
                           const SchemeSpec& scheme, const Statistic& statistic) {
    return test_adjusted(adjust_under_null(panel, alpha0), spec, scheme, statistic);
}

// --- confidence sets -------------------------------------------------------

namespace {

double median(std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}

double robust_sd(const Vector& r) {
    if (r.size() == 0) return 0.0;
    std::vector<double> v(r.data(), r.data() + r.size());
    const double med = median(v);
    for (double& x : v) x = std::fabs(x - med);
    double sd = 1.4826 * median(v);
    if (!(sd > 0.0) && r.size() > 1) {
        sd = std::sqrt((r.array() - r.mean()).square().sum() / static_cast<double>(r.size() - 1));
    }
    return sd;
}

}  // namespace

ConfidenceSet pointwise_ci(const PanelData& panel, int period, const EstimatorSpec& spec, const SchemeSpec& scheme,
                           const Statistic& statistic, double level, const CiOptions& options) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence level must be in (0, 1)");
    const PanelData reduced = select_post_period(panel, period);

    ConfidenceSet out;
    out.period = period;
    out.level = level;
    {
        const ProxyFit base = fit(adjust_under_null(reduced, EffectTrajectory::zeros(1)), spec);
        out.point_estimate = base.residuals[base.residuals.size() - 1];
        if (options.grid.empty()) {
            if (options.grid_points < 2) throw std::invalid_argument("grid needs at least two points");
            double sd = robust_sd(base.residuals.head(base.residuals.size() - 1));
            if (!(sd > 0.0)) sd = 1.0;
            const double lo = out.point_estimate - options.half_width_sd * sd;
            const double hi = out.point_estimate + options.half_width_sd * sd;
            out.grid.resize(static_cast<std::size_t>(options.grid_points));
            for (int g = 0; g < options.grid_points; ++g) {
                out.grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (options.grid_points - 1);
            }
        } else {
            out.grid = options.grid;
        }
    }
    for (double a : out.grid) {
        if (!std::isfinite(a)) throw std::invalid_argument("confidence grid has non-finite values");
    }

    const int n = reduced.periods() - consumed_periods(spec);
    // One permutation set for every grid point.
    const PermutationScheme pi = PermutationScheme::build(scheme, n);
    out.p_values.assign(out.grid.size(), 1.0);
    parallel_for(out.grid.size(), options.workers, [&](std::size_t g) {
        const NullAdjustedData z = adjust_under_null(reduced, EffectTrajectory::constant(1, out.grid[g]));
        const ProxyFit f = fit(z, spec);
        out.p_values[g] =
            p_value(f.residuals, PeriodRange{n, n}, pi, statistic, tie_tolerance(z, statistic, 1)).p_value;
    });

    // p-values are multiples of 1/|Pi|; the slack absorbs rounding in 1 - level.
    const double alpha = (1.0 - level) * (1.0 + 1e-12);
    out.accepted.resize(out.grid.size());
    std::vector<std::size_t> order(out.grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.grid[a] < out.grid[b]; });
    out.lower = NAN;
    out.upper = NAN;
    bool seen = false;
    bool gap = false;
    for (std::size_t g : order) {
        const bool keep = out.p_values[g] > alpha;
        out.accepted[g] = keep;
        if (keep) {
            if (!seen) out.lower = out.grid[g];
            if (gap) out.non_convex = true;
            out.upper = out.grid[g];
            seen = true;
        } else if (seen) {
            gap = true;
        }
    }
    out.empty = !seen;
    return out;
}

std::vector<ConfidenceSet> confidence_band(const PanelData& panel, const EstimatorSpec& spec, const SchemeSpec& scheme,
                                           const Statistic& statistic, double level, const CiOptions& options) {
    std::vector<ConfidenceSet> out;
    for (int t = panel.t0() + 1; t <= panel.periods(); ++t) {
        out.push_back(pointwise_ci(panel, t, spec, scheme, statistic, level, options));
    }
    return out;
}

// --- extensions ------------------------------------------------------------

TestResult test_average_effect(const PanelData& panel, double alpha_bar0, const EstimatorSpec& spec,
                               const SchemeSpec& scheme, const Statistic& statistic) {
    const PanelData blocks = aggregate_time_blocks(panel);
    TestResult out = test_adjusted(adjust_under_null(blocks, EffectTrajectory::constant(1, alpha_bar0)), spec, scheme,
                                   statistic);
    out.effective_sample_size = blocks.periods();
    return out;
}

TestResult test_multi_unit(const PanelData& panel, const EffectTrajectory& alpha_bar0, const EstimatorSpec& spec,
                           const SchemeSpec& scheme, const Statistic& statistic) {
    if (panel.n_treated() < 2) throw std::invalid_argument("multi-unit test needs at least two treated units");
    return test_sharp_null(aggregate_units(panel), alpha_bar0, spec, scheme, statistic);
}

TestResult placebo_test(const PanelData& panel, int tau, const EstimatorSpec& spec, const SchemeSpec& scheme,
                        const Statistic& statistic) {
    const PanelData pre = pre_treatment_slice(panel, tau);
    TestResult out = test_sharp_null(pre, EffectTrajectory::zeros(tau), spec, scheme, statistic);
    if (pre.t0() == 1) out.flags.emplace_back("single_pre_period");
    return out;
}

}  // namespace csc
