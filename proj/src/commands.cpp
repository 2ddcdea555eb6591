#include "csc/error.hpp"
#include "csc/io.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace csc::io {

namespace {

using nlohmann::json;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json config_json(const RunConfig& c) {
    std::ostringstream os;
    write_config(os, c);
    json out = json::object();
    std::istringstream in(os.str());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    // Record the seed actually used, including one taken from CSC_SEED.
    out["seed"] = std::to_string(resolve_seed(c));
    return out;
}

json document(const RunConfig& c) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = to_string(c.command);
    doc["generated_at"] = utc_timestamp();
    doc["config"] = config_json(c);
    return doc;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json diagnostics_json(const SolveReport& r) {
    return json{{"iterations", r.iterations},
                {"converged", r.converged},
                {"final_objective", number(r.final_objective)},
                {"kkt_residual", number(r.kkt_residual)},
                {"kkt_threshold", number(r.kkt_threshold)}};
}

json test_json(const TestResult& r, double alpha) {
    return json{{"statistic", r.statistic},
                {"statistic_id", r.statistic_id},
                {"p_value", r.p_value},
                {"reject", r.p_value <= alpha},
                {"permutations",
                 {{"kind", format_permutations(r.scheme_kind)}, {"size", r.scheme_size}, {"seed", std::to_string(r.seed)}}},
                {"estimator",
                 {{"id", r.estimator_id},
                  {"consumed_periods", r.consumed},
                  {"window_length", r.window_length},
                  {"flags", r.flags},
                  {"diagnostics", diagnostics_json(r.diagnostics)}}},
                {"post_window", {r.post.first, r.post.last}},
                {"effective_sample_size", r.effective_sample_size}};
}

json panel_json(const PanelData& p) {
    return json{{"periods", p.periods()},
                {"t0", p.t0()},
                {"units", p.n_units()},
                {"treated", std::vector<std::string>(p.unit_labels().begin(), p.unit_labels().begin() + p.n_treated())}};
}

// Shortest text that reads back to the same double; empty for NaN.
std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string time_label(const PanelData& p, int period) {
    return p.time_labels().empty() ? std::to_string(period) : p.time_labels()[static_cast<std::size_t>(period - 1)];
}

std::filesystem::path out_dir(const RunConfig& c) {
    std::filesystem::path dir(c.out.empty() ? "." : c.out);
    std::filesystem::create_directories(dir);
    return dir;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    return f;
}

std::string finish(const RunConfig& c, const json& doc) {
    const std::string text = doc.dump(2) + "\n";
    open_out(out_dir(c) / "result.json") << text;
    return text;
}

PanelData load(const RunConfig& c) {
    if (c.input.empty()) throw std::invalid_argument("no input file given");
    return read_panel_csv(std::filesystem::path(c.input), ReadOptions{c.layout, c.t0, c.treated});
}

void check_level(const RunConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
}

void check_window(const PanelData& panel, const EstimatorSpec& spec, const RunConfig& c) {
    const int window = panel.periods() - consumed_periods(spec);
    if (c.permutations == PermutationKind::iid_all && window > PermutationScheme::kMaxAllLength) {
        throw std::invalid_argument("--permutations iid enumerates all orders and needs a residual window of at most " +
                                    std::to_string(PermutationScheme::kMaxAllLength) + " periods (got " +
                                    std::to_string(window) + "); use iid-sampled");
    }
}

}  // namespace

std::string cmd_test(const RunConfig& c) {
    check_level(c);
    const PanelData panel = load(c);
    const EstimatorSpec spec = parse_estimator(c.estimator);
    check_window(panel, spec, c);
    const TestResult r = test_sharp_null(panel, EffectTrajectory::constant(panel.post_periods(), c.null_value), spec,
                                         make_scheme(c), make_statistic(c));

    auto csv = open_out(out_dir(c) / "residuals.csv");
    csv << "period,time,residual,post\n";
    for (int i = 0; i < r.window_length; ++i) {
        const int period = r.consumed + i + 1;
        csv << period << ',' << time_label(panel, period) << ',' << fmt(r.residuals[i]) << ','
            << (period > panel.t0() ? 1 : 0) << '\n';
    }

    json doc = document(c);
    doc["panel"] = panel_json(panel);
    doc["null"] = c.null_value;
    doc["result"] = test_json(r, c.alpha);
    return finish(c, doc);
}

std::string cmd_ci(const RunConfig& c) {
    check_level(c);
    const PanelData panel = load(c);
    const EstimatorSpec spec = parse_estimator(c.estimator);
    CiOptions options;
    if (c.grid) options.grid = c.grid->values();
    options.workers = c.workers;
    const int reduced_window = panel.t0() + 1 - consumed_periods(spec);
    if (c.permutations == PermutationKind::iid_all && reduced_window > PermutationScheme::kMaxAllLength) {
        throw std::invalid_argument("--permutations iid needs t0 + 1 <= " +
                                    std::to_string(PermutationScheme::kMaxAllLength) + "; use iid-sampled");
    }
    const auto band = confidence_band(panel, spec, make_scheme(c), make_statistic(c), 1.0 - c.alpha, options);

    const auto dir = out_dir(c);
    auto grid_csv = open_out(dir / "ci_grid.csv");
    grid_csv << "period,time,value,p_value,accepted\n";
    auto bounds_csv = open_out(dir / "ci_bounds.csv");
    bounds_csv << "period,time,point_estimate,lower,upper,empty,non_convex\n";
    json periods = json::array();
    for (const ConfidenceSet& s : band) {
        const std::string label = time_label(panel, s.period);
        for (std::size_t g = 0; g < s.grid.size(); ++g) {
            grid_csv << s.period << ',' << label << ',' << fmt(s.grid[g]) << ',' << fmt(s.p_values[g]) << ','
                     << (s.accepted[g] ? 1 : 0) << '\n';
        }
        bounds_csv << s.period << ',' << label << ',' << fmt(s.point_estimate) << ',' << fmt(s.lower) << ','
                   << fmt(s.upper) << ',' << (s.empty ? 1 : 0) << ',' << (s.non_convex ? 1 : 0) << '\n';
        periods.push_back(json{{"period", s.period},
                               {"time", label},
                               {"point_estimate", number(s.point_estimate)},
                               {"lower", number(s.lower)},
                               {"upper", number(s.upper)},
                               {"empty", s.empty},
                               {"non_convex", s.non_convex},
                               {"grid_points", s.grid.size()}});
    }

    json doc = document(c);
    doc["panel"] = panel_json(panel);
    doc["level"] = 1.0 - c.alpha;
    doc["estimator"] = estimator_id(spec);
    doc["periods"] = periods;
    return finish(c, doc);
}

std::string cmd_placebo(const RunConfig& c) {
    check_level(c);
    const PanelData panel = load(c);
    const EstimatorSpec spec = parse_estimator(c.estimator);
    const int tau = c.placebo_tau > 0 ? c.placebo_tau : std::max(1, std::min(panel.post_periods(), panel.t0() - 1));
    const PanelData pre = pre_treatment_slice(panel, tau);
    check_window(pre, spec, c);
    const TestResult r = placebo_test(panel, tau, spec, make_scheme(c), make_statistic(c));

    auto csv = open_out(out_dir(c) / "placebo_residuals.csv");
    csv << "period,time,residual,placebo_post\n";
    for (int i = 0; i < r.window_length; ++i) {
        const int period = r.consumed + i + 1;
        csv << period << ',' << time_label(panel, period) << ',' << fmt(r.residuals[i]) << ','
            << (period > pre.t0() ? 1 : 0) << '\n';
    }

    json doc = document(c);
    doc["panel"] = panel_json(panel);
    doc["placebo"] = json{{"tau", tau}, {"fake_t0", pre.t0()}};
    doc["result"] = test_json(r, c.alpha);
    return finish(c, doc);
}

namespace {

struct Cell {
    const char* estimator;
    WeightsKind weights;
    int t0;
    int n_controls;
    double rho;
    FactorTrend trend;
};

// Representative cells of the size tables.
const Cell kSizeSubset[] = {
    {"sc", WeightsKind::dgp2, 20, 50, 0.0, FactorTrend::stationary},
    {"classo", WeightsKind::dgp3, 50, 50, 0.0, FactorTrend::stationary},
    {"did", WeightsKind::dgp1, 100, 100, 0.0, FactorTrend::stationary},
    {"sc", WeightsKind::dgp2, 20, 50, 0.6, FactorTrend::stationary},
    {"classo", WeightsKind::dgp1, 50, 100, 0.6, FactorTrend::stationary},
    {"did", WeightsKind::dgp4, 100, 20, 0.6, FactorTrend::stationary},
    {"did", WeightsKind::dgp2, 50, 50, 0.0, FactorTrend::trending},
    {"classo", WeightsKind::dgp2, 50, 50, 0.0, FactorTrend::trending},
    {"did", WeightsKind::dgp2, 20, 50, 0.0, FactorTrend::trending},
};

json experiment_json(const ExperimentResult& r) {
    return json{{"estimator", r.estimator_id},
                {"weights", to_string(r.dgp.weights)},
                {"factor_trend", to_string(r.dgp.factor_trend)},
                {"controls", to_string(r.dgp.controls)},
                {"t0", r.dgp.t0},
                {"J", r.dgp.n_controls},
                {"rho_u", r.dgp.rho_u},
                {"rho_eps", r.dgp.rho_eps},
                {"alpha_true", r.dgp.alpha_true},
                {"fit_mode", to_string(r.mode)},
                {"n_reps", r.n_reps},
                {"level", r.level},
                {"rejection_rate", r.rejection_rate},
                {"mc_standard_error", r.mc_standard_error()},
                {"solver_warnings", r.solver_warnings}};
}

}  // namespace

std::string cmd_simulate(const RunConfig& c) {
    check_level(c);
    const std::uint64_t seed = resolve_seed(c);
    const SchemeSpec scheme = make_scheme(c);
    const Statistic stat = make_statistic(c);
    ExperimentOptions options;
    options.n_reps = c.n_reps;
    options.level = c.alpha;
    options.mode = c.fit_mode;
    options.workers = c.workers;
    options.keep_p_values = false;

    const auto dir = out_dir(c);
    json doc = document(c);
    if (c.preset == "null_vs_pre") {
        FigureOptions fo;
        fo.n_reps = c.n_reps;
        fo.level = c.alpha;
        fo.seed = seed;
        fo.workers = c.workers;
        fo.t0_grid = {19, 99};
        auto csv = open_out(dir / "null_vs_pre.csv");
        csv << "t0,rho_u,fit_mode,n_reps,rejection_rate\n";
        json rows = json::array();
        for (const FigureRow& r : reproduce_figure_null_vs_pre(fo)) {
            csv << r.t0 << ',' << fmt(r.rho_u) << ',' << to_string(r.mode) << ',' << r.n_reps << ','
                << fmt(r.rejection_rate) << '\n';
            rows.push_back(json{{"t0", r.t0},
                                {"rho_u", r.rho_u},
                                {"fit_mode", to_string(r.mode)},
                                {"n_reps", r.n_reps},
                                {"rejection_rate", r.rejection_rate}});
        }
        doc["null_vs_pre"] = rows;
        return finish(c, doc);
    }

    std::vector<ExperimentResult> results;
    if (c.preset == "size_subset") {
        for (const Cell& cell : kSizeSubset) {
            DgpSpec dgp;
            dgp.t0 = cell.t0;
            dgp.n_controls = cell.n_controls;
            dgp.rho_u = cell.rho;
            dgp.rho_eps = cell.rho;
            dgp.weights = cell.weights;
            dgp.factor_trend = cell.trend;
            dgp.seed = seed;
            results.push_back(run_size_experiment(dgp, parse_estimator(cell.estimator), scheme, stat, options));
        }
    } else {
        DgpSpec dgp = c.dgp;
        dgp.seed = seed;
        results.push_back(run_size_experiment(dgp, parse_estimator(c.estimator), scheme, stat, options));
    }

    auto csv = open_out(dir / "simulate.csv");
    csv << "estimator,weights,factor_trend,controls,t0,J,rho_u,rho_eps,alpha_true,fit_mode,n_reps,level,"
           "rejection_rate,mc_standard_error\n";
    json rows = json::array();
    for (const ExperimentResult& r : results) {
        csv << r.estimator_id << ',' << to_string(r.dgp.weights) << ',' << to_string(r.dgp.factor_trend) << ','
            << to_string(r.dgp.controls) << ',' << r.dgp.t0 << ',' << r.dgp.n_controls << ',' << fmt(r.dgp.rho_u)
            << ',' << fmt(r.dgp.rho_eps) << ',' << fmt(r.dgp.alpha_true) << ',' << to_string(r.mode) << ','
            << r.n_reps << ',' << fmt(r.level) << ',' << fmt(r.rejection_rate) << ',' << fmt(r.mc_standard_error())
            << '\n';
        rows.push_back(experiment_json(r));
    }
    doc["experiments"] = rows;
    return finish(c, doc);
}

std::string run_command(const RunConfig& c) {
    switch (c.command) {
        case Command::test: return cmd_test(c);
        case Command::ci: return cmd_ci(c);
        case Command::placebo: return cmd_placebo(c);
        case Command::simulate: return cmd_simulate(c);
    }
    throw std::invalid_argument("unknown command");
}

}  // namespace csc::io
