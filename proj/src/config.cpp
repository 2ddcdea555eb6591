#include "csc/error.hpp"
#include "csc/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace csc::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double to_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument(what + ": expected a number, got '" + s + "'");
    }
    return v;
}

long long to_integer(const std::string& s, const std::string& what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument(what + ": expected an integer, got '" + s + "'");
    }
    return v;
}

int to_int(const std::string& s, const std::string& what) { return static_cast<int>(to_integer(s, what)); }

using Params = std::map<std::string, std::string>;

Params parse_params(const std::string& text, const std::string& name) {
    Params p;
    if (text.empty()) return p;
    for (const auto& item : split(text, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw std::invalid_argument("estimator '" + name + "': expected key=value, got '" + item + "'");
        }
        const std::string key = trim(item.substr(0, eq));
        if (!p.emplace(key, trim(item.substr(eq + 1))).second) {
            throw std::invalid_argument("estimator '" + name + "': key '" + key + "' given twice");
        }
    }
    return p;
}

void reject_unknown(const Params& p, std::initializer_list<const char*> allowed, const std::string& name) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw std::invalid_argument("estimator '" + name + "' has no parameter '" + k + "'");
    }
}

model::Panel parse_panel_model(const std::string& name, const Params& p) {
    if (name == "did") {
        reject_unknown(p, {}, name);
        return model::Did{};
    }
    if (name == "sc") {
        reject_unknown(p, {}, name);
        return model::Sc{};
    }
    if (name == "classo") {
        reject_unknown(p, {"K"}, name);
        model::Classo m;
        if (p.contains("K")) m.radius = to_double(p.at("K"), "classo K");
        if (!(m.radius > 0.0)) throw std::invalid_argument("classo K must be positive");
        return m;
    }
    if (name == "lasso") {
        reject_unknown(p, {"lambda"}, name);
        if (!p.contains("lambda")) throw std::invalid_argument("lasso needs lambda=<value>");
        return Lasso{to_double(p.at("lambda"), "lasso lambda")};
    }
    if (name == "enet") {
        reject_unknown(p, {"lambda", "alpha"}, name);
        if (!p.contains("lambda")) throw std::invalid_argument("enet needs lambda=<value>");
        ElasticNet e;
        e.lambda = to_double(p.at("lambda"), "enet lambda");
        if (p.contains("alpha")) e.alpha = to_double(p.at("alpha"), "enet alpha");
        return e;
    }
    if (name == "factor") {
        reject_unknown(p, {"k"}, name);
        return model::Factor{p.contains("k") ? to_int(p.at("k"), "factor k") : 1};
    }
    if (name == "ife") {
        reject_unknown(p, {"k"}, name);
        return model::InteractiveFe{p.contains("k") ? to_int(p.at("k"), "ife k") : 1};
    }
    if (name == "mc") {
        reject_unknown(p, {"K"}, name);
        model::MatrixCompletion m;
        if (p.contains("K")) m.radius = to_double(p.at("K"), "mc K");
        return m;
    }
    throw std::invalid_argument("unknown estimator '" + name +
                                "' (expected did, sc, classo, lasso, enet, factor, ife, mc, ar or fused)");
}

std::string format_panel_model(const model::Panel& m) {
    struct Visitor {
        std::string operator()(const model::Did&) const { return "did"; }
        std::string operator()(const model::Sc&) const { return "sc"; }
        std::string operator()(const model::Classo& c) const { return "classo:K=" + fmt(c.radius); }
        std::string operator()(const Lasso& l) const { return "lasso:lambda=" + fmt(l.lambda); }
        std::string operator()(const ElasticNet& e) const {
            return "enet:lambda=" + fmt(e.lambda) + ",alpha=" + fmt(e.alpha);
        }
        std::string operator()(const model::Factor& f) const { return "factor:k=" + std::to_string(f.k); }
        std::string operator()(const model::InteractiveFe& f) const { return "ife:k=" + std::to_string(f.k); }
        std::string operator()(const model::MatrixCompletion& mc) const {
            return mc.radius ? "mc:K=" + fmt(*mc.radius) : "mc";
        }
    };
    return std::visit(Visitor{}, m);
}

std::uint64_t to_seed(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument(what + ": expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

WeightsKind parse_weights(const std::string& s) {
    if (s == "DGP1" || s == "dgp1") return WeightsKind::dgp1;
    if (s == "DGP2" || s == "dgp2") return WeightsKind::dgp2;
    if (s == "DGP3" || s == "dgp3") return WeightsKind::dgp3;
    if (s == "DGP4" || s == "dgp4") return WeightsKind::dgp4;
    throw std::invalid_argument("unknown weights '" + s + "' (expected DGP1..DGP4)");
}

FactorTrend parse_trend(const std::string& s) {
    if (s == "stationary") return FactorTrend::stationary;
    if (s == "trending") return FactorTrend::trending;
    throw std::invalid_argument("unknown factor trend '" + s + "' (expected stationary or trending)");
}

ControlDesign parse_controls(const std::string& s) {
    if (s == "factor_model") return ControlDesign::factor_model;
    if (s == "iid_normal") return ControlDesign::iid_normal;
    throw std::invalid_argument("unknown control design '" + s + "' (expected factor_model or iid_normal)");
}

FitMode parse_fit_mode(const std::string& s) {
    if (s == "under_null") return FitMode::under_null;
    if (s == "pre_only") return FitMode::pre_only;
    throw std::invalid_argument("unknown fit mode '" + s + "' (expected under_null or pre_only)");
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"command", [](RunConfig& c, const std::string& v) { c.command = parse_command(v); }},
        {"input", [](RunConfig& c, const std::string& v) { c.input = v; }},
        {"layout", [](RunConfig& c, const std::string& v) { c.layout = parse_layout(v); }},
        {"t0", [](RunConfig& c, const std::string& v) { c.t0 = to_int(v, "t0"); }},
        {"treated",
         [](RunConfig& c, const std::string& v) { c.treated = v.empty() ? std::vector<std::string>{} : split(v, ','); }},
        {"estimator",
         [](RunConfig& c, const std::string& v) {
             (void)parse_estimator(v);
             c.estimator = v;
         }},
        {"statistic",
         [](RunConfig& c, const std::string& v) {
             if (v != "sq" && v != "mean") throw std::invalid_argument("statistic must be sq or mean, got '" + v + "'");
             c.statistic = v;
         }},
        {"q", [](RunConfig& c, const std::string& v) { c.q = to_double(v, "q"); }},
        {"permutations", [](RunConfig& c, const std::string& v) { c.permutations = parse_permutations(v); }},
        {"n_perm", [](RunConfig& c, const std::string& v) { c.n_perm = to_int(v, "n_perm"); }},
        {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = to_double(v, "alpha"); }},
        {"seed",
         [](RunConfig& c, const std::string& v) {
             c.seed = v.empty() ? std::nullopt : std::optional<std::uint64_t>(to_seed(v, "seed"));
         }},
        {"null", [](RunConfig& c, const std::string& v) { c.null_value = to_double(v, "null"); }},
        {"grid",
         [](RunConfig& c, const std::string& v) {
             c.grid = v.empty() ? std::nullopt : std::optional<GridSpec>(parse_grid(v));
         }},
        {"placebo_tau", [](RunConfig& c, const std::string& v) { c.placebo_tau = to_int(v, "placebo_tau"); }},
        {"workers", [](RunConfig& c, const std::string& v) { c.workers = to_int(v, "workers"); }},
        {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
        {"preset",
         [](RunConfig& c, const std::string& v) {
             if (!v.empty() && v != "size_subset" && v != "null_vs_pre") {
                 throw std::invalid_argument("unknown preset '" + v + "' (expected size_subset or null_vs_pre)");
             }
             c.preset = v;
         }},
        {"dgp.t0", [](RunConfig& c, const std::string& v) { c.dgp.t0 = to_int(v, "dgp.t0"); }},
        {"dgp.J", [](RunConfig& c, const std::string& v) { c.dgp.n_controls = to_int(v, "dgp.J"); }},
        {"dgp.rho_u", [](RunConfig& c, const std::string& v) { c.dgp.rho_u = to_double(v, "dgp.rho_u"); }},
        {"dgp.rho_eps", [](RunConfig& c, const std::string& v) { c.dgp.rho_eps = to_double(v, "dgp.rho_eps"); }},
        {"dgp.weights", [](RunConfig& c, const std::string& v) { c.dgp.weights = parse_weights(v); }},
        {"dgp.trend", [](RunConfig& c, const std::string& v) { c.dgp.factor_trend = parse_trend(v); }},
        {"dgp.controls", [](RunConfig& c, const std::string& v) { c.dgp.controls = parse_controls(v); }},
        {"dgp.post_periods",
         [](RunConfig& c, const std::string& v) { c.dgp.post_periods = to_int(v, "dgp.post_periods"); }},
        {"dgp.alpha_true", [](RunConfig& c, const std::string& v) { c.dgp.alpha_true = to_double(v, "dgp.alpha_true"); }},
        {"n_reps", [](RunConfig& c, const std::string& v) { c.n_reps = to_int(v, "n_reps"); }},
        {"fit_mode", [](RunConfig& c, const std::string& v) { c.fit_mode = parse_fit_mode(v); }},
    };
    return table;
}

}  // namespace

EstimatorSpec parse_estimator(const std::string& text) {
    const std::string t = trim(text);
    const auto colon = t.find(':');
    const std::string name = trim(t.substr(0, colon));
    Params p = parse_params(colon == std::string::npos ? std::string() : t.substr(colon + 1), name);
    EstimatorSpec spec;
    if (name == "ar") {
        reject_unknown(p, {"lags"}, name);
        spec.model = model::Ar{p.contains("lags") ? to_int(p.at("lags"), "ar lags") : 1};
        return spec;
    }
    if (name == "fused") {
        if (!p.contains("base")) throw std::invalid_argument("fused needs base=<estimator>");
        const std::string base = p.at("base");
        const int lags = p.contains("lags") ? to_int(p.at("lags"), "fused lags") : 1;
        p.erase("base");
        p.erase("lags");
        spec.model = model::Fused{parse_panel_model(base, p), lags};
        return spec;
    }
    spec.model = std::visit([](auto m) { return model::Any(m); }, parse_panel_model(name, p));
    return spec;
}

std::string format_estimator(const EstimatorSpec& spec) {
    if (const auto* a = std::get_if<model::Ar>(&spec.model)) return "ar:lags=" + std::to_string(a->lags);
    if (const auto* f = std::get_if<model::Fused>(&spec.model)) {
        std::string base = format_panel_model(f->base);
        const auto colon = base.find(':');
        std::string out = "fused:base=" + base.substr(0, colon);
        if (colon != std::string::npos) out += "," + base.substr(colon + 1);
        return out + ",lags=" + std::to_string(f->lags);
    }
    if (std::holds_alternative<model::NonlinearAr>(spec.model) || std::holds_alternative<model::Custom>(spec.model)) {
        throw std::invalid_argument("user-supplied estimators have no text form");
    }
    return std::visit(
        [](const auto& m) -> std::string {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_constructible_v<model::Panel, M>) {
                return format_panel_model(model::Panel(m));
            } else {
                return {};
            }
        },
        spec.model);
}

PermutationKind parse_permutations(const std::string& s) {
    if (s == "moving-block" || s == "moving_block") return PermutationKind::moving_block;
    if (s == "iid" || s == "iid_all") return PermutationKind::iid_all;
    if (s == "iid-sampled" || s == "iid_sampled") return PermutationKind::iid_sampled;
    throw std::invalid_argument("unknown permutations '" + s + "' (expected moving-block, iid or iid-sampled)");
}

std::string format_permutations(PermutationKind k) {
    switch (k) {
        case PermutationKind::moving_block: return "moving-block";
        case PermutationKind::iid_all: return "iid";
        case PermutationKind::iid_sampled: return "iid-sampled";
    }
    return "moving-block";
}

std::vector<double> GridSpec::values() const {
    if (count < 1) throw std::invalid_argument("grid count must be >= 1");
    if (count == 1) return {min};
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = min + (max - min) * i / (count - 1);
    return out;
}

GridSpec parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw std::invalid_argument("grid must be min:max:count, got '" + text + "'");
    GridSpec g{to_double(parts[0], "grid min"), to_double(parts[1], "grid max"), to_int(parts[2], "grid count")};
    if (g.count < 1) throw std::invalid_argument("grid count must be >= 1");
    if (g.max < g.min) throw std::invalid_argument("grid max must be >= grid min");
    return g;
}

std::string format_grid(const GridSpec& g) { return fmt(g.min) + ":" + fmt(g.max) + ":" + std::to_string(g.count); }

Command parse_command(const std::string& s) {
    if (s == "test") return Command::test;
    if (s == "ci") return Command::ci;
    if (s == "placebo") return Command::placebo;
    if (s == "simulate") return Command::simulate;
    throw std::invalid_argument("unknown command '" + s + "' (expected test, ci, placebo or simulate)");
}

std::string to_string(Command c) {
    switch (c) {
        case Command::test: return "test";
        case Command::ci: return "ci";
        case Command::placebo: return "placebo";
        case Command::simulate: return "simulate";
    }
    return "test";
}

std::uint64_t resolve_seed(const RunConfig& config) {
    if (config.seed) return *config.seed;
    if (const char* env = std::getenv("CSC_SEED"); env != nullptr && *env != '\0') {
        return to_seed(trim(env), "CSC_SEED");
    }
    return 0;
}

Statistic make_statistic(const RunConfig& config) {
    return config.statistic == "mean" ? Statistic::mean() : Statistic::sq(config.q);
}

SchemeSpec make_scheme(const RunConfig& config) {
    return SchemeSpec{config.permutations, config.n_perm, resolve_seed(config)};
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value, std::size_t line) {
    for (const auto& [k, set] : setters()) {
        if (k != key) continue;
        try {
            set(config, value);
        } catch (const std::invalid_argument& e) {
            if (line > 0) throw ParseError(e.what(), line);
            throw;
        }
        return;
    }
    const std::string msg = "unknown config key '" + key + "'";
    if (line > 0) throw ParseError(msg, line);
    throw std::invalid_argument(msg);
}

RunConfig read_config(std::istream& in) {
    RunConfig c;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s.front() == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line);
        apply_config_value(c, trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line);
    }
    return c;
}

RunConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config '" + path.string() + "'", 0);
    return read_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
    out << "command = " << to_string(c.command) << '\n'
        << "input = " << c.input << '\n'
        << "layout = " << to_string(c.layout) << '\n'
        << "t0 = " << c.t0 << '\n'
        << "treated = " << join(c.treated) << '\n'
        << "estimator = " << c.estimator << '\n'
        << "statistic = " << c.statistic << '\n'
        << "q = " << fmt(c.q) << '\n'
        << "permutations = " << format_permutations(c.permutations) << '\n'
        << "n_perm = " << c.n_perm << '\n'
        << "alpha = " << fmt(c.alpha) << '\n'
        << "seed = " << (c.seed ? std::to_string(*c.seed) : std::string()) << '\n'
        << "null = " << fmt(c.null_value) << '\n'
        << "grid = " << (c.grid ? format_grid(*c.grid) : std::string()) << '\n'
        << "placebo_tau = " << c.placebo_tau << '\n'
        << "workers = " << c.workers << '\n'
        << "out = " << c.out << '\n'
        << "preset = " << c.preset << '\n'
        << "dgp.t0 = " << c.dgp.t0 << '\n'
        << "dgp.J = " << c.dgp.n_controls << '\n'
        << "dgp.rho_u = " << fmt(c.dgp.rho_u) << '\n'
        << "dgp.rho_eps = " << fmt(c.dgp.rho_eps) << '\n'
        << "dgp.weights = " << to_string(c.dgp.weights) << '\n'
        << "dgp.trend = " << to_string(c.dgp.factor_trend) << '\n'
        << "dgp.controls = " << to_string(c.dgp.controls) << '\n'
        << "dgp.post_periods = " << c.dgp.post_periods << '\n'
        << "dgp.alpha_true = " << fmt(c.dgp.alpha_true) << '\n'
        << "n_reps = " << c.n_reps << '\n'
        << "fit_mode = " << to_string(c.fit_mode) << '\n';
}

}  // namespace csc::io
