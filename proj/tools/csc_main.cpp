#include "csc/error.hpp"
#include "csc/io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using csc::io::RunConfig;

// The config file supplies defaults that flags given on the command line
// override, so it is read before the parser is built.
RunConfig initial_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return csc::io::read_config(std::filesystem::path(argv[i + 1]));
        if (arg.rfind("--config=", 0) == 0) return csc::io::read_config(std::filesystem::path(arg.substr(9)));
    }
    return {};
}

void add_common(CLI::App& sub, RunConfig& cfg, std::string& config_path, std::string& estimator,
                std::string& permutations, std::string& statistic, std::string& seed) {
    sub.add_option("--config", config_path, "key = value config file; flags override its values");
    sub.add_option("--estimator", estimator, "did, sc, classo[:K=r], lasso:lambda=l, enet:lambda=l,alpha=a, "
                                             "factor[:k=n], ife[:k=n], mc[:K=r], ar[:lags=p], fused:base=<m>[,lags=p]")
        ->capture_default_str();
    sub.add_option("--statistic", statistic, "sq or mean")->check(CLI::IsMember({"sq", "mean"}))->capture_default_str();
    sub.add_option("--q", cfg.q, "order of the S_q statistic")->capture_default_str();
    sub.add_option("--permutations", permutations, "moving-block, iid or iid-sampled")
        ->check(CLI::IsMember({"moving-block", "iid", "iid-sampled"}))
        ->capture_default_str();
    sub.add_option("--n-perm", cfg.n_perm, "number of sampled permutations (iid-sampled)")->capture_default_str();
    sub.add_option("--alpha", cfg.alpha, "significance level")->capture_default_str();
    sub.add_option("--seed", seed, "master seed (default: $CSC_SEED, else 0)");
    sub.add_option("--workers", cfg.workers, "worker threads for parallel loops (0: all cores)")->capture_default_str();
    sub.add_option("--out", cfg.out, "output directory")->capture_default_str();
}

void add_input(CLI::App& sub, RunConfig& cfg, std::string& layout, std::vector<std::string>& treated) {
    sub.add_option("--input", cfg.input, "panel CSV file");
    sub.add_option("--layout", layout, "wide or long")->check(CLI::IsMember({"wide", "long"}))->capture_default_str();
    sub.add_option("--t0", cfg.t0, "number of pre-treatment periods");
    sub.add_option("--treated", treated, "treated unit label(s); default: first unit")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        cfg = initial_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "csc: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"Permutation inference for synthetic control and related counterfactual estimators"};
    app.require_subcommand(1);

    std::string config_path;
    std::string estimator = cfg.estimator;
    std::string permutations = csc::io::format_permutations(cfg.permutations);
    std::string statistic = cfg.statistic;
    std::string seed = cfg.seed ? std::to_string(*cfg.seed) : "";
    std::string layout = csc::io::to_string(cfg.layout);
    std::vector<std::string> treated = cfg.treated;
    std::string grid = cfg.grid ? csc::io::format_grid(*cfg.grid) : "";
    std::string weights = std::string(csc::to_string(cfg.dgp.weights));
    std::string trend = std::string(csc::to_string(cfg.dgp.factor_trend));
    std::string controls = std::string(csc::to_string(cfg.dgp.controls));
    std::string fit_mode = std::string(csc::to_string(cfg.fit_mode));

    auto* test = app.add_subcommand("test", "test a sharp null on the post-treatment effects");
    auto* ci = app.add_subcommand("ci", "pointwise confidence intervals by test inversion");
    auto* placebo = app.add_subcommand("placebo", "placebo test on the last pre-treatment periods");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo size and power experiments");

    for (auto* sub : {test, ci, placebo}) {
        add_common(*sub, cfg, config_path, estimator, permutations, statistic, seed);
        add_input(*sub, cfg, layout, treated);
    }
    add_common(*simulate, cfg, config_path, estimator, permutations, statistic, seed);

    test->add_option("--null", cfg.null_value, "constant effect under the null for every post period")
        ->capture_default_str();
    ci->add_option("--grid", grid, "candidate effects as min:max:count (default: 41 points around the estimate)");
    placebo->add_option("--tau", cfg.placebo_tau, "placebo post periods (default: min(T_*, t0 - 1))");

    simulate->add_option("--preset", cfg.preset, "size_subset or null_vs_pre")
        ->check(CLI::IsMember({"", "size_subset", "null_vs_pre"}));
    simulate->add_option("--dgp-t0", cfg.dgp.t0, "pre-treatment periods")->capture_default_str();
    simulate->add_option("--dgp-J", cfg.dgp.n_controls, "control units")->capture_default_str();
    simulate->add_option("--rho-u", cfg.dgp.rho_u, "AR(1) coefficient of the treated noise")->capture_default_str();
    simulate->add_option("--rho-eps", cfg.dgp.rho_eps, "AR(1) coefficient of the control noise")->capture_default_str();
    simulate->add_option("--weights", weights, "DGP1, DGP2, DGP3 or DGP4")->capture_default_str();
    simulate->add_option("--trend", trend, "stationary or trending factor")->capture_default_str();
    simulate->add_option("--controls", controls, "factor_model or iid_normal")->capture_default_str();
    simulate->add_option("--alpha-true", cfg.dgp.alpha_true, "true post-period effect")->capture_default_str();
    simulate->add_option("--n-reps", cfg.n_reps, "replications")->capture_default_str();
    simulate->add_option("--fit-mode", fit_mode, "under_null or pre_only")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (test->parsed()) cfg.command = csc::io::Command::test;
        if (ci->parsed()) cfg.command = csc::io::Command::ci;
        if (placebo->parsed()) cfg.command = csc::io::Command::placebo;
        if (simulate->parsed()) cfg.command = csc::io::Command::simulate;
        csc::io::apply_config_value(cfg, "estimator", estimator);
        csc::io::apply_config_value(cfg, "permutations", permutations);
        csc::io::apply_config_value(cfg, "statistic", statistic);
        csc::io::apply_config_value(cfg, "seed", seed);
        csc::io::apply_config_value(cfg, "layout", layout);
        cfg.treated = treated;
        csc::io::apply_config_value(cfg, "grid", grid);
        csc::io::apply_config_value(cfg, "dgp.weights", weights);
        csc::io::apply_config_value(cfg, "dgp.trend", trend);
        csc::io::apply_config_value(cfg, "dgp.controls", controls);
        csc::io::apply_config_value(cfg, "fit_mode", fit_mode);
        if (cfg.command != csc::io::Command::simulate && cfg.t0 < 1) {
            throw std::invalid_argument("--t0 is required (number of pre-treatment periods)");
        }
        const std::string json = csc::io::run_command(cfg);
        std::cout << json;
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "csc: " << e.what() << '\n';
        return 2;
    } catch (const csc::ParseError& e) {
        std::cerr << "csc: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "csc: " << e.what() << '\n';
        return 1;
    }
}
