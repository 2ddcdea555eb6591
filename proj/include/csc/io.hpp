#pragma once

// CSV panel files, the estimator string grammar, run configuration files and
// JSON / CSV result documents.
//
// Wide layout: a header row `time,<unit>,<unit>,...` then one row per period.
// Long layout: a header row `unit,time,outcome[,<covariate>...]` then one row
// per (unit, time) pair, in any order. Both require the number of
// pre-treatment periods and the treated unit labels from the caller; treated
// units become the leading columns of the panel, in the order given.

#include "csc/estimators.hpp"
#include "csc/inference.hpp"
#include "csc/panel.hpp"
#include "csc/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace csc::io {

enum class Layout { wide, long_format };

[[nodiscard]] Layout parse_layout(const std::string& s);
[[nodiscard]] std::string to_string(Layout l);

struct ReadOptions {
    Layout layout = Layout::wide;
    int t0 = 0;  // required, >= 1
    // Defaults to the first unit of the file.
    std::vector<std::string> treated;
};

[[nodiscard]] PanelData read_panel_csv(std::istream& in, const ReadOptions& options);
[[nodiscard]] PanelData read_panel_csv(const std::filesystem::path& path, const ReadOptions& options);

// Values use 17 significant digits, so reading the file back reproduces the
// panel exactly. The long layout also writes covariates.
void write_panel_csv(std::ostream& out, const PanelData& panel, Layout layout = Layout::wide);
void write_panel_csv(const std::filesystem::path& path, const PanelData& panel, Layout layout = Layout::wide);

// Grammar: name[:key=value[,key=value...]]
//   did | sc | classo[:K=r] | lasso:lambda=l | enet:lambda=l,alpha=a
//   factor[:k=n] | ife[:k=n] | mc[:K=r] | ar[:lags=p]
//   fused:base=<name>[,<base keys>...][,lags=p]
[[nodiscard]] EstimatorSpec parse_estimator(const std::string& text);
// Inverse of parse_estimator for every grammar-expressible model.
[[nodiscard]] std::string format_estimator(const EstimatorSpec& spec);

[[nodiscard]] PermutationKind parse_permutations(const std::string& s);
[[nodiscard]] std::string format_permutations(PermutationKind k);

struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int count = 41;

    [[nodiscard]] std::vector<double> values() const;
    bool operator==(const GridSpec&) const = default;
};

// "min:max:count"
[[nodiscard]] GridSpec parse_grid(const std::string& text);
[[nodiscard]] std::string format_grid(const GridSpec& g);

enum class Command { test, ci, placebo, simulate };

[[nodiscard]] Command parse_command(const std::string& s);
[[nodiscard]] std::string to_string(Command c);

struct RunConfig {
    Command command = Command::test;

    std::string input;
    Layout layout = Layout::wide;
    int t0 = 0;
    std::vector<std::string> treated;

    std::string estimator = "sc";
    std::string statistic = "sq";  // sq | mean
    double q = 1.0;
    PermutationKind permutations = PermutationKind::moving_block;
    int n_perm = 5000;
    double alpha = 0.1;  // significance level; CIs have level 1 - alpha
    std::optional<std::uint64_t> seed;
    double null_value = 0.0;  // constant alpha0 for every post period
    std::optional<GridSpec> grid;
    int placebo_tau = 0;  // 0: min(T_*, t0 - 1)
    int workers = 1;
    std::string out = ".";

    // simulate
    std::string preset;  // empty: one experiment from the fields below; "size_subset"; "null_vs_pre"
    DgpSpec dgp{};
    int n_reps = 5000;
    FitMode fit_mode = FitMode::under_null;

    bool operator==(const RunConfig&) const = default;
};

// Seed from the config, else the CSC_SEED environment variable, else 0.
[[nodiscard]] std::uint64_t resolve_seed(const RunConfig& config);

[[nodiscard]] Statistic make_statistic(const RunConfig& config);
[[nodiscard]] SchemeSpec make_scheme(const RunConfig& config);

// Line-oriented `key = value`; blank lines and lines starting with '#' are
// ignored. Lists are comma separated. write_config emits every key, so
// read_config(write_config(c)) == c.
[[nodiscard]] RunConfig read_config(std::istream& in);
[[nodiscard]] RunConfig read_config(const std::filesystem::path& path);
// Applies one `key=value` assignment; unknown keys throw std::invalid_argument.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value, std::size_t line = 0);
void write_config(std::ostream& out, const RunConfig& config);

inline constexpr int kSchemaVersion = 1;

// Each command writes result.json (plus command-specific CSV files) into
// config.out and returns the JSON text it wrote.
std::string cmd_test(const RunConfig& config);
std::string cmd_ci(const RunConfig& config);
std::string cmd_placebo(const RunConfig& config);
std::string cmd_simulate(const RunConfig& config);
std::string run_command(const RunConfig& config);

}  // namespace csc::io
