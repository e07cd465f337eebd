#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gkin/engine.hpp"
#include "gkin/tail_analysis.hpp"

namespace gkin {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitViolation = 4 };

/// Flags shared by all subcommands; set flags override the config file.
struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::filesystem::path out = "out";
    std::optional<double> t_end;
    std::optional<std::size_t> particles;
    std::optional<double> alpha;
    std::optional<double> mu;
    std::optional<double> rho0;
    /// simulate: resume from this checkpoint; tailfit: input snapshot.
    std::optional<std::filesystem::path> checkpoint;
    /// checks: samples per randomized suite.
    std::uint64_t samples = 100000;
    /// rescale-compare: independent replica pairs.
    int replicas = 4;
};

/// Loads the config (or defaults) and applies the flag overrides.
SimConfig resolve_config(const CommandOptions& opts);

/// Runs one subcommand (simulate, steady, checks, tailfit, rescale-compare),
/// writing results under opts.out. Diagnostics go to `log`. Returns an ExitCode.
int run_command(const std::string& subcommand, const CommandOptions& opts, std::ostream& log);

// Library forms of the heavier subcommands.

struct SteadyOutcome {
    RunResult run;
    SteadyDetection detection;
    /// Observables averaged over [t_steady, t_steady + t_average].
    Estimate d3;
    Estimate y2;
    Estimate energy;
    Estimate rho1;  // integral f |v|
    SpeedHistogram histogram{3, 1.0, 1.0};
    std::optional<TailFit> tail;
    std::string tail_error;
};

/// Runs until detect_steady fires (or cfg.t_max), then averages over
/// cfg.t_average, accumulating the speed histogram at every record. Throws
/// NumericalFailure("no steady state: ...") if nothing is detected.
SteadyOutcome steady_state(const SimConfig& cfg, const RunObserver& progress = {});

/// Integral relaxation time of the temperature series T(t):
/// integral over [0, t_cut] of (T_ss - T(t)) / (T_ss - T(0)).
double relaxation_time(const std::vector<double>& t, const std::vector<double>& temp,
                       double t_ss, double t_cut);

struct RescaleComparison {
    double rho0 = 1.0;
    double mu = 1.0;
    double eta = 1.0;
    double tau = 1.0;
    int replicas = 0;
    Estimate temperature_ratio;  // T_scaled / T_base, expect eta^2
    Estimate relaxation_ratio;   // t_scaled / t_base, expect tau
    bool temperature_ok = false;
    bool relaxation_ok = false;
};

/// Paired runs of `base` (rho0 = mu = 1) and of (rho0, mu) with the initial
/// state and horizon mapped by the similarity scales. Each replica pair shares
/// a seed; ratios are compared to eta^2 and tau within 3 replica standard
/// errors (plus 1e-9 relative for rounding).
RescaleComparison rescale_compare(const SimConfig& base, double rho0, double mu, int replicas);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gkin
