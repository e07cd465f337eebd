#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gkin/ensemble.hpp"
#include "gkin/observables.hpp"

namespace gkin {

/// Isotropic radial histogram of |v| accumulated over one or more snapshots.
///
/// The density in bin k is counts_k * weight / (shell volume), where weight is
/// rho0 / (speeds accumulated so far). Speeds beyond the last edge are counted in
/// `overflow` so the total mass is still rho0.
class SpeedHistogram {
public:
    /// Uniform bins of `width_thermal` thermal speeds out to `max_thermal`.
    SpeedHistogram(int dimension, double rho0, double v_thermal, double width_thermal = 0.1,
                   double max_thermal = 12.0);

    void accumulate(const Ensemble& e);
    /// Adds raw speeds (synthetic data); the total mass stays rho0.
    void accumulate_speeds(const std::vector<double>& speeds);

    int dimension() const noexcept { return dim_; }
    double rho0() const noexcept { return rho0_; }
    double v_thermal() const noexcept { return vth_; }
    std::size_t bins() const noexcept { return counts_.size(); }
    const std::vector<double>& edges() const noexcept { return edges_; }
    const std::vector<double>& counts() const noexcept { return counts_; }
    double overflow() const noexcept { return overflow_; }
    double center(std::size_t k) const { return 0.5 * (edges_[k] + edges_[k + 1]); }
    double shell_volume(std::size_t k) const;
    double density(std::size_t k) const;
    /// Poisson standard error of density(k).
    double density_error(std::size_t k) const;
    /// sum counts * weight, including overflow.
    double total_mass() const;
    double weight_per_count() const noexcept { return samples_ > 0.0 ? rho0_ / samples_ : 0.0; }

    /// Same counts with every speed multiplied by eta (densities divided by eta^N).
    SpeedHistogram rescaled(double eta) const;

private:
    int dim_;
    double rho0_;
    double vth_;
    std::vector<double> edges_;
    std::vector<double> counts_;
    double overflow_ = 0.0;
    double samples_ = 0.0;
};

/// Thermal speed sqrt(integral f |v|^2 / (N rho0)) of an ensemble.
double thermal_speed(const Ensemble& e);

struct TailFit {
    double p_hat = 0.0;
    double a_hat = 0.0;
    double c_hat = 0.0;
    double v_lo = 0.0;
    double v_hi = 0.0;
    std::size_t window_bins = 0;
    double residual = 0.0;      // at p_hat
    double residual_1_5 = 0.0;  // at p = 1.5
    double residual_2_0 = 0.0;  // at p = 2.0
};

/// Grid search p in [1.0, 2.5] step 0.01; for each p a count-weighted linear
/// least-squares fit of log density against (1, |v|^p) over the window
/// [2.5 v_th, last bin with >= min_counts counts]. Throws AnalysisUnavailable
/// when fewer than 8 window bins have >= min_counts counts.
TailFit fit_tail(const SpeedHistogram& h, double min_counts = 100.0);

/// Weighted residual of the window fit at a fixed exponent.
double tail_residual(const SpeedHistogram& h, double p, double min_counts = 100.0);

/// Positive root of (9r/4) a^2 - (3(2N-1) r^{-1/2}/4) a - (rho0 r + rho1) = 0,
/// raised to sqrt(4 rho0 / 9) if needed so that (9/4) a^2 >= rho0.
double barrier_coefficient(double rho0, double rho1, double r, int dimension);

/// (9/4) a^2 |v| - (3(2N-1)/4) a |v|^{-1/2}: Laplacian of K exp(-a|v|^{3/2})
/// divided by the function itself.
double barrier_laplacian_ratio(double a, double speed, int dimension);

struct BarrierReport {
    std::size_t nodes = 0;
    std::size_t failures = 0;
    double min_margin = 0.0;      // min over nodes of (ratio - convolution) / scale
    double witness_speed = 0.0;   // node with the smallest margin
    bool pass() const { return nodes > 0 && failures == 0; }
};

/// Checks Delta h - h (g * |v|) >= 0 on `nodes` speeds in (r, v_max], in
/// `directions` random directions each. The convolution is the empirical sum
/// weight * sum_i |v - v_i|; a node fails only if the slack is below -3 of its
/// Monte Carlo standard errors. Throws InvalidParameter if r <= 0 or v_max <= r.
BarrierReport verify_barrier_inequality(const Ensemble& g, double a, double r, double v_max,
                                        std::size_t nodes, std::size_t directions,
                                        std::uint64_t seed);

/// Same check for g = rho0 * delta_0, whose convolution is rho0 |v| exactly.
BarrierReport verify_barrier_point_mass(double rho0, double a, double r, double v_max,
                                        std::size_t nodes, int dimension);

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

struct LowerBoundReport {
    Verdict verdict = Verdict::inconclusive;
    std::size_t qualifying_bins = 0;
    std::size_t failures = 0;
    double min_log_margin = 0.0;  // min over bins of log(density / bound)
    double witness_speed = 0.0;
};

/// f(|v|) >= K exp(-2 a |v|^{3/2}) on every bin whose Poisson relative error
/// is below `max_rel_err`.
LowerBoundReport verify_lower_bound(const SpeedHistogram& h, double K, double a,
                                    double max_rel_err = 0.2);

/// (c0, v0, r0) from the densest resolved bin and K = c0 exp(-a |v0|^{3/2}),
/// with c0 the bin density less three standard errors.
struct LowerBoundCalibration {
    double c0 = 0.0;
    double v0 = 0.0;
    double r0 = 0.0;
    double K = 0.0;
};

LowerBoundCalibration calibrate_lower_bound(const SpeedHistogram& h, double a,
                                            double max_rel_err = 0.2);

/// At each snapshot time t_k, f(v, t_k) >= K exp(-b t_k - a <v>^{3/2}) on the
/// resolved bins, with b = 3Na/2 + rho0 + rho1.
LowerBoundReport verify_time_lower_bound(const std::vector<double>& times,
                                         const std::vector<SpeedHistogram>& hists, double K,
                                         double a, double b, double max_rel_err = 0.2);

struct SteadyDetection {
    std::optional<double> time;
    double change_y2 = 0.0;  // relative change of the last compared windows
    double change_d3 = 0.0;
    std::string diagnostic;
};

/// Earliest record time t at which the means of Y_2 and D3 over (t - w, t]
/// differ from those over (t - 2w, t - w] by less than `tol` (relative).
SteadyDetection detect_steady(const ObservableSeries& series, double window, double tol = 0.01);

struct OverpopulationReport {
    std::size_t pairs = 0;
    std::size_t decreases = 0;  // consecutive tail bins whose ratio drops beyond 2 sigma
    double ratio_first = 0.0;
    double ratio_last = 0.0;
    bool pass() const { return pairs > 0 && decreases == 0 && ratio_last > ratio_first; }
};

/// Ratio of the density to the Maxwellian with the same mass and temperature,
/// over the tail window of fit_tail.
OverpopulationReport overpopulation_witness(const SpeedHistogram& h, double temperature,
                                            double min_counts = 100.0);

/// bin_center,density,err
void write_histogram_csv(std::ostream& os, const SpeedHistogram& h);

}  // namespace gkin
