#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gkin/ensemble.hpp"
#include "gkin/random.hpp"

namespace gkin {

/// A Monte Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_err = 0.0;
};

/// Y_s = integral of f <v>^s with <v> = (1 + |v|^2)^{1/2}; jackknife error.
Estimate moment(const Ensemble& e, double s);

/// Pair statistic D3 = integral of f f_* |v - v_*|^3 over the empirical measure.
///
/// Unbiased for rho0^2 / N_p^2 * sum_{i != j} |v_i - v_j|^3, which is the
/// quantity the particle dynamics dissipates at; estimated from `n_pairs`
/// uniformly sampled ordered pairs (i != j). Requires n_pairs >= 10^4.
Estimate dissipation_functional(const Ensemble& e, std::size_t n_pairs, Rng& rng);

/// Histogram controls for entropy_estimate.
struct EntropyBins {
    /// Range per axis, in thermal speeds around the mean velocity.
    double clip_thermal = 8.0;
    /// Fixed bin width; <= 0 selects the Freedman-Diaconis-type width
    /// 2 IQR n^{-1/(N+2)} per axis.
    double width = 0.0;
};

/// Histogram estimate of integral f log f = sum_k p_k log(p_k / vol_k).
///
/// Cartesian bins for N <= 3, radial shells around the mean otherwise. A
/// diagnostic only: finite-sample bias is not corrected.
double entropy_estimate(const Ensemble& e, const EntropyBins& bins = {});

/// One row of the observable time series.
struct ObservableRecord {
    double t = 0.0;
    std::vector<Estimate> moments;  // aligned with ObservableSeries::orders
    std::vector<double> momentum;
    Estimate d3;
    double entropy = 0.0;
    double energy = 0.0;  // integral f |v|^2
    // Collision counters since the previous record.
    std::uint64_t n_coll = 0;
    std::uint64_t candidates = 0;
    std::uint64_t majorant_raises = 0;
    double accept_rate = 0.0;
    double majorant = 0.0;
    // Cumulative energy ledgers since t = 0.
    double energy_injected = 0.0;
    double energy_collisional = 0.0;
};

struct ObservableSeries {
    int dimension = 3;
    double rho0 = 1.0;
    std::vector<double> orders;
    std::vector<ObservableRecord> records;

    /// Index of order s in `orders`; throws InvalidParameter if absent.
    std::size_t order_index(double s) const;
    std::vector<double> times() const;
    std::vector<double> moment_values(double s) const;
    std::vector<double> d3_values() const;
};

/// Mean of a correlated time series with a batch-means standard error.
/// Needs at least `batches` values (batches >= 2).
Estimate time_average(const std::vector<double>& y, std::size_t batches = 10);

/// Orders always recorded because the CSV schema needs them.
std::vector<double> csv_moment_orders();

/// Merges the requested orders with the CSV orders, sorted and unique.
std::vector<double> recorded_orders(const std::vector<double>& requested);

struct MeasureOptions {
    std::vector<double> orders = {0, 1, 2, 3, 4, 6};
    std::size_t d3_pairs = 100000;
    bool entropy = true;
};

/// Moments, momentum, D3 and entropy for one snapshot (collision counters are
/// left for the caller to fill in).
ObservableRecord measure(const Ensemble& e, const MeasureOptions& opts, Rng& rng);

/// CSV header: t,Y0,px,py,pz,Y2,Y3,Y4,Y6,D3,D3_err,entropy,n_coll,accept_rate,majorant
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ObservableSeries& series, const ObservableRecord& r);
void write_csv(std::ostream& os, const ObservableSeries& series);

}  // namespace gkin
