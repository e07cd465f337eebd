#include "gkin/observables.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "gkin/cross_section.hpp"
#include "gkin/errors.hpp"

namespace gkin {

namespace {

double jap_power(double v2, double s) {
    if (s == 0.0) return 1.0;
    if (s == 2.0) return 1.0 + v2;
    return std::pow(1.0 + v2, 0.5 * s);
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double quantile(std::vector<double>& xs, double q) {
    const auto k = static_cast<std::size_t>(q * static_cast<double>(xs.size() - 1));
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(k), xs.end());
    return xs[k];
}

double entropy_from_sorted_keys(std::vector<std::uint64_t>& keys, double weight,
                                auto&& volume_of) {
    std::sort(keys.begin(), keys.end());
    double h = 0.0;
    std::size_t i = 0;
    while (i < keys.size()) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        const double p = weight * static_cast<double>(j - i);
        h += p * std::log(p / volume_of(keys[i]));
        i = j;
    }
    return h;
}

}  // namespace

Estimate moment(const Ensemble& e, double s) {
    if (!(s >= 0.0)) throw InvalidParameter("moment order must be >= 0");
    const std::size_t n = e.size();
    if (n < 2) throw InvalidParameter("moment needs at least two particles");
    if (s == 0.0) return {e.rho0, 0.0};

    std::vector<double> x(n);
    CompensatedSum total;
    for (std::size_t i = 0; i < n; ++i) {
        auto v = e.particle(i);
        double v2 = 0.0;
        for (double c : v) v2 += c * c;
        x[i] = jap_power(v2, s);
        total.add(x[i]);
    }
    const double S = total.value();
    const double dn = static_cast<double>(n);
    // leave-one-out replicates theta_i = (S - x_i)/(n - 1)
    CompensatedSum rep_sum;
    for (std::size_t i = 0; i < n; ++i) rep_sum.add((S - x[i]) / (dn - 1.0));
    const double rep_mean = rep_sum.value() / dn;
    CompensatedSum dev;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (S - x[i]) / (dn - 1.0) - rep_mean;
        dev.add(d * d);
    }
    const double se = std::sqrt((dn - 1.0) / dn * dev.value());
    return {e.rho0 * S / dn, e.rho0 * se};
}

Estimate dissipation_functional(const Ensemble& e, std::size_t n_pairs, Rng& rng) {
    const std::size_t n = e.size();
    if (n < 2) throw InvalidParameter("dissipation functional needs at least two particles");
    if (n_pairs < 10000) throw InvalidParameter("dissipation functional needs >= 10^4 pairs");
    CompensatedSum sum, sum2;
    for (std::size_t k = 0; k < n_pairs; ++k) {
        const auto i = uniform_index(rng, n);
        auto j = uniform_index(rng, n - 1);
        if (j >= i) ++j;
        auto a = e.particle(i);
        auto b = e.particle(j);
        double u2 = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) u2 += (a[c] - b[c]) * (a[c] - b[c]);
        const double u3 = u2 * std::sqrt(u2);
        sum.add(u3);
        sum2.add(u3 * u3);
    }
    const double m = static_cast<double>(n_pairs);
    const double mean = sum.value() / m;
    const double var = std::max(0.0, (sum2.value() / m - mean * mean) * m / (m - 1.0));
    // i = j pairs of the empirical measure contribute zero
    const double scale = e.rho0 * e.rho0 * (static_cast<double>(n) - 1.0) / static_cast<double>(n);
    return {scale * mean, scale * std::sqrt(var / m)};
}

double entropy_estimate(const Ensemble& e, const EntropyBins& bins) {
    const std::size_t n = e.size();
    if (n == 0) throw InvalidParameter("entropy of an empty ensemble");
    const int dim = e.dimension;
    const auto d = static_cast<std::size_t>(dim);
    const auto p = e.momentum();
    std::vector<double> mean(d);
    for (std::size_t k = 0; k < d; ++k) mean[k] = p[k] / e.rho0;
    const double vth = std::sqrt(e.mean_square_peculiar_speed() / dim);
    if (!(vth > 0.0)) throw InvalidParameter("entropy of a degenerate (single-velocity) ensemble");
    const double half_range = bins.clip_thermal * vth;
    const double shrink = std::pow(static_cast<double>(n), -1.0 / (dim + 2));

    auto fd_width = [&](std::vector<double> xs) {
        if (bins.width > 0.0) return bins.width;
        const double iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
        const double h = 2.0 * iqr * shrink;
        return h > 0.0 ? h : 2.0 * vth * shrink;
    };

    if (dim <= 3) {
        std::vector<double> width(d);
        std::vector<std::uint64_t> nbins(d);
        for (std::size_t k = 0; k < d; ++k) {
            std::vector<double> xs(n);
            for (std::size_t i = 0; i < n; ++i) xs[i] = e.particle(i)[k];
            width[k] = fd_width(std::move(xs));
            nbins[k] = static_cast<std::uint64_t>(std::ceil(2.0 * half_range / width[k]));
        }
        std::vector<std::uint64_t> keys;
        keys.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto v = e.particle(i);
            std::uint64_t key = 0;
            bool inside = true;
            for (std::size_t k = 0; k < d && inside; ++k) {
                const double x = v[k] - (mean[k] - half_range);
                if (x < 0.0) {
                    inside = false;
                    break;
                }
                const auto b = static_cast<std::uint64_t>(x / width[k]);
                if (b >= nbins[k]) inside = false;
                key = key * nbins[k] + b;
            }
            if (inside) keys.push_back(key);
        }
        double vol = 1.0;
        for (double w : width) vol *= w;
        return entropy_from_sorted_keys(keys, e.weight(), [vol](std::uint64_t) { return vol; });
    }

    // radial shells around the mean velocity
    std::vector<double> speeds(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto v = e.particle(i);
        double s2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) s2 += (v[k] - mean[k]) * (v[k] - mean[k]);
        speeds[i] = std::sqrt(s2);
    }
    const double h = fd_width(speeds);
    std::vector<std::uint64_t> keys;
    keys.reserve(n);
    for (double s : speeds) {
        if (s < half_range) keys.push_back(static_cast<std::uint64_t>(s / h));
    }
    const double unit = sphere_area(dim - 1) / dim;
    return entropy_from_sorted_keys(keys, e.weight(), [&](std::uint64_t k) {
        const double r0 = h * static_cast<double>(k), r1 = r0 + h;
        return unit * (std::pow(r1, dim) - std::pow(r0, dim));
    });
}

std::size_t ObservableSeries::order_index(double s) const {
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (orders[i] == s) return i;
    }
    throw InvalidParameter("moment order " + format_double(s) + " was not recorded");
}

std::vector<double> ObservableSeries::times() const {
    std::vector<double> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back(r.t);
    return t;
}

std::vector<double> ObservableSeries::moment_values(double s) const {
    const auto k = order_index(s);
    std::vector<double> y;
    y.reserve(records.size());
    for (const auto& r : records) y.push_back(r.moments[k].value);
    return y;
}

std::vector<double> ObservableSeries::d3_values() const {
    std::vector<double> y;
    y.reserve(records.size());
    for (const auto& r : records) y.push_back(r.d3.value);
    return y;
}

Estimate time_average(const std::vector<double>& y, std::size_t batches) {
    if (batches < 2 || y.size() < batches)
        throw InvalidParameter("time average needs at least `batches` >= 2 values");
    const std::size_t per = y.size() / batches;
    // drop the oldest remainder so every batch has the same length
    const std::size_t skip = y.size() - per * batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        CompensatedSum s;
        for (std::size_t i = 0; i < per; ++i) s.add(y[skip + b * per + i]);
        means[b] = s.value() / static_cast<double>(per);
    }
    CompensatedSum m;
    for (double x : means) m.add(x);
    const double mean = m.value() / static_cast<double>(batches);
    double ss = 0.0;
    for (double x : means) ss += (x - mean) * (x - mean);
    const double nb = static_cast<double>(batches);
    return {mean, std::sqrt(ss / (nb - 1.0) / nb)};
}

std::vector<double> csv_moment_orders() { return {0, 2, 3, 4, 6}; }

std::vector<double> recorded_orders(const std::vector<double>& requested) {
    std::vector<double> out = requested;
    for (double s : csv_moment_orders()) out.push_back(s);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ObservableRecord measure(const Ensemble& e, const MeasureOptions& opts, Rng& rng) {
    ObservableRecord r;
    r.t = e.time;
    r.moments.reserve(opts.orders.size());
    for (double s : opts.orders) r.moments.push_back(moment(e, s));
    r.momentum = e.momentum();
    r.d3 = dissipation_functional(e, opts.d3_pairs, rng);
    r.entropy = opts.entropy ? entropy_estimate(e) : std::numeric_limits<double>::quiet_NaN();
    r.energy = e.kinetic_energy();
    return r;
}

void write_csv_header(std::ostream& os) {
    os << "t,Y0,px,py,pz,Y2,Y3,Y4,Y6,D3,D3_err,entropy,n_coll,accept_rate,majorant\n";
}

void write_csv_row(std::ostream& os, const ObservableSeries& series, const ObservableRecord& r) {
    auto y = [&](double s) { return format_double(r.moments[series.order_index(s)].value); };
    auto p = [&](std::size_t k) { return format_double(k < r.momentum.size() ? r.momentum[k] : 0.0); };
    os << format_double(r.t) << ',' << y(0) << ',' << p(0) << ',' << p(1) << ',' << p(2) << ','
       << y(2) << ',' << y(3) << ',' << y(4) << ',' << y(6) << ',' << format_double(r.d3.value)
       << ',' << format_double(r.d3.std_err) << ',' << format_double(r.entropy) << ','
       << r.n_coll << ',' << format_double(r.accept_rate) << ',' << format_double(r.majorant)
       << '\n';
}

void write_csv(std::ostream& os, const ObservableSeries& series) {
    write_csv_header(os);
    for (const auto& r : series.records) write_csv_row(os, series, r);
}

}  // namespace gkin
