#include "gkin/tail_analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "gkin/cross_section.hpp"
#include "gkin/errors.hpp"
#include "gkin/random.hpp"

namespace gkin {

namespace {

std::string fmt(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// bins used by the tail fit: center >= 2.5 v_th, up to the last bin with
// enough counts, skipping sparse bins in between
std::vector<std::size_t> tail_window(const SpeedHistogram& h, double min_counts) {
    std::size_t last = h.bins();
    for (std::size_t k = h.bins(); k-- > 0;) {
        if (h.counts()[k] >= min_counts) {
            last = k;
            break;
        }
    }
    std::vector<std::size_t> out;
    if (last == h.bins()) return out;
    for (std::size_t k = 0; k <= last; ++k) {
        if (h.center(k) >= 2.5 * h.v_thermal() && h.counts()[k] >= min_counts) out.push_back(k);
    }
    return out;
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double residual = 0.0;
};

// weighted least squares of y against (1, x)
LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& w) {
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.residual += w[i] * r * r;
    }
    return f;
}

struct WindowData {
    std::vector<double> v, logf, w;
};

WindowData window_data(const SpeedHistogram& h, double min_counts) {
    const auto idx = tail_window(h, min_counts);
    if (idx.size() < 8) {
        throw AnalysisUnavailable("tail window has " + std::to_string(idx.size()) +
                                  " bins with >= " + fmt(min_counts) + " counts; need 8");
    }
    WindowData d;
    for (auto k : idx) {
        d.v.push_back(h.center(k));
        d.logf.push_back(std::log(h.density(k)));
        d.w.push_back(h.counts()[k]);
    }
    return d;
}

LineFit fit_at(const WindowData& d, double p) {
    std::vector<double> x(d.v.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::pow(d.v[i], p);
    return weighted_line(x, d.logf, d.w);
}

double jap(double v) { return std::sqrt(1.0 + v * v); }

}  // namespace

SpeedHistogram::SpeedHistogram(int dimension, double rho0, double v_thermal, double width_thermal,
                               double max_thermal)
    : dim_(dimension), rho0_(rho0), vth_(v_thermal) {
    if (dimension < 2) throw InvalidParameter("dimension must be >= 2");
    if (!(rho0 > 0.0) || !(v_thermal > 0.0) || !(width_thermal > 0.0) ||
        !(max_thermal > width_thermal))
        throw InvalidParameter("histogram needs rho0, v_thermal > 0 and max_thermal > width_thermal");
    const auto n = static_cast<std::size_t>(std::ceil(max_thermal / width_thermal));
    edges_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) edges_[k] = static_cast<double>(k) * width_thermal * vth_;
    counts_.assign(n, 0.0);
}

void SpeedHistogram::accumulate(const Ensemble& e) {
    if (e.dimension != dim_) throw InvalidParameter("ensemble dimension does not match histogram");
    std::vector<double> speeds(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        double s2 = 0.0;
        for (double c : e.particle(i)) s2 += c * c;
        speeds[i] = std::sqrt(s2);
    }
    accumulate_speeds(speeds);
}

void SpeedHistogram::accumulate_speeds(const std::vector<double>& speeds) {
    const double width = edges_[1] - edges_[0];
    for (double s : speeds) {
        const auto k = static_cast<std::size_t>(s / width);
        if (k < counts_.size()) {
            counts_[k] += 1.0;
        } else {
            overflow_ += 1.0;
        }
    }
    samples_ += static_cast<double>(speeds.size());
}

double SpeedHistogram::shell_volume(std::size_t k) const {
    const double unit = sphere_area(dim_ - 1) / dim_;
    return unit * (std::pow(edges_[k + 1], dim_) - std::pow(edges_[k], dim_));
}

double SpeedHistogram::density(std::size_t k) const {
    return counts_[k] * weight_per_count() / shell_volume(k);
}

double SpeedHistogram::density_error(std::size_t k) const {
    return std::sqrt(counts_[k]) * weight_per_count() / shell_volume(k);
}

double SpeedHistogram::total_mass() const {
    double n = overflow_;
    for (double c : counts_) n += c;
    return n * weight_per_count();
}

SpeedHistogram SpeedHistogram::rescaled(double eta) const {
    if (!(eta > 0.0)) throw InvalidParameter("rescaling factor must be positive");
    SpeedHistogram h = *this;
    h.vth_ *= eta;
    for (double& e : h.edges_) e *= eta;
    return h;
}

double thermal_speed(const Ensemble& e) {
    return std::sqrt(e.kinetic_energy() / (e.dimension * e.rho0));
}

double tail_residual(const SpeedHistogram& h, double p, double min_counts) {
    return fit_at(window_data(h, min_counts), p).residual;
}

TailFit fit_tail(const SpeedHistogram& h, double min_counts) {
    const auto d = window_data(h, min_counts);
    TailFit best;
    best.residual = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 150; ++i) {
        const double p = (100 + i) / 100.0;
        const auto f = fit_at(d, p);
        if (f.residual < best.residual) {
            best.residual = f.residual;
            best.p_hat = p;
            best.a_hat = -f.slope;
            best.c_hat = std::exp(f.intercept);
        }
    }
    best.v_lo = d.v.front();
    best.v_hi = d.v.back();
    best.window_bins = d.v.size();
    best.residual_1_5 = fit_at(d, 1.5).residual;
    best.residual_2_0 = fit_at(d, 2.0).residual;
    return best;
}

double barrier_coefficient(double rho0, double rho1, double r, int dimension) {
    if (!(rho0 > 0.0) || !(rho1 >= 0.0) || !(r > 0.0))
        throw InvalidParameter("barrier coefficient needs rho0 > 0, rho1 >= 0, r > 0");
    const double qa = 2.25 * r;
    const double qb = -0.75 * (2 * dimension - 1) / std::sqrt(r);
    const double qc = -(rho0 * r + rho1);
    // qc <= 0, so -qb + sqrt(disc) has no cancellation
    const double root = (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
    return std::max(root, std::sqrt(4.0 * rho0 / 9.0));
}

double barrier_laplacian_ratio(double a, double speed, int dimension) {
    return 2.25 * a * a * speed - 0.75 * (2 * dimension - 1) * a / std::sqrt(speed);
}

BarrierReport verify_barrier_inequality(const Ensemble& g, double a, double r, double v_max,
                                        std::size_t nodes, std::size_t directions,
                                        std::uint64_t seed) {
    if (!(r > 0.0) || !(v_max > r)) throw InvalidParameter("barrier grid needs 0 < r < v_max");
    if (nodes == 0 || directions == 0) throw InvalidParameter("barrier grid is empty");
    const auto dim = static_cast<std::size_t>(g.dimension);
    auto rng = make_stream(seed, {0xBA});
    std::normal_distribution<double> normal;
    BarrierReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(g.size());
    std::vector<double> dir(dim);
    for (std::size_t di = 0; di < directions; ++di) {
        double n2 = 0.0;
        for (double& c : dir) {
            c = normal(rng);
            n2 += c * c;
        }
        for (double& c : dir) c /= std::sqrt(n2);
        for (std::size_t k = 1; k <= nodes; ++k) {
            const double s = r + (v_max - r) * static_cast<double>(k) / static_cast<double>(nodes);
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                auto vi = g.particle(i);
                double d2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    const double x = s * dir[c] - vi[c];
                    d2 += x * x;
                }
                const double d = std::sqrt(d2);
                sum += d;
                sum2 += d * d;
            }
            const double mean = sum / n;
            const double var = std::max(0.0, sum2 / n - mean * mean);
            const double conv = g.rho0 * mean;
            const double se = g.rho0 * std::sqrt(var / n);
            const double ratio = barrier_laplacian_ratio(a, s, g.dimension);
            const double slack = ratio - conv;
            const double margin = slack / std::max(std::abs(ratio), conv);
            ++rep.nodes;
            if (slack < -3.0 * se) ++rep.failures;
            if (margin < rep.min_margin) {
                rep.min_margin = margin;
                rep.witness_speed = s;
            }
        }
    }
    return rep;
}

BarrierReport verify_barrier_point_mass(double rho0, double a, double r, double v_max,
                                        std::size_t nodes, int dimension) {
    if (!(r > 0.0) || !(v_max > r)) throw InvalidParameter("barrier grid needs 0 < r < v_max");
    if (nodes == 0) throw InvalidParameter("barrier grid is empty");
    BarrierReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= nodes; ++k) {
        const double s = r + (v_max - r) * static_cast<double>(k) / static_cast<double>(nodes);
        const double ratio = barrier_laplacian_ratio(a, s, dimension);
        const double conv = rho0 * s;
        const double margin = (ratio - conv) / std::max(std::abs(ratio), conv);
        ++rep.nodes;
        if (ratio - conv < 0.0) ++rep.failures;
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.witness_speed = s;
        }
    }
    return rep;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: break;
    }
    return "inconclusive";
}

namespace {

LowerBoundReport check_bound(const SpeedHistogram& h, double max_rel_err, auto&& log_bound,
                             LowerBoundReport rep) {
    for (std::size_t k = 0; k < h.bins(); ++k) {
        const double c = h.counts()[k];
        if (c <= 0.0 || 1.0 / std::sqrt(c) >= max_rel_err) continue;
        ++rep.qualifying_bins;
        const double m = std::log(h.density(k)) - log_bound(h.center(k));
        if (m < 0.0) ++rep.failures;
        if (rep.qualifying_bins == 1 || m < rep.min_log_margin) {
            rep.min_log_margin = m;
            rep.witness_speed = h.center(k);
        }
    }
    return rep;
}

Verdict verdict_of(const LowerBoundReport& r) {
    if (r.qualifying_bins == 0) return Verdict::inconclusive;
    return r.failures == 0 ? Verdict::pass : Verdict::fail;
}

}  // namespace

LowerBoundReport verify_lower_bound(const SpeedHistogram& h, double K, double a,
                                    double max_rel_err) {
    if (!(K > 0.0) || !(a > 0.0)) throw InvalidParameter("lower bound needs K, a > 0");
    auto rep = check_bound(h, max_rel_err, [&](double v) {
        return std::log(K) - 2.0 * a * std::pow(v, 1.5);
    }, {});
    rep.verdict = verdict_of(rep);
    return rep;
}

LowerBoundCalibration calibrate_lower_bound(const SpeedHistogram& h, double a, double max_rel_err) {
    LowerBoundCalibration cal;
    double best = -1.0;
    for (std::size_t k = 0; k < h.bins(); ++k) {
        const double c = h.counts()[k];
        if (c <= 0.0 || 1.0 / std::sqrt(c) >= max_rel_err) continue;
        const double lower = h.density(k) - 3.0 * h.density_error(k);
        if (lower > best) {
            best = lower;
            cal.v0 = h.center(k);
            cal.r0 = 0.5 * (h.edges()[k + 1] - h.edges()[k]);
        }
    }
    if (!(best > 0.0)) throw AnalysisUnavailable("no resolved bin to calibrate the lower bound");
    cal.c0 = best;
    cal.K = cal.c0 * std::exp(-a * std::pow(cal.v0, 1.5));
    return cal;
}

LowerBoundReport verify_time_lower_bound(const std::vector<double>& times,
                                         const std::vector<SpeedHistogram>& hists, double K,
                                         double a, double b, double max_rel_err) {
    if (times.size() != hists.size()) throw InvalidParameter("one histogram per time required");
    LowerBoundReport rep;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double t = times[j];
        rep = check_bound(hists[j], max_rel_err, [&](double v) {
            return std::log(K) - b * t - a * std::pow(jap(v), 1.5);
        }, rep);
    }
    rep.verdict = verdict_of(rep);
    return rep;
}

SteadyDetection detect_steady(const ObservableSeries& series, double window, double tol) {
    if (!(window > 0.0)) throw InvalidParameter("steady window must be positive");
    SteadyDetection out;
    const auto& rec = series.records;
    if (rec.empty()) {
        out.diagnostic = "empty series";
        return out;
    }
    const auto t = series.times();
    const auto y2 = series.moment_values(2.0);
    const auto d3 = series.d3_values();
    const double t0 = t.front();
    const double eps = 1e-9 * window;

    // prefix sums so each window mean is two binary searches
    std::vector<double> py(t.size() + 1, 0.0), pd(t.size() + 1, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        py[i + 1] = py[i] + y2[i];
        pd[i + 1] = pd[i] + d3[i];
    }
    auto upto = [&](double x) {
        return static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x + eps) - t.begin());
    };
    auto mean_over = [&](const std::vector<double>& pre, double lo, double hi, bool& ok) {
        const auto a = upto(lo), b = upto(hi);
        ok = ok && b > a;
        return b > a ? (pre[b] - pre[a]) / static_cast<double>(b - a) : 0.0;
    };
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };

    bool eligible = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 + 2.0 * window - eps) continue;
        bool ok = true;
        const double y_now = mean_over(py, t[i] - window, t[i], ok);
        const double y_prev = mean_over(py, t[i] - 2.0 * window, t[i] - window, ok);
        const double d_now = mean_over(pd, t[i] - window, t[i], ok);
        const double d_prev = mean_over(pd, t[i] - 2.0 * window, t[i] - window, ok);
        if (!ok) continue;
        eligible = true;
        out.change_y2 = rel(y_now, y_prev);
        out.change_d3 = rel(d_now, d_prev);
        if (out.change_y2 < tol && out.change_d3 < tol) {
            out.time = t[i];
            return out;
        }
    }
    out.diagnostic = eligible ? "window means still changing: Y2 by " + fmt(out.change_y2) +
                                    ", D3 by " + fmt(out.change_d3)
                              : "series shorter than two windows";
    return out;
}

OverpopulationReport overpopulation_witness(const SpeedHistogram& h, double temperature,
                                            double min_counts) {
    if (!(temperature > 0.0)) throw InvalidParameter("temperature must be positive");
    const auto idx = tail_window(h, min_counts);
    OverpopulationReport rep;
    if (idx.size() < 2) return rep;
    const int n = h.dimension();
    const double log_norm = std::log(h.rho0()) - 0.5 * n * std::log(2.0 * std::numbers::pi * temperature);
    auto ratio = [&](std::size_t k) {
        const double v = h.center(k);
        return h.density(k) / std::exp(log_norm - v * v / (2.0 * temperature));
    };
    auto ratio_err = [&](std::size_t k) { return ratio(k) / std::sqrt(h.counts()[k]); };
    rep.ratio_first = ratio(idx.front());
    rep.ratio_last = ratio(idx.back());
    for (std::size_t j = 1; j < idx.size(); ++j) {
        ++rep.pairs;
        const double drop = ratio(idx[j - 1]) - ratio(idx[j]);
        const double err = std::hypot(ratio_err(idx[j - 1]), ratio_err(idx[j]));
        if (drop > 2.0 * err) ++rep.decreases;
    }
    return rep;
}

void write_histogram_csv(std::ostream& os, const SpeedHistogram& h) {
    os << "bin_center,density,err\n";
    for (std::size_t k = 0; k < h.bins(); ++k) {
        os << fmt(h.center(k)) << ',' << fmt(h.density(k)) << ',' << fmt(h.density_error(k)) << '\n';
    }
}

}  // namespace gkin
