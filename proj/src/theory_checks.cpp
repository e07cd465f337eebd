#include "gkin/theory_checks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>

#include "gkin/constants.hpp"
#include "gkin/errors.hpp"
#include "gkin/random.hpp"

namespace gkin {

namespace {

std::string fmt(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// x^p (1 + h/x)^p - x^p without cancellation, x > 0, h >= -x
double power_increment(double x, double h, double p) {
    if (x == 0.0) return std::pow(h, p);
    return std::pow(x, p) * std::expm1(p * std::log1p(h / x));
}

double relative(double slack, double scale) {
    return scale > 0.0 ? slack / scale : slack;
}

double max_abs(std::initializer_list<double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

struct Tracker {
    SuiteReport report;
    void record(double margin, bool ok, const std::string& what) {
        ++report.samples;
        if (!ok) ++report.violations;
        if (report.samples == 1 || margin < report.worst_margin) {
            report.worst_margin = margin;
            report.worst_case = what;
        }
    }
};

std::vector<double> random_direction(int dim, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> x(static_cast<std::size_t>(dim));
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& c : x) {
            c = g(rng);
            n2 += c * c;
        }
    } while (n2 < 1e-20);
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : x) c *= inv;
    return x;
}

// speed spread over four decades
Velocity random_velocity(int dim, Rng& rng) {
    const double r = std::pow(10.0, -2.0 + 3.7 * uniform01(rng));
    auto d = random_direction(dim, rng);
    for (double& c : d) c *= r;
    return Velocity(std::move(d));
}

AngularParam random_sigma(int dim, Rng& rng) {
    auto d = random_direction(dim, rng);
    // unit within rounding; rescale once more so the constructor's check passes
    double n2 = 0.0;
    for (double c : d) n2 += c * c;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : d) c *= inv;
    return AngularParam(std::move(d));
}

ConvexTestFunction random_psi(Rng& rng, double p_lo, double p_hi, bool allow_truncated) {
    const double p = p_lo + (p_hi - p_lo) * uniform_open0(rng);
    const auto kinds = allow_truncated ? 3u : 2u;
    switch (uniform_index(rng, kinds)) {
        case 0: return ConvexTestFunction::power(p);
        case 1: return ConvexTestFunction::shifted(p);
        default: return ConvexTestFunction::truncated(p, std::pow(10.0, -1.0 + 3.0 * uniform01(rng)));
    }
}

constexpr std::uint64_t kChunk = 4096;

}  // namespace

ConvexTestFunction::ConvexTestFunction(Kind kind, double p, double K) : kind_(kind), p_(p), K_(K) {
    if (!(p > 1.0) || !std::isfinite(p)) throw InvalidParameter("test function exponent must exceed 1");
    if (kind == Kind::truncated && !(K > 0.0 && std::isfinite(K)))
        throw InvalidParameter("truncation level K must be positive");
}

ConvexTestFunction ConvexTestFunction::power(double p) { return {Kind::power, p, 0.0}; }
ConvexTestFunction ConvexTestFunction::shifted(double p) { return {Kind::shifted, p, 0.0}; }
ConvexTestFunction ConvexTestFunction::truncated(double p, double K) { return {Kind::truncated, p, K}; }

std::string ConvexTestFunction::name() const {
    switch (kind_) {
        case Kind::power: return "power(p=" + fmt(p_) + ")";
        case Kind::shifted: return "shifted(p=" + fmt(p_) + ")";
        case Kind::truncated: break;
    }
    return "truncated(p=" + fmt(p_) + ",K=" + fmt(K_) + ")";
}

double ConvexTestFunction::value(double x) const {
    switch (kind_) {
        case Kind::power: return std::pow(x, p_);
        case Kind::shifted: return std::expm1(p_ * std::log1p(x));
        case Kind::truncated: break;
    }
    if (x <= K_) return std::pow(x, p_);
    return std::pow(K_, p_) + p_ * std::pow(K_, p_ - 1.0) * (x - K_);
}

double ConvexTestFunction::d1(double x) const {
    switch (kind_) {
        case Kind::power: return p_ * std::pow(x, p_ - 1.0);
        case Kind::shifted: return p_ * std::pow(1.0 + x, p_ - 1.0);
        case Kind::truncated: break;
    }
    return p_ * std::pow(std::min(x, K_), p_ - 1.0);
}

double ConvexTestFunction::d2(double x) const {
    switch (kind_) {
        case Kind::power: return p_ * (p_ - 1.0) * std::pow(x, p_ - 2.0);
        case Kind::shifted: return p_ * (p_ - 1.0) * std::pow(1.0 + x, p_ - 2.0);
        case Kind::truncated: break;
    }
    return x < K_ ? p_ * (p_ - 1.0) * std::pow(x, p_ - 2.0) : 0.0;
}

double ConvexTestFunction::increment(double x, double h) const {
    switch (kind_) {
        case Kind::power: return power_increment(x, h, p_);
        case Kind::shifted: return power_increment(1.0 + x, h, p_);
        case Kind::truncated: break;
    }
    const double slope = p_ * std::pow(K_, p_ - 1.0);
    if (x >= K_) return slope * h;
    if (x + h <= K_) return power_increment(x, h, p_);
    return power_increment(x, K_ - x, p_) + slope * (x + h - K_);
}

double ConvexTestFunction::eta1(double a) const { return std::pow(a, p_ - 1.0); }

double ConvexTestFunction::eta2(double a) const { return std::pow(a, std::max(p_ - 2.0, 0.0)); }

ElementaryCheck check_elementary(const ConvexTestFunction& psi, double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw InvalidParameter("check_elementary needs x, y > 0");
    ElementaryCheck r;
    const double psi_y = psi.value(y);
    r.lhs = psi.increment(x, y) - psi_y;
    r.upper = psi.A() * (x * psi.d1(y) + y * psi.d1(x));
    r.lower = psi.b() * x * y * psi.d2(x + y);
    const double scale = max_abs({psi.value(x + y), r.upper, r.lower});
    r.upper_margin = relative(r.upper - r.lhs, scale);
    r.lower_margin = relative(r.lhs - r.lower, scale);
    r.pass = r.upper_margin >= -tol::kInequality && r.lower_margin >= -tol::kInequality;
    return r;
}

SplitCheck check_povzner_split(const Velocity& v, const Velocity& v_star,
                               const AngularParam& sigma, const CollisionParams& params,
                               const ConvexTestFunction& psi) {
    SplitCheck r;
    const auto [vp, vsp] = post_collision(v, v_star, sigma, params);
    const double x = v.norm_squared(), y = v_star.norm_squared();
    const double a = vp.norm_squared(), b = vsp.norm_squared();
    const double E = x + y;
    const double loss = energy_loss(v, v_star, sigma, params);  // <= 0

    r.q = psi.value(a) + psi.value(b) - psi.value(x) - psi.value(y);
    r.p = psi.increment(x, y) - psi.value(y);
    r.n = psi.increment(a + b, -loss) + psi.increment(a, b) - psi.value(b);
    r.p_bound = psi.A() * (x * psi.d1(y) + y * psi.d1(x));

    const auto dim = static_cast<std::size_t>(v.dimension());
    std::vector<double> u(dim), w(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        u[k] = v.components()[k] - v_star.components()[k];
        w[k] = v.components()[k] + v_star.components()[k];
    }
    const double un = std::sqrt(detail::dot(u, u));
    const double wn = std::sqrt(detail::dot(w, w));
    const double beta = params.beta();
    const auto s = sigma.components();

    if (un > 0.0) {
        std::vector<double> lw(dim);  // lambda omega
        for (std::size_t k = 0; k < dim; ++k) lw[k] = beta * s[k] + (1.0 - beta) * u[k] / un;
        r.lambda_direct = std::sqrt(detail::dot(lw, lw));
        double cos_chi = 0.0;
        for (std::size_t k = 0; k < dim; ++k) cos_chi += (u[k] / un) * lw[k];
        cos_chi = std::clamp(cos_chi / r.lambda_direct, -1.0, 1.0);
        r.lambda = lambda_of_angle(cos_chi, params);
        if (wn > 0.0) {
            const double cos_mu = detail::dot(w, lw) / (wn * r.lambda_direct);
            r.sin2_mu = std::max(0.0, 1.0 - cos_mu * cos_mu);
        }
    }
    const double lam = r.lambda_direct;
    r.kappa = 0.25 * psi.b() * lam * lam * r.sin2_mu / psi.eta2(1.0 / (lam * lam));
    r.n_bound = r.kappa * E * E * psi.d2(E);

    const double scale = max_abs({psi.value(E), r.p_bound, r.n_bound});
    r.p_margin = relative(r.p_bound - r.p, scale);
    r.n_margin = relative(r.n - r.n_bound, scale);
    const double lam_a = r.lambda - params.alpha();
    const double lam_e = relative((a + b) - r.lambda * r.lambda * E, E);
    r.lambda_margin = std::min(lam_a, lam_e);
    const bool lambda_ok = r.lambda_margin >= -tol::kInequality &&
                           std::abs(r.lambda - r.lambda_direct) <= tol::kRoundTrip;
    r.pass = lambda_ok && r.p_margin >= -tol::kInequality && r.n_margin >= -tol::kInequality;
    return r;
}

namespace {

struct QuadratureSums {
    double q_bar = 0.0;
    double k_hat = 0.0;
};

QuadratureSums integrate_event(double x, double y, double un, double wn, double w_nu,
                               double w_perp, const CollisionParams& params,
                               const ConvexTestFunction& psi, const SphereQuadrature& quad) {
    QuadratureSums out;
    const double beta = params.beta();
    const double base = psi.value(x) + psi.value(y);
    const double w2 = wn * wn;
    const double u2 = un * un;
    const double b_over_4 = 0.25 * psi.b();
    for (const auto& node : quad.nodes()) {
        const double sigma_w = node.c0 * w_nu + node.c1 * w_perp;
        // u' = (1 - beta) u + beta |u| sigma
        const double up_w = (1.0 - beta) * un * w_nu + beta * un * sigma_w;
        const double lam2 = (1.0 - beta) * (1.0 - beta) + 2.0 * beta * (1.0 - beta) * node.c0 +
                            beta * beta;
        const double up2 = lam2 * u2;
        const double a = 0.25 * (w2 + 2.0 * up_w + up2);
        const double b = 0.25 * (w2 - 2.0 * up_w + up2);
        const double q = psi.value(std::max(a, 0.0)) + psi.value(std::max(b, 0.0)) - base;

        double sin2 = 1.0;
        if (wn > 0.0 && un > 0.0) {
            // lambda omega . w = beta sigma.w + (1 - beta) nu.w
            const double cos_mu = (beta * sigma_w + (1.0 - beta) * w_nu) / (wn * std::sqrt(lam2));
            sin2 = std::max(0.0, 1.0 - cos_mu * cos_mu);
        }
        const double kappa = un > 0.0 ? b_over_4 * lam2 * sin2 / psi.eta2(1.0 / lam2) : b_over_4;
        out.q_bar += node.weight * q;
        out.k_hat += node.weight * kappa;
    }
    return out;
}

}  // namespace

IntegratedCheck check_povzner_integrated(const Velocity& v, const Velocity& v_star,
                                         const CollisionParams& params,
                                         const ConvexTestFunction& psi,
                                         const SphereQuadrature& quad,
                                         const SphereQuadrature* refined) {
    if (psi.kind() == ConvexTestFunction::Kind::truncated)
        throw InvalidParameter("integrated check takes the power or shifted test function");
    if (quad.dimension() != v.dimension())
        throw InvalidParameter("quadrature dimension does not match the velocities");
    const auto dim = static_cast<std::size_t>(v.dimension());
    std::vector<double> u(dim), w(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        u[k] = v.components()[k] - v_star.components()[k];
        w[k] = v.components()[k] + v_star.components()[k];
    }
    const double un = std::sqrt(detail::dot(u, u));
    const double wn = std::sqrt(detail::dot(w, w));
    double w_nu = 0.0, w_perp = 0.0;
    if (un > 0.0) {
        w_nu = detail::dot(w, u) / un;
        w_perp = std::sqrt(std::max(0.0, wn * wn - w_nu * w_nu));
    }
    const double x = v.norm_squared(), y = v_star.norm_squared();
    const double E = x + y;

    IntegratedCheck r;
    const auto sums = integrate_event(x, y, un, wn, w_nu, w_perp, params, psi, quad);
    r.q_bar = sums.q_bar;
    r.k_hat = sums.k_hat;
    const double tail = E * E * psi.d2(E);
    r.lhs = r.q_bar + r.k_hat * tail;
    r.rhs = psi.A() * (x * psi.d1(y) + y * psi.d1(x));
    const double scale = max_abs({psi.value(E), r.rhs, r.k_hat * tail});
    r.margin = relative(r.rhs - r.lhs, scale);
    r.pass = r.margin >= -tol::kInequality;
    if (refined) {
        const auto fine = integrate_event(x, y, un, wn, w_nu, w_perp, params, psi, *refined);
        r.convergence_checked = true;
        r.convergence_error = relative(std::max(std::abs(fine.q_bar - sums.q_bar),
                                                std::abs(fine.k_hat - sums.k_hat) * tail),
                                       scale);
        r.converged = r.convergence_error <= 1e-6;
    }
    return r;
}

double gaussian_jap_moment(double r, int dimension) {
    if (dimension < 1) throw InvalidParameter("dimension must be positive");
    if (r == 0.0) return 1.0;
    struct Params {
        double r;
        int n;
        double log_norm;
    } prm{r, dimension, -(0.5 * dimension - 1.0) * std::numbers::ln2 - gsl_sf_lngamma(0.5 * dimension)};
    gsl_function f;
    f.function = [](double rho, void* vp) {
        const auto* q = static_cast<const Params*>(vp);
        if (rho == 0.0) return q->n == 1 ? std::exp(q->log_norm) : 0.0;
        return std::exp(0.5 * q->r * std::log1p(rho * rho) + (q->n - 1) * std::log(rho) -
                        0.5 * rho * rho + q->log_norm);
    };
    f.params = &prm;
    auto* ws = gsl_integration_workspace_alloc(1000);
    double result = 0.0, err = 0.0;
    const auto old = gsl_set_error_handler_off();
    const int status = gsl_integration_qagiu(&f, 0.0, 0.0, 1e-12, 1000, ws, &result, &err);
    gsl_set_error_handler(old);
    gsl_integration_workspace_free(ws);
    if (status != GSL_SUCCESS && err > 1e-9 * std::abs(result))
        throw NumericalFailure("radial quadrature did not converge");
    return result;
}

double gaussian_laplacian_oracle(double s, int dimension) {
    if (!(s >= 0.0)) throw InvalidParameter("order must be >= 0");
    const double c1 = s * (s - 2.0) + s * dimension;
    const double c2 = s * (s - 2.0);
    double out = 0.0;
    if (c1 != 0.0) out += c1 * gaussian_jap_moment(s - 2.0, dimension);
    if (c2 != 0.0) out -= c2 * gaussian_jap_moment(s - 4.0, dimension);
    return out;
}

double laplacian_jap_power(double s, int dimension, double v2) {
    const double c1 = s * (s - 2.0) + s * dimension;
    const double c2 = s * (s - 2.0);
    double out = 0.0;
    if (c1 != 0.0) out += c1 * std::pow(1.0 + v2, 0.5 * (s - 2.0));
    if (c2 != 0.0) out -= c2 * std::pow(1.0 + v2, 0.5 * (s - 4.0));
    return out;
}

SuiteReport run_elementary_suite(std::uint64_t seed, std::uint64_t samples) {
    Tracker t;
    t.report.name = "elementary";
    for (std::uint64_t start = 0; start < samples; start += kChunk) {
        auto rng = make_stream(seed, {0xE1, start / kChunk});
        for (std::uint64_t i = start; i < std::min(samples, start + kChunk); ++i) {
            const auto psi = random_psi(rng, 1.0, 4.0, true);
            const double x = 100.0 * uniform_open0(rng);
            const double y = 100.0 * uniform_open0(rng);
            const auto c = check_elementary(psi, x, y);
            t.record(std::min(c.upper_margin, c.lower_margin), c.pass,
                     psi.name() + " x=" + fmt(x) + " y=" + fmt(y));
        }
    }
    return t.report;
}

SuiteReport run_split_suite(std::uint64_t seed, std::uint64_t samples) {
    Tracker t;
    t.report.name = "povzner_split";
    for (std::uint64_t start = 0; start < samples; start += kChunk) {
        auto rng = make_stream(seed, {0xE2, start / kChunk});
        for (std::uint64_t i = start; i < std::min(samples, start + kChunk); ++i) {
            const double alpha = 0.1 + 0.9 * uniform01(rng);
            const CollisionParams params(std::min(alpha, 1.0), 3);
            const auto psi = random_psi(rng, 1.0, 3.0, true);
            const auto v = random_velocity(3, rng);
            const auto vs = random_velocity(3, rng);
            const auto sigma = random_sigma(3, rng);
            const auto c = check_povzner_split(v, vs, sigma, params, psi);
            t.record(std::min({c.p_margin, c.n_margin, c.lambda_margin}), c.pass,
                     psi.name() + " alpha=" + fmt(params.alpha()) + " |v|^2=" +
                         fmt(v.norm_squared()) + " |v*|^2=" + fmt(vs.norm_squared()));
        }
    }
    return t.report;
}

SuiteReport run_integrated_suite(std::uint64_t seed, std::uint64_t samples,
                                 std::uint64_t refine_every) {
    Tracker t;
    t.report.name = "povzner_integrated";
    const SphereQuadrature quad(3, 64, 64);
    const SphereQuadrature fine(3, 128, 128);
    for (std::uint64_t start = 0; start < samples; start += kChunk) {
        auto rng = make_stream(seed, {0xE3, start / kChunk});
        for (std::uint64_t i = start; i < std::min(samples, start + kChunk); ++i) {
            const double alpha = 0.1 + 0.9 * uniform01(rng);
            const CollisionParams params(std::min(alpha, 1.0), 3);
            const auto psi = random_psi(rng, 1.0, 3.0, false);
            const auto v = random_velocity(3, rng);
            const auto vs = random_velocity(3, rng);
            const bool refine = refine_every > 0 && i % refine_every == 0;
            const auto c = check_povzner_integrated(v, vs, params, psi, quad, refine ? &fine : nullptr);
            t.record(c.margin, c.pass,
                     psi.name() + " alpha=" + fmt(params.alpha()) + " |v|^2=" +
                         fmt(v.norm_squared()) + " |v*|^2=" + fmt(vs.norm_squared()));
            if (c.convergence_checked && !c.converged) ++t.report.unconverged;
        }
    }
    return t.report;
}

SuiteReport run_truncated_function_checks(std::uint64_t seed, std::uint64_t samples) {
    Tracker t;
    t.report.name = "test_function_conditions";
    auto rng = make_stream(seed, {0xE4});
    for (std::uint64_t i = 0; i < samples; ++i) {
        const auto psi = random_psi(rng, 1.0, 4.0, true);
        const double p = psi.p();
        const double x = std::pow(10.0, -2.0 + 4.0 * uniform01(rng));
        const double a = 1.0 + 3.0 * uniform01(rng);
        double margin = std::numeric_limits<double>::infinity();
        const double fx = psi.value(x);
        margin = std::min(margin, fx >= 0.0 ? 1.0 : -1.0);
        // multiplier bounds on psi' and psi''
        margin = std::min(margin, relative(psi.eta1(a) * psi.d1(x) - psi.d1(a * x), psi.d1(a * x)));
        const double d2ax = psi.d2(a * x);
        margin = std::min(margin, relative(psi.eta2(a) * psi.d2(x) - d2ax, std::max(d2ax, 1e-300)));
        margin = std::min(margin, psi.d2(x) >= 0.0 ? 1.0 : -1.0);
        // psi' nondecreasing
        margin = std::min(margin, relative(psi.d1(a * x) - psi.d1(x), psi.d1(a * x)));
        std::string what = psi.name() + " x=" + fmt(x) + " a=" + fmt(a);

        if (psi.kind() == ConvexTestFunction::Kind::truncated) {
            const double K = psi.K();
            // C^1 at K
            const double left = p * std::pow(K, p - 1.0);
            margin = std::min(margin, -relative(std::abs(psi.d1(K * (1 - 1e-12)) - left), left) + 1e-9);
            margin = std::min(margin, -relative(std::abs(psi.d1(K * (1 + 1e-12)) - left), left) + 1e-9);
            // monotone in K, and exact below K
            const auto wider = ConvexTestFunction::truncated(p, 2.0 * K);
            margin = std::min(margin, relative(wider.value(x) - fx, wider.value(x)));
            const auto huge = ConvexTestFunction::truncated(p, 1e6 * std::max(x, K));
            margin = std::min(margin, -relative(std::abs(huge.value(x) - std::pow(x, p)),
                                                std::pow(x, p)) + 1e-12);
            // bounded psi'' for p >= 2
            if (p >= 2.0) {
                const double cap = p * (p - 1.0) * std::pow(K, p - 2.0);
                margin = std::min(margin, relative(cap - psi.d2(x), cap));
            }
        }
        const bool ok = margin >= -tol::kInequality;
        t.record(margin, ok, what);
    }
    return t.report;
}

}  // namespace gkin
