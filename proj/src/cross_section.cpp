#include "gkin/cross_section.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "gkin/errors.hpp"

namespace gkin {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dimension(int dimension) {
    if (dimension < 2) throw InvalidParameter("kernel dimension must be at least 2");
}

// Gauss-Legendre nodes/weights on [a, b].
struct GaussLegendre {
    std::vector<double> x, w;
};

GaussLegendre gauss_legendre(int n, double a, double b) {
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
        table(gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n)),
              &gsl_integration_glfixed_table_free);
    GaussLegendre g;
    g.x.resize(static_cast<std::size_t>(n));
    g.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        gsl_integration_glfixed_point(a, b, static_cast<std::size_t>(i), &g.x[i], &g.w[i],
                                      table.get());
    }
    return g;
}

}  // namespace

double sphere_area(int k) {
    if (k < 0) throw InvalidParameter("sphere dimension must be nonnegative");
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

AngularKernel::AngularKernel(int dimension) : dim_(dimension) {
    require_dimension(dimension);
    // integral over the sphere of ((1-cos)/2)^{-(N-3)/2} equals 2^{N-1}|S^{N-2}|/(N-1)
    norm_ = (dimension - 1) / (std::pow(2.0, dimension - 1) * sphere_area(dimension - 2));
}

double AngularKernel::value(double cos_theta) const {
    if (!(cos_theta >= -1.0 && cos_theta <= 1.0)) {
        throw InvalidParameter("cos_theta must lie in [-1,1]");
    }
    if (dim_ == 3) return norm_;
    const double t = 0.5 * (1.0 - cos_theta);
    return norm_ * std::pow(t, exponent());
}

double AngularKernel::polar_density(double theta) const {
    // b(cos theta) |S^{N-2}| sin^{N-2}(theta) with the singular factors cancelled
    const double s = std::sin(0.5 * theta);
    const double c = std::cos(0.5 * theta);
    return 0.5 * (dim_ - 1) * s * std::pow(c, dim_ - 2);
}

double kernel_value(double cos_theta, int dimension) {
    return AngularKernel(dimension).value(cos_theta);
}

double epsilon_N(int dimension) {
    const AngularKernel kernel(dimension);
    const auto gl = gauss_legendre(64, 0.0, kPi);
    double sum = 0.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double th = gl.x[i];
        sum += gl.w[i] * 0.5 * (1.0 - std::cos(th)) * kernel.polar_density(th);
    }
    return sum;
}

SphereQuadrature::SphereQuadrature(int dimension, int polar_nodes, int azimuth_nodes)
    : dim_(dimension) {
    require_dimension(dimension);
    if (polar_nodes < 2 || azimuth_nodes < 2) {
        throw InvalidParameter("quadrature needs at least two nodes per angle");
    }
    const AngularKernel kernel(dimension);
    const auto polar = gauss_legendre(polar_nodes, 0.0, kPi);

    // Marginal of sigma.e1 on S^{N-2}: phi in [0, pi] with weight sin^{N-3}(phi).
    std::vector<double> phi_c, phi_s, phi_w;
    if (dimension == 2) {
        phi_c = {1.0, -1.0};
        phi_s = {0.0, 0.0};
        phi_w = {0.5, 0.5};
    } else {
        const auto az = gauss_legendre(azimuth_nodes, 0.0, kPi);
        double total = 0.0;
        for (std::size_t j = 0; j < az.x.size(); ++j) {
            const double wj = az.w[j] * std::pow(std::sin(az.x[j]), dimension - 3);
            phi_c.push_back(std::cos(az.x[j]));
            phi_s.push_back(std::sin(az.x[j]));
            phi_w.push_back(wj);
            total += wj;
        }
        for (double& w : phi_w) w /= total;
    }

    double total = 0.0;
    nodes_.reserve(polar.x.size() * phi_w.size());
    for (std::size_t i = 0; i < polar.x.size(); ++i) {
        const double th = polar.x[i];
        const double wt = polar.w[i] * kernel.polar_density(th);
        const double ct = std::cos(th), st = std::sin(th);
        for (std::size_t j = 0; j < phi_w.size(); ++j) {
            nodes_.push_back({ct, st * phi_c[j], st * phi_s[j], wt * phi_w[j]});
            total += wt * phi_w[j];
        }
    }
    for (auto& node : nodes_) node.weight /= total;
}

SigmaSampler::SigmaSampler(int dimension) : kernel_(dimension) {
    if (dimension == 3) return;
    theta_.resize(kTableKnots);
    cdf_.resize(kTableKnots);
    const double h = kPi / (kTableKnots - 1);
    const auto cell = gauss_legendre(4, 0.0, 1.0);
    cdf_[0] = 0.0;
    theta_[0] = 0.0;
    for (int k = 1; k < kTableKnots; ++k) {
        theta_[k] = k * h;
        double mass = 0.0;
        for (std::size_t q = 0; q < cell.x.size(); ++q) {
            mass += cell.w[q] * h * kernel_.polar_density((k - 1 + cell.x[q]) * h);
        }
        cdf_[k] = cdf_[k - 1] + mass;
    }
    theta_.back() = kPi;
    const double total = cdf_.back();
    for (double& F : cdf_) F /= total;
    cdf_.back() = 1.0;
}

double SigmaSampler::sample_cos_theta(Rng& rng) const {
    const double u = uniform01(rng);
    if (dimension() == 3) return 2.0 * u - 1.0;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return -1.0;
    const auto k = static_cast<std::size_t>(it - cdf_.begin());
    const double f0 = cdf_[k - 1], f1 = cdf_[k];
    const double frac = f1 > f0 ? (u - f0) / (f1 - f0) : 0.0;
    const double theta = theta_[k - 1] + frac * (theta_[k] - theta_[k - 1]);
    return std::cos(theta);
}

double SigmaSampler::cdf_cos_theta(double cos_theta) const {
    const double c = std::clamp(cos_theta, -1.0, 1.0);
    if (dimension() == 3) return 0.5 * (1.0 + c);
    const double theta = std::acos(c);
    // P(cos Theta <= c) = P(Theta >= theta)
    auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
    if (it == theta_.end()) return 0.0;
    const auto k = static_cast<std::size_t>(it - theta_.begin());
    const double frac = (theta - theta_[k - 1]) / (theta_[k] - theta_[k - 1]);
    const double F = cdf_[k - 1] + frac * (cdf_[k] - cdf_[k - 1]);
    return 1.0 - F;
}

void SigmaSampler::sample(std::span<const double> nu, std::span<double> out, Rng& rng) const {
    const int dim = dimension();
    if (dim == 3) {
        const double z = 2.0 * uniform01(rng) - 1.0;
        const double phi = 2.0 * kPi * uniform01(rng);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        out[0] = r * std::cos(phi);
        out[1] = r * std::sin(phi);
        out[2] = z;
        return;
    }
    const double c = sample_cos_theta(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    if (dim == 2) {
        const double sign = uniform01(rng) < 0.5 ? 1.0 : -1.0;
        out[0] = c * nu[0] - sign * s * nu[1];
        out[1] = c * nu[1] + sign * s * nu[0];
        return;
    }
    std::normal_distribution<double> gauss;
    const auto n = static_cast<std::size_t>(dim);
    for (;;) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = gauss(rng);
            proj += out[i] * nu[i];
        }
        double len2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] -= proj * nu[i];
            len2 += out[i] * out[i];
        }
        if (len2 > 1e-20) {
            const double inv = 1.0 / std::sqrt(len2);
            for (std::size_t i = 0; i < n; ++i) out[i] = c * nu[i] + s * out[i] * inv;
            return;
        }
    }
}

AngularParam sample_sigma(std::span<const double> nu, int dimension, Rng& rng) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const SigmaSampler>> cache;
    const SigmaSampler* sampler = nullptr;
    {
        std::lock_guard lock(mutex);
        auto& slot = cache[dimension];
        if (!slot) slot = std::make_unique<const SigmaSampler>(dimension);
        sampler = slot.get();
    }
    if (static_cast<int>(nu.size()) != dimension) {
        throw InvalidParameter("nu has the wrong dimension");
    }
    std::vector<double> out(nu.size());
    sampler->sample(nu, out, rng);
    const double len = std::sqrt(detail::dot(out, out));
    for (double& x : out) x /= len;
    return AngularParam(std::move(out));
}

}  // namespace gkin
