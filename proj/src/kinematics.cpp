#include "gkin/kinematics.hpp"

#include <cmath>
#include <string>

#include "gkin/constants.hpp"
#include "gkin/errors.hpp"

namespace gkin {

namespace {

void require_same_dimension(int a, int b, const char* what) {
    if (a != b) {
        throw InvalidParameter(std::string(what) + ": dimension mismatch (" +
                               std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

void require_dimension(const Velocity& v, const Velocity& v_star, int dim) {
    require_same_dimension(v.dimension(), dim, "velocity");
    require_same_dimension(v_star.dimension(), dim, "velocity");
}

// Generic update v' = w/2 + u'/2, v'_* = w/2 - u'/2 with u' = a u + c |u| e.
VelocityPair rotate_relative(const Velocity& v, const Velocity& v_star, double a, double c,
                             std::span<const double> e) {
    const auto n = static_cast<std::size_t>(v.dimension());
    const auto x = v.components();
    const auto y = v_star.components();
    double u2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) u2 += (x[i] - y[i]) * (x[i] - y[i]);
    if (u2 == 0.0) return {v, v_star};
    const double un = std::sqrt(u2);
    std::vector<double> out(n), out_star(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = x[i] + y[i];
        const double up = a * (x[i] - y[i]) + c * un * e[i];
        out[i] = 0.5 * (w + up);
        out_star[i] = 0.5 * (w - up);
    }
    return {Velocity(std::move(out)), Velocity(std::move(out_star))};
}

// u'' = u - k (u.n) n, returned as a velocity pair.
VelocityPair reflect_normal(const Velocity& v, const Velocity& v_star,
                            std::span<const double> n, double k) {
    const auto dim = static_cast<std::size_t>(v.dimension());
    const auto x = v.components();
    const auto y = v_star.components();
    double un = 0.0;
    for (std::size_t i = 0; i < dim; ++i) un += (x[i] - y[i]) * n[i];
    std::vector<double> out(dim), out_star(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double w = x[i] + y[i];
        const double up = (x[i] - y[i]) - k * un * n[i];
        out[i] = 0.5 * (w + up);
        out_star[i] = 0.5 * (w - up);
    }
    return {Velocity(std::move(out)), Velocity(std::move(out_star))};
}

void require_unit(std::span<const double> n, const char* what) {
    const double len = std::sqrt(detail::dot(n, n));
    if (!(std::abs(len - 1.0) <= tol::kUnitVector)) {
        throw InvalidParameter(std::string(what) + " must be a unit vector (|x| = " +
                               std::to_string(len) + ")");
    }
}

}  // namespace

namespace detail {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double collide_in_place(std::span<double> v, std::span<double> v_star,
                        std::span<const double> sigma, double beta) noexcept {
    const std::size_t n = v.size();
    double u2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) u2 += (v[i] - v_star[i]) * (v[i] - v_star[i]);
    if (u2 == 0.0) return 0.0;
    const double un = std::sqrt(u2);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = v[i] + v_star[i];
        const double up = (1.0 - beta) * (v[i] - v_star[i]) + beta * un * sigma[i];
        v[i] = 0.5 * (w + up);
        v_star[i] = 0.5 * (w - up);
    }
    return u2;
}

}  // namespace detail

Velocity::Velocity(std::vector<double> components) : c_(std::move(components)) {
    if (c_.size() < 2) throw InvalidParameter("velocity dimension must be at least 2");
    for (double x : c_) {
        if (!std::isfinite(x)) throw InvalidParameter("velocity components must be finite");
    }
}

Velocity::Velocity(std::initializer_list<double> components)
    : Velocity(std::vector<double>(components)) {}

double Velocity::norm_squared() const noexcept { return detail::dot(c_, c_); }

CollisionParams::CollisionParams(double alpha, int dimension) : dim_(dimension) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in (0,1]");
    if (dimension < 2) throw InvalidParameter("dimension must be at least 2");
    alpha_ = alpha;
    beta_ = 0.5 * (1.0 + alpha);
    gamma_ = (1.0 + alpha) / (2.0 * alpha);
}

AngularParam::AngularParam(std::vector<double> sigma) : s_(std::move(sigma)) {
    if (s_.size() < 2) throw InvalidParameter("sigma dimension must be at least 2");
    require_unit(s_, "sigma");
}

AngularParam::AngularParam(std::initializer_list<double> sigma)
    : AngularParam(std::vector<double>(sigma)) {}

VelocityPair post_collision(const Velocity& v, const Velocity& v_star,
                            const AngularParam& sigma, const CollisionParams& p) {
    require_dimension(v, v_star, p.dimension());
    require_same_dimension(sigma.dimension(), p.dimension(), "sigma");
    return rotate_relative(v, v_star, 1.0 - p.beta(), p.beta(), sigma.components());
}

VelocityPair pre_collision(const Velocity& v, const Velocity& v_star,
                           const AngularParam& sigma, const CollisionParams& p) {
    require_dimension(v, v_star, p.dimension());
    require_same_dimension(sigma.dimension(), p.dimension(), "sigma");
    return rotate_relative(v, v_star, 1.0 - p.gamma(), p.gamma(), sigma.components());
}

VelocityPair post_collision_n(const Velocity& v, const Velocity& v_star,
                              std::span<const double> n, const CollisionParams& p) {
    require_dimension(v, v_star, p.dimension());
    require_same_dimension(static_cast<int>(n.size()), p.dimension(), "n");
    require_unit(n, "n");
    return reflect_normal(v, v_star, n, 1.0 + p.alpha());
}

VelocityPair pre_collision_n(const Velocity& v, const Velocity& v_star,
                             std::span<const double> n, const CollisionParams& p) {
    require_dimension(v, v_star, p.dimension());
    require_same_dimension(static_cast<int>(n.size()), p.dimension(), "n");
    require_unit(n, "n");
    return reflect_normal(v, v_star, n, 1.0 + 1.0 / p.alpha());
}

double energy_loss(const Velocity& v, const Velocity& v_star, const AngularParam& sigma,
                   const CollisionParams& p) {
    require_dimension(v, v_star, p.dimension());
    require_same_dimension(sigma.dimension(), p.dimension(), "sigma");
    const auto x = v.components();
    const auto y = v_star.components();
    const auto s = sigma.components();
    double u2 = 0.0, us = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ui = x[i] - y[i];
        u2 += ui * ui;
        us += ui * s[i];
    }
    if (u2 == 0.0) return 0.0;
    const double nu_sigma = us / std::sqrt(u2);
    const double a = p.alpha();
    return -0.5 * (1.0 - a * a) * 0.5 * (1.0 - nu_sigma) * u2;
}

AngularParam sigma_from_n(std::span<const double> u, std::span<const double> n) {
    require_same_dimension(static_cast<int>(u.size()), static_cast<int>(n.size()), "n");
    require_unit(n, "n");
    const double un = std::sqrt(detail::dot(u, u));
    if (un == 0.0) throw InvalidParameter("relative velocity is zero: direction undefined");
    const double nu_n = detail::dot(u, n) / un;
    if (!(nu_n > 0.0)) throw InvalidParameter("impact direction must satisfy u.n > 0");
    std::vector<double> sigma(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) sigma[i] = u[i] / un - 2.0 * nu_n * n[i];
    // renormalize away the last ulp so the AngularParam invariant holds exactly
    const double len = std::sqrt(detail::dot(sigma, sigma));
    for (double& s : sigma) s /= len;
    return AngularParam(std::move(sigma));
}

std::vector<double> n_from_sigma(std::span<const double> u, const AngularParam& sigma) {
    const auto s = sigma.components();
    require_same_dimension(static_cast<int>(u.size()), sigma.dimension(), "sigma");
    const double un = std::sqrt(detail::dot(u, u));
    if (un == 0.0) throw InvalidParameter("relative velocity is zero: direction undefined");
    std::vector<double> n(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) n[i] = u[i] / un - s[i];
    const double len = std::sqrt(detail::dot(n, n));
    if (len == 0.0) throw InvalidParameter("sigma equals nu: impact direction undefined");
    for (double& x : n) x /= len;
    return n;
}

double lambda_of_angle(double cos_chi, const CollisionParams& p) {
    if (!(cos_chi >= -1.0 && cos_chi <= 1.0)) {
        throw InvalidParameter("cos_chi must lie in [-1,1]");
    }
    const double b = p.beta();
    const double disc = (1.0 - b) * (1.0 - b) * (cos_chi * cos_chi - 1.0) + b * b;
    if (disc < 0.0) throw InvalidParameter("negative discriminant in lambda(cos chi)");
    return (1.0 - b) * cos_chi + std::sqrt(disc);
}

}  // namespace gkin
