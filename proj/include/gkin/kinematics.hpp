#pragma once

#include <span>
#include <utility>
#include <vector>

namespace gkin {

/// Particle velocity in R^N, N >= 2, all components finite.
class Velocity {
public:
    Velocity() = default;
    explicit Velocity(std::vector<double> components);
    Velocity(std::initializer_list<double> components);

    int dimension() const noexcept { return static_cast<int>(c_.size()); }
    double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
    std::span<const double> components() const noexcept { return c_; }
    double norm_squared() const noexcept;

    friend bool operator==(const Velocity&, const Velocity&) = default;

private:
    std::vector<double> c_;
};

/// Restitution coefficient and the derived constants of the collision laws.
///
/// beta = (1 + alpha) / 2 scales the post-collision relative velocity,
/// gamma = (1 + alpha) / (2 alpha) scales the pre-collision one.
class CollisionParams {
public:
    /// Throws InvalidParameter unless 0 < alpha <= 1 and dimension >= 2.
    CollisionParams(double alpha, int dimension);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }
    int dimension() const noexcept { return dim_; }

private:
    double alpha_;
    double beta_;
    double gamma_;
    int dim_;
};

/// Unit vector sigma on S^{N-1} selecting the post-collision direction.
class AngularParam {
public:
    /// Throws InvalidParameter if | |sigma| - 1 | exceeds tol::kUnitVector.
    explicit AngularParam(std::vector<double> sigma);
    AngularParam(std::initializer_list<double> sigma);

    int dimension() const noexcept { return static_cast<int>(s_.size()); }
    std::span<const double> components() const noexcept { return s_; }

private:
    std::vector<double> s_;
};

using VelocityPair = std::pair<Velocity, Velocity>;

/// Post-collision velocities: u' = (1 - beta) u + beta |u| sigma, w conserved.
/// Identical inputs (u = 0) are returned unchanged.
VelocityPair post_collision(const Velocity& v, const Velocity& v_star,
                            const AngularParam& sigma, const CollisionParams& p);

/// Pre-collision velocities: 'u = (1 - gamma) u + gamma |u| sigma, w conserved.
VelocityPair pre_collision(const Velocity& v, const Velocity& v_star,
                           const AngularParam& sigma, const CollisionParams& p);

/// Direct collision with impact direction n: u' = u - (1 + alpha)(u.n) n.
VelocityPair post_collision_n(const Velocity& v, const Velocity& v_star,
                              std::span<const double> n, const CollisionParams& p);

/// Inverse collision with impact direction n: 'u = u - (1 + 1/alpha)(u.n) n.
VelocityPair pre_collision_n(const Velocity& v, const Velocity& v_star,
                             std::span<const double> n, const CollisionParams& p);

/// |v'|^2 + |v'_*|^2 - |v|^2 - |v_*|^2 in closed form:
/// -((1 - alpha^2)/2) ((1 - nu.sigma)/2) |u|^2.
double energy_loss(const Velocity& v, const Velocity& v_star,
                   const AngularParam& sigma, const CollisionParams& p);

/// Reflection sigma = nu - 2 (nu.n) n. Requires u != 0 and u.n > 0.
AngularParam sigma_from_n(std::span<const double> u, std::span<const double> n);

/// Inverse of sigma_from_n: n = (nu - sigma) / |nu - sigma|. Requires sigma != nu.
std::vector<double> n_from_sigma(std::span<const double> u, const AngularParam& sigma);

/// lambda(cos chi) = (1-beta) cos chi + sqrt((1-beta)^2 (cos^2 chi - 1) + beta^2),
/// the length factor of the post-collision relative velocity along omega.
double lambda_of_angle(double cos_chi, const CollisionParams& p);

namespace detail {

// In-place sigma-form collision on raw component spans of equal length.
// Returns |u|^2 before the collision (0 means the pair was left untouched).
double collide_in_place(std::span<double> v, std::span<double> v_star,
                        std::span<const double> sigma, double beta) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace detail

}  // namespace gkin
