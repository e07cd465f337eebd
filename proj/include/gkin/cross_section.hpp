#pragma once

#include <span>
#include <vector>

#include "gkin/kinematics.hpp"
#include "gkin/random.hpp"

namespace gkin {

/// Hard-sphere angular kernel b(cos theta) on S^{N-1}, normalized to unit mass.
///
/// b = c_N ((1 - cos theta)/2)^{-(N-3)/2}. For N = 3 it is the constant 1/(4 pi);
/// for N = 2 it vanishes in the forward direction; for N >= 4 it has an
/// integrable singularity there. With t = (1 - cos theta)/2 the surface measure
/// turns the kernel into the density ((N-1)/2)(1 - t)^{(N-3)/2} on [0, 1].
class AngularKernel {
public:
    explicit AngularKernel(int dimension);

    int dimension() const noexcept { return dim_; }
    double normalization() const noexcept { return norm_; }
    double exponent() const noexcept { return -0.5 * (dim_ - 3); }

    /// Density with respect to the surface measure d sigma.
    double value(double cos_theta) const;

    /// Density of the polar angle theta in [0, pi]: b(cos theta) |S^{N-2}| sin^{N-2} theta.
    double polar_density(double theta) const;

private:
    int dim_;
    double norm_;
};

/// Surface area of the unit sphere S^{k} in R^{k+1}.
double sphere_area(int k);

double kernel_value(double cos_theta, int dimension);

/// Mean of (1 - nu.sigma)/2 under b, by Gauss-Legendre quadrature in theta.
double epsilon_N(int dimension);

/// Product quadrature for integrals of b(u, sigma) F(sigma) d sigma.
///
/// Nodes are expressed in an orthonormal frame (e0 = nu, e1, e2); an integrand
/// that depends on sigma only through sigma.e0 and sigma.e1 is integrated
/// exactly in the remaining directions. Weights sum to one.
class SphereQuadrature {
public:
    struct Node {
        double c0;  // sigma . e0 = cos theta
        double c1;  // sigma . e1
        double c2;  // sigma . e2 (>= 0)
        double weight;
    };

    SphereQuadrature(int dimension, int polar_nodes, int azimuth_nodes);

    int dimension() const noexcept { return dim_; }
    std::span<const Node> nodes() const noexcept { return nodes_; }

private:
    int dim_;
    std::vector<Node> nodes_;
};

/// Inverse-CDF sampler for sigma ~ b(u, sigma) d sigma.
///
/// N = 3 samples the sphere uniformly. Other dimensions invert a 4096-knot
/// table of the polar-angle CDF (linear interpolation, endpoints clamped) and
/// add a uniform direction in the hyperplane orthogonal to nu.
class SigmaSampler {
public:
    static constexpr int kTableKnots = 4096;

    explicit SigmaSampler(int dimension);

    int dimension() const noexcept { return kernel_.dimension(); }
    const AngularKernel& kernel() const noexcept { return kernel_; }

    /// Draws cos theta = nu.sigma.
    double sample_cos_theta(Rng& rng) const;

    /// Writes sigma into `out`; `nu` must be a unit vector of the same length.
    void sample(std::span<const double> nu, std::span<double> out, Rng& rng) const;

    /// Tabulated CDF of cos theta, for goodness-of-fit checks.
    double cdf_cos_theta(double cos_theta) const;

private:
    AngularKernel kernel_;
    std::vector<double> theta_;  // knots in [0, pi]
    std::vector<double> cdf_;    // P(Theta <= theta_k)
};

/// Convenience wrapper around a cached SigmaSampler for the given dimension.
AngularParam sample_sigma(std::span<const double> nu, int dimension, Rng& rng);

}  // namespace gkin
