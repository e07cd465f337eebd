#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gkin/cross_section.hpp"
#include "gkin/kinematics.hpp"

namespace gkin {

/// Convex test function psi on [0, inf) used in the moment inequalities.
///
/// power:     psi(x) = x^p
/// shifted:   psi(x) = (1 + x)^p - 1
/// truncated: psi(x) = x^p below K, continued linearly (C^1) above K
///
/// All three satisfy psi'(a x) <= eta1(a) psi'(x) and psi''(a x) <= eta2(a) psi''(x)
/// for a >= 1 with eta1(a) = a^{p-1} and eta2(a) = a^{max(p-2, 0)}. For p < 2
/// psi'' is nonincreasing, so eta2 = 1; a^{p-2} would also bound single ratios
/// but is decreasing in a, which the integral argument behind the lower bound
/// cannot use.
class ConvexTestFunction {
public:
    enum class Kind { power, shifted, truncated };

    static ConvexTestFunction power(double p);
    static ConvexTestFunction shifted(double p);
    static ConvexTestFunction truncated(double p, double K);

    Kind kind() const noexcept { return kind_; }
    double p() const noexcept { return p_; }
    double K() const noexcept { return K_; }
    std::string name() const;

    double value(double x) const;
    double d1(double x) const;
    double d2(double x) const;
    /// psi(x + h) - psi(x), evaluated without cancellation for small h.
    double increment(double x, double h) const;

    double eta1(double a) const;
    double eta2(double a) const;
    /// Upper constant A = eta1(2).
    double A() const { return eta1(2.0); }
    /// Lower constant b = 1 / (2 eta2(2)).
    double b() const { return 0.5 / eta2(2.0); }

private:
    ConvexTestFunction(Kind kind, double p, double K);
    Kind kind_;
    double p_;
    double K_;
};

/// Outcome of one inequality evaluation. Margins are (bound slack) divided by
/// the magnitude of the compared terms; negative beyond tol::kInequality fails.
struct ElementaryCheck {
    double lhs = 0.0;    // psi(x+y) - psi(x) - psi(y)
    double upper = 0.0;  // A (x psi'(y) + y psi'(x))
    double lower = 0.0;  // b x y psi''(x+y)
    double upper_margin = 0.0;
    double lower_margin = 0.0;
    bool pass = true;
};

ElementaryCheck check_elementary(const ConvexTestFunction& psi, double x, double y);

/// Per-event split q = p - n with the two bounds
///   p <= A (|v|^2 psi'(|v*|^2) + |v*|^2 psi'(|v|^2))
///   n >= kappa(lambda, mu) E^2 psi''(E),  E = |v|^2 + |v*|^2,
///   kappa = (b/4) lambda^2 sin^2(mu) / eta2(lambda^{-2}),
/// where lambda omega = beta sigma + (1 - beta) nu and mu is the angle between
/// w = v + v* and omega.
struct SplitCheck {
    double q = 0.0;
    double p = 0.0;
    double n = 0.0;
    double p_bound = 0.0;
    double n_bound = 0.0;
    double lambda = 1.0;         // from lambda_of_angle(cos chi)
    double lambda_direct = 1.0;  // |beta sigma + (1-beta) nu|
    double sin2_mu = 1.0;
    double kappa = 0.0;
    double p_margin = 0.0;
    double n_margin = 0.0;
    double lambda_margin = 0.0;  // min(lambda - alpha, E' - lambda^2 E) relative
    bool pass = true;
};

SplitCheck check_povzner_split(const Velocity& v, const Velocity& v_star,
                               const AngularParam& sigma, const CollisionParams& params,
                               const ConvexTestFunction& psi);

/// sigma-integrated form: q_bar + k_hat E^2 psi''(E) <= A (...), where
/// k_hat = integral of kappa b d sigma for this (v, v*), both by quadrature.
struct IntegratedCheck {
    double q_bar = 0.0;
    double k_hat = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool pass = true;
    /// Set when a node-doubling comparison was requested.
    bool convergence_checked = false;
    bool converged = true;
    double convergence_error = 0.0;
};

IntegratedCheck check_povzner_integrated(const Velocity& v, const Velocity& v_star,
                                         const CollisionParams& params,
                                         const ConvexTestFunction& psi,
                                         const SphereQuadrature& quad,
                                         const SphereQuadrature* refined = nullptr);

/// (s(s-2) + sN) G_{s-2} - s(s-2) G_{s-4}, G_r = integral of phi <v>^r for the
/// standard Gaussian phi on R^N, by radial quadrature.
double gaussian_laplacian_oracle(double s, int dimension);

/// G_r for the standard Gaussian, by radial quadrature.
double gaussian_jap_moment(double r, int dimension);

/// Laplacian of <v>^s as a function of |v|^2.
double laplacian_jap_power(double s, int dimension, double v2);

/// Summary of a randomized suite.
struct SuiteReport {
    std::string name;
    std::uint64_t samples = 0;
    std::uint64_t violations = 0;
    double worst_margin = 0.0;
    std::string worst_case;
    std::uint64_t unconverged = 0;
    bool pass() const { return violations == 0 && unconverged == 0; }
};

/// Random p in (1,4], x, y in (0,100] over all three test-function kinds.
SuiteReport run_elementary_suite(std::uint64_t seed, std::uint64_t samples);
/// Random events with alpha in [0.1,1], p in (1,3], N = 3.
SuiteReport run_split_suite(std::uint64_t seed, std::uint64_t samples);
/// Random (v, v*) with alpha in [0.1,1], p in (1,3], power and shifted psi, N = 3,
/// 64 x 64 nodes; every `refine_every`-th sample is re-done with doubled nodes.
SuiteReport run_integrated_suite(std::uint64_t seed, std::uint64_t samples,
                                 std::uint64_t refine_every = 100);
/// Grid checks of the truncated function: convexity, C^1 at K, monotone in K,
/// pointwise convergence to x^p, and the psi'' bound.
SuiteReport run_truncated_function_checks(std::uint64_t seed, std::uint64_t samples);

}  // namespace gkin
