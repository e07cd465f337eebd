#include <doctest.h>

#include <cmath>

#include "gkin/constants.hpp"
#include "gkin/errors.hpp"
#include "gkin/theory_checks.hpp"
#include "oracles.hpp"

using namespace gkin;

TEST_CASE("test-function constants") {
    auto sq = ConvexTestFunction::power(2.0);
    CHECK(sq.A() == doctest::Approx(2.0));
    CHECK(sq.b() == doctest::Approx(0.5));
    auto cube = ConvexTestFunction::power(3.0);
    CHECK(cube.A() == doctest::Approx(4.0));
    CHECK(cube.b() == doctest::Approx(0.25));
    auto soft = ConvexTestFunction::shifted(1.5);
    CHECK(soft.eta2(2.0) == 1.0);
    CHECK(soft.eta1(4.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(ConvexTestFunction::power(1.0), InvalidParameter);
    CHECK_THROWS_AS(ConvexTestFunction::truncated(2.0, 0.0), InvalidParameter);

    auto t = ConvexTestFunction::truncated(3.0, 2.0);
    CHECK(t.value(1.5) == doctest::Approx(3.375));
    CHECK(t.value(3.0) == doctest::Approx(8.0 + 12.0));
    CHECK(t.d1(3.0) == doctest::Approx(12.0));
    CHECK(t.d2(3.0) == 0.0);
    CHECK(soft.value(0.0) == 0.0);
    CHECK(soft.increment(3.0, 1e-12) == doctest::Approx(1.5 * 2.0 * 1e-12).epsilon(1e-9));
}

TEST_CASE("elementary inequality, worked example") {
    auto c = check_elementary(ConvexTestFunction::power(2.0), 1.0, 1.0);
    CHECK(c.lhs == doctest::Approx(2.0));
    CHECK(c.upper == doctest::Approx(8.0));
    CHECK(c.lower == doctest::Approx(1.0));
    CHECK(c.pass);
    CHECK(c.upper_margin > 0.0);
    CHECK(c.lower_margin > 0.0);
}

TEST_CASE("elementary inequality near y = 0") {
    for (double p : {1.1, 1.5, 2.0, 3.5}) {
        for (double x : {1e-3, 1.0, 50.0}) {
            for (auto psi : {ConvexTestFunction::power(p), ConvexTestFunction::shifted(p),
                             ConvexTestFunction::truncated(p, 10.0)}) {
                auto c = check_elementary(psi, x, 1e-8);
                CHECK(c.pass);
                CHECK(c.upper_margin >= -tol::kInequality);
                CHECK(c.lower_margin >= -tol::kInequality);
            }
        }
    }
}

TEST_CASE("split with an almost linear test function tracks the energy change") {
    Rng rng(1);
    std::normal_distribution<double> g;
    auto psi = ConvexTestFunction::power(1.0 + 1e-9);
    for (int i = 0; i < 500; ++i) {
        Velocity v{g(rng), g(rng), g(rng)}, vs{g(rng), g(rng), g(rng)};
        std::vector<double> s{g(rng), g(rng), g(rng)};
        const double n = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
        for (double& c : s) c /= n;
        CollisionParams p(0.2 + 0.8 * uniform01(rng), 3);
        auto c = check_povzner_split(v, vs, AngularParam(s), p, psi);
        const double de = energy_loss(v, vs, AngularParam(s), p);
        CHECK(c.q <= 1e-9);
        CHECK(c.q == doctest::Approx(de).epsilon(1e-6).scale(1e-8));
        CHECK(c.pass);
    }
}

TEST_CASE("split for an elastic no-op event") {
    Velocity v{1.0, 2.0, 0.5}, vs{-1.0, 0.0, 0.5};
    const double n = std::sqrt(8.0);
    AngularParam nu({2.0 / n, 2.0 / n, 0.0});
    for (auto psi : {ConvexTestFunction::power(2.0), ConvexTestFunction::shifted(1.3)}) {
        auto c = check_povzner_split(v, vs, nu, CollisionParams(1.0, 3), psi);
        CHECK(std::abs(c.q) < 1e-12);
        CHECK(c.pass);
        CHECK(c.p_margin > 0.0);
        CHECK(c.n_margin >= 0.0);
        CHECK(c.lambda == doctest::Approx(1.0));
    }
}

TEST_CASE("integrated inequality for small velocities") {
    SphereQuadrature quad(3, 64, 64);
    Velocity v{0.3, 0.5, -0.2}, vs{-0.6, 0.1, 0.4};
    for (auto psi : {ConvexTestFunction::power(1.5), ConvexTestFunction::shifted(1.5),
                     ConvexTestFunction::power(3.0)}) {
        auto c = check_povzner_integrated(v, vs, CollisionParams(0.5, 3), psi, quad);
        CHECK(c.pass);
        CHECK(c.k_hat >= 0.0);
        CHECK(std::isfinite(c.q_bar));
    }
    CHECK_THROWS_AS(check_povzner_integrated(v, vs, CollisionParams(0.5, 3),
                                             ConvexTestFunction::truncated(2.0, 1.0), quad),
                    InvalidParameter);
}

TEST_CASE("integrated inequality at large separation and over alpha") {
    SphereQuadrature quad(3, 64, 64), fine(3, 128, 128);
    Velocity v{50.0, 0.0, 0.0}, vs{0.0, 1.0, 0.0};
    auto psi = ConvexTestFunction::power(2.0);
    double floor = 1e300;
    for (int k = 1; k <= 9; ++k) {
        auto c = check_povzner_integrated(v, vs, CollisionParams(k / 10.0, 3), psi, quad, &fine);
        CHECK(c.q_bar < 0.0);
        CHECK(c.pass);
        CHECK(c.convergence_checked);
        CHECK(c.converged);
        floor = std::min(floor, c.k_hat);
    }
    CHECK(floor > 0.02);
}

TEST_CASE("Gaussian Laplacian oracle spot values") {
    CHECK(gaussian_laplacian_oracle(2.0, 3) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(gaussian_laplacian_oracle(0.0, 3) == 0.0);
    CHECK(gaussian_laplacian_oracle(4.0, 3) == doctest::Approx(72.0).epsilon(1e-10));
    CHECK(gaussian_jap_moment(2.0, 3) == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(gaussian_jap_moment(3.0, 5) == doctest::Approx(oracle::gaussian_jap(3.0, 5)).epsilon(1e-8));
}

TEST_CASE("randomized suites, small sample") {
    for (auto rep : {run_elementary_suite(5, 5000), run_split_suite(5, 5000),
                     run_integrated_suite(5, 300, 50), run_truncated_function_checks(5, 2000)}) {
        INFO(rep.name << " worst " << rep.worst_case);
        CHECK(rep.samples > 0);
        CHECK(rep.violations == 0);
        CHECK(rep.unconverged == 0);
        CHECK(rep.pass());
    }
}

TEST_CASE("suites are deterministic in the seed") {
    auto a = run_split_suite(9, 3000), b = run_split_suite(9, 3000), c = run_split_suite(10, 3000);
    CHECK(a.worst_margin == b.worst_margin);
    CHECK(a.worst_case == b.worst_case);
    CHECK(a.worst_margin != c.worst_margin);
}
