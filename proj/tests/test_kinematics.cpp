#include <doctest.h>

#include <cmath>

#include "gkin/constants.hpp"
#include "gkin/errors.hpp"
#include "gkin/kinematics.hpp"
#include "gkin/random.hpp"

using namespace gkin;

namespace {

std::vector<double> random_unit(int n, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> x(static_cast<std::size_t>(n));
    double s = 0;
    for (double& c : x) {
        c = g(rng);
        s += c * c;
    }
    for (double& c : x) c /= std::sqrt(s);
    return x;
}

Velocity random_velocity(int n, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& c : x) c = g(rng);
    return Velocity(x);
}

double energy(const Velocity& a, const Velocity& b) { return a.norm_squared() + b.norm_squared(); }

}  // namespace

TEST_CASE("parameters") {
    CollisionParams p(0.5, 3);
    CHECK(p.beta() == doctest::Approx(0.75));
    CHECK(p.gamma() == doctest::Approx(1.5));
    CHECK(p.gamma() * p.alpha() == doctest::Approx(p.beta()));
    CHECK_THROWS_AS(CollisionParams(0.0, 3), InvalidParameter);
    CHECK_THROWS_WITH(CollisionParams(1.2, 3), "alpha must lie in (0,1]");
    CHECK_THROWS_AS(CollisionParams(0.5, 1), InvalidParameter);
    CHECK_THROWS_AS(AngularParam({1.0, 1e-3, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(Velocity({1.0, NAN}), InvalidParameter);
}

TEST_CASE("hand-evaluated head-on collision") {
    CollisionParams p(0.5, 3);
    Velocity v{1, 0, 0}, vs{-1, 0, 0};
    AngularParam s{0, 1, 0};
    auto [a, b] = post_collision(v, vs, s, p);
    CHECK(a[0] == doctest::Approx(0.25));
    CHECK(a[1] == doctest::Approx(0.75));
    CHECK(b[0] == doctest::Approx(-0.25));
    CHECK(b[1] == doctest::Approx(-0.75));
    CHECK(energy(a, b) - energy(v, vs) == doctest::Approx(-0.75));
    CHECK(energy_loss(v, vs, s, p) == doctest::Approx(-0.75));
}

TEST_CASE("no-op cases") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        auto v = random_velocity(3, rng), vs = random_velocity(3, rng);
        std::vector<double> nu(3);
        double un = std::sqrt((v[0] - vs[0]) * (v[0] - vs[0]) + (v[1] - vs[1]) * (v[1] - vs[1]) +
                              (v[2] - vs[2]) * (v[2] - vs[2]));
        for (int k = 0; k < 3; ++k) nu[static_cast<std::size_t>(k)] = (v[k] - vs[k]) / un;
        AngularParam s(nu);
        CollisionParams p(0.3, 3);
        auto [a, b] = post_collision(v, vs, s, p);
        for (int k = 0; k < 3; ++k) {
            CHECK(a[k] == doctest::Approx(v[k]).epsilon(1e-12));
            CHECK(b[k] == doctest::Approx(vs[k]).epsilon(1e-12));
        }
        CHECK(std::abs(energy_loss(v, vs, s, p)) < 1e-12);
    }
    Velocity v{0.3, -0.2, 1.0};
    auto [a, b] = post_collision(v, v, AngularParam{0, 0, 1}, CollisionParams(0.5, 3));
    CHECK(a == v);
    CHECK(b == v);
}

TEST_CASE("elastic limit") {
    Rng rng(4);
    CollisionParams p(1.0, 3);
    for (int i = 0; i < 1000; ++i) {
        auto v = random_velocity(3, rng), vs = random_velocity(3, rng);
        AngularParam s(random_unit(3, rng));
        auto [a, b] = post_collision(v, vs, s, p);
        CHECK(energy(a, b) == doctest::Approx(energy(v, vs)).epsilon(1e-12));
        CHECK(energy_loss(v, vs, s, p) == 0.0);
        auto [c, d] = pre_collision(v, vs, s, p);
        for (int k = 0; k < 3; ++k) CHECK(c[k] == doctest::Approx(a[k]).epsilon(1e-12));
    }
}

TEST_CASE("momentum and energy identity, randomized") {
    Rng rng(5);
    for (int n : {2, 3}) {
        for (int ai = 1; ai <= 10; ++ai) {
            CollisionParams p(ai / 10.0, n);
            for (int i = 0; i < 1000; ++i) {
                auto v = random_velocity(n, rng), vs = random_velocity(n, rng);
                AngularParam s(random_unit(n, rng));
                auto [a, b] = post_collision(v, vs, s, p);
                double wmax = 1.0;
                for (int k = 0; k < n; ++k) wmax = std::max(wmax, std::abs(v[k] + vs[k]));
                for (int k = 0; k < n; ++k)
                    CHECK(std::abs(a[k] + b[k] - v[k] - vs[k]) <= tol::kExactAlgebra * wmax);
                const double loss = energy_loss(v, vs, s, p);
                CHECK(loss <= 0.0);
                const double direct = energy(a, b) - energy(v, vs);
                CHECK(std::abs(direct - loss) <= tol::kExactAlgebra * std::max(1.0, energy(v, vs)));
            }
        }
    }
}

TEST_CASE("sigma and n representations") {
    std::vector<double> u{2, 0, 0};
    const double r = 1 / std::sqrt(2.0);
    auto s = sigma_from_n(u, std::vector<double>{r, r, 0});
    CHECK(s.components()[0] == doctest::Approx(0).epsilon(1e-15));
    CHECK(s.components()[1] == doctest::Approx(-1));
    auto head_on = sigma_from_n(u, std::vector<double>{1, 0, 0});
    CHECK(head_on.components()[0] == doctest::Approx(-1));
    CHECK_THROWS_AS(sigma_from_n(std::vector<double>{0, 0, 0}, std::vector<double>{1, 0, 0}),
                    InvalidParameter);
    CHECK_THROWS_AS(sigma_from_n(u, std::vector<double>{-1, 0, 0}), InvalidParameter);

    Rng rng(6);
    for (int i = 0; i < 2000; ++i) {
        auto v = random_velocity(3, rng), vs = random_velocity(3, rng);
        std::vector<double> uu{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
        auto n = random_unit(3, rng);
        double un = uu[0] * n[0] + uu[1] * n[1] + uu[2] * n[2];
        if (un < 0) {
            for (double& c : n) c = -c;
        }
        if (std::abs(un) < 1e-3) continue;
        CollisionParams p(0.7, 3);
        auto sig = sigma_from_n(uu, n);
        auto back = n_from_sigma(uu, sig);
        for (std::size_t k = 0; k < 3; ++k) CHECK(back[k] == doctest::Approx(n[k]).epsilon(1e-10));
        auto [a, b] = post_collision(v, vs, sig, p);
        auto [c, d] = post_collision_n(v, vs, n, p);
        for (int k = 0; k < 3; ++k) {
            CHECK(std::abs(a[k] - c[k]) <= 1e-12 * std::max(1.0, std::abs(c[k])) * 10);
            CHECK(std::abs(b[k] - d[k]) <= 1e-12 * std::max(1.0, std::abs(d[k])) * 10);
        }
        // inverse then direct with the same n is the identity
        auto [pv, pvs] = pre_collision_n(v, vs, n, p);
        auto [rv, rvs] = post_collision_n(pv, pvs, n, p);
        for (int k = 0; k < 3; ++k) {
            CHECK(rv[k] == doctest::Approx(v[k]).epsilon(tol::kRoundTrip).scale(1.0));
            CHECK(rvs[k] == doctest::Approx(vs[k]).epsilon(tol::kRoundTrip).scale(1.0));
        }
    }
}

TEST_CASE("inverse collision worked example") {
    CollisionParams p(0.5, 3);
    auto [a, b] = pre_collision_n(Velocity{1, 0, 0}, Velocity{-1, 0, 0}, std::vector<double>{1, 0, 0}, p);
    CHECK(a[0] == doctest::Approx(-2));
    CHECK(b[0] == doctest::Approx(2));
}

TEST_CASE("pre-collision sigma form undoes the post-collision in n form") {
    Rng rng(7);
    CollisionParams p(0.4, 3);
    for (int i = 0; i < 500; ++i) {
        auto v = random_velocity(3, rng), vs = random_velocity(3, rng);
        AngularParam s(random_unit(3, rng));
        auto [pv, pvs] = pre_collision(v, vs, s, p);
        std::vector<double> pu{pv[0] - pvs[0], pv[1] - pvs[1], pv[2] - pvs[2]};
        std::vector<double> u{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
        // the impact direction is along (pre-collision u) - u
        std::vector<double> n{pu[0] - u[0], pu[1] - u[1], pu[2] - u[2]};
        double nn = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        if (nn < 1e-6) continue;
        for (double& c : n) c /= nn;
        auto [rv, rvs] = post_collision_n(pv, pvs, n, p);
        for (int k = 0; k < 3; ++k) CHECK(rv[k] == doctest::Approx(v[k]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("lambda") {
    CollisionParams half(0.5, 3);
    CHECK(lambda_of_angle(1.0, half) == doctest::Approx(1.0));
    CHECK(lambda_of_angle(0.0, half) == doctest::Approx(std::sqrt(0.5)));
    CollisionParams el(1.0, 3);
    for (double c = -1; c <= 1; c += 0.1) CHECK(lambda_of_angle(c, el) == doctest::Approx(1.0));
    for (double alpha : {0.1, 0.5, 0.9}) {
        CollisionParams p(alpha, 3);
        for (int i = 0; i <= 10000; ++i) {
            const double c = -1.0 + 2.0 * i / 10000.0;
            const double l = lambda_of_angle(c, p);
            CHECK(l >= alpha - 1e-12);
            CHECK(l <= 1.0 + 1e-12);
        }
    }
    CHECK_THROWS_AS(lambda_of_angle(1.5, half), InvalidParameter);
}
