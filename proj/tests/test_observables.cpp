#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gkin/engine.hpp"
#include "gkin/errors.hpp"
#include "gkin/observables.hpp"
#include "gkin/theory_checks.hpp"
#include "oracles.hpp"

using namespace gkin;

namespace {

Ensemble gaussian(std::size_t n, int dim, double temperature, std::uint64_t seed, double rho0 = 1.0) {
    Rng rng(seed);
    return init_ensemble({Maxwellian{temperature}, true}, dim, n, rho0, rng);
}

Ensemble scaled(Ensemble e, double eta) {
    for (double& x : e.velocities) x *= eta;
    return e;
}

double gaussian_entropy(int dim, double temperature, double rho0 = 1.0) {
    return -0.5 * dim * rho0 * (std::log(2.0 * std::numbers::pi * temperature) + 1.0) +
           rho0 * std::log(rho0);
}

}  // namespace

TEST_CASE("zeroth moment is the mass") {
    auto e = gaussian(1000, 3, 1.0, 1, 2.5);
    auto y0 = moment(e, 0.0);
    CHECK(y0.value == 2.5);
    CHECK(y0.std_err == 0.0);
    CHECK_THROWS_AS(moment(e, -1.0), InvalidParameter);
}

TEST_CASE("Gaussian second moment") {
    auto e = gaussian(200000, 3, 1.0, 2);
    auto y2 = moment(e, 2.0);
    // 1 + E|v|^2 = 1 + N T
    CHECK(std::abs(y2.value - 4.0) < 4.0 * y2.std_err);
    CHECK(y2.std_err > 0.0);
    CHECK(y2.value == doctest::Approx(1.0 + e.kinetic_energy()).epsilon(1e-12));
    for (double s : {3.0, 4.0, 6.0}) {
        auto y = moment(e, s);
        CHECK(std::abs(y.value - oracle::gaussian_jap(s, 3)) < 4.0 * y.std_err);
    }
}

TEST_CASE("two-point D3") {
    Rng rng(3);
    auto e = init_ensemble({TwoDelta{{1, 0, 0}, {-1, 0, 0}}, true}, 3, 1000, 1.0, rng);
    Rng prng(4);
    auto d3 = dissipation_functional(e, 100000, prng);
    CHECK(std::abs(d3.value - 4.0) < 4.0 * d3.std_err);
    CHECK_THROWS_AS(dissipation_functional(e, 100, prng), InvalidParameter);
}

TEST_CASE("Gaussian D3 against the chi-distribution oracle") {
    for (int dim : {2, 3}) {
        for (double temperature : {0.5, 2.0}) {
            auto e = gaussian(100000, dim, temperature, 5 + static_cast<std::uint64_t>(dim));
            Rng prng(6);
            auto d3 = dissipation_functional(e, 400000, prng);
            const double n = static_cast<double>(e.size());
            const double expected = oracle::gaussian_d3(temperature, dim) * (n - 1.0) / n;
            CHECK(std::abs(d3.value - expected) < 4.0 * d3.std_err);
        }
    }
}

TEST_CASE("D3 respects the Jensen lower bound") {
    Rng rng(7);
    std::vector<Ensemble> cases;
    cases.push_back(gaussian(20000, 3, 1.0, 8));
    cases.push_back(init_ensemble({UniformBall{2.0}, true}, 3, 20000, 1.0, rng));
    cases.push_back(init_ensemble({ParetoTail{4.5, 1.0}, true}, 3, 20000, 1.0, rng));
    cases.push_back(init_ensemble({TwoDelta{{1, 0}, {-1, 0}}, true}, 2, 2000, 3.0, rng));
    for (const auto& e : cases) {
        Rng prng(9);
        auto d3 = dissipation_functional(e, 200000, prng);
        // zero momentum: E|u|^2 = 2 E|v|^2 per unit mass, and E|u|^3 >= (E|u|^2)^{3/2}
        const double n = static_cast<double>(e.size());
        const double bound = e.rho0 * e.rho0 * (n - 1.0) / n *
                             std::pow(2.0 * e.kinetic_energy() / e.rho0 * n / (n - 1.0), 1.5);
        CHECK(d3.value + 4.0 * d3.std_err >= bound);
    }
}

TEST_CASE("entropy of a Gaussian and its decrease under diffusion") {
    auto e = gaussian(200000, 3, 1.0, 10);
    CHECK(entropy_estimate(e) == doctest::Approx(gaussian_entropy(3, 1.0)).epsilon(0.02));
    auto e2 = gaussian(200000, 2, 1.0, 10);
    CHECK(entropy_estimate(e2) == doctest::Approx(gaussian_entropy(2, 1.0)).epsilon(0.02));
    auto e5 = gaussian(200000, 5, 1.0, 10);
    CHECK(entropy_estimate(e5) == doctest::Approx(gaussian_entropy(5, 1.0)).epsilon(0.03));

    Rng rng(11);
    double prev = entropy_estimate(e);
    for (int k = 0; k < 10; ++k) {
        diffusion_step(e, 1.0, 0.1, rng);
        const double h = entropy_estimate(e);
        CHECK(h < prev);
        prev = h;
    }
    // heat kernel: temperature 1 + 2 mu t = 3
    CHECK(prev == doctest::Approx(gaussian_entropy(3, 3.0)).epsilon(0.02));
}

TEST_CASE("entropy shifts by -N rho0 log eta under velocity scaling") {
    for (int dim : {3, 4}) {
        auto e = gaussian(50000, dim, 1.0, 12, 2.0);
        const double h = entropy_estimate(e);
        for (double eta : {2.0, 0.5}) {
            const double hs = entropy_estimate(scaled(e, eta));
            CHECK(hs - h == doctest::Approx(-dim * e.rho0 * std::log(eta)).epsilon(1e-9));
        }
        const double h3 = entropy_estimate(scaled(e, 3.0));
        CHECK(h3 - h == doctest::Approx(-dim * e.rho0 * std::log(3.0)).epsilon(1e-3));
    }
    Ensemble degenerate{3, 1.0, 0.0, std::vector<double>(30, 1.0)};
    CHECK_THROWS_AS(entropy_estimate(degenerate), InvalidParameter);
}

TEST_CASE("Laplacian of the Japanese bracket") {
    Rng rng(13);
    for (int dim : {2, 3, 4}) {
        for (double s : {2.0, 3.0, 4.0, 6.0}) {
            for (int k = 0; k < 20; ++k) {
                std::vector<double> v(static_cast<std::size_t>(dim));
                std::normal_distribution<double> g(0.0, 1.5);
                double v2 = 0.0;
                for (double& c : v) {
                    c = g(rng);
                    v2 += c * c;
                }
                const double fd = oracle::fd_laplacian(s, v);
                CHECK(laplacian_jap_power(s, dim, v2) == doctest::Approx(fd).epsilon(1e-5));
            }
        }
    }
    CHECK(laplacian_jap_power(2.0, 3, 17.0) == 6.0);
}

TEST_CASE("Gaussian Laplacian moments") {
    CHECK(gaussian_laplacian_oracle(2.0, 3) == doctest::Approx(6.0).epsilon(1e-14));
    for (double s : {2.0, 4.0, 6.0}) {
        for (int dim : {2, 3}) {
            // same identity from the independent Simpson moments
            const double g2 = oracle::gaussian_jap(s - 2.0, dim);
            const double g4 = oracle::gaussian_jap(s - 4.0, dim);
            const double ref = (s * (s - 2.0) + s * dim) * g2 - s * (s - 2.0) * g4;
            CHECK(gaussian_laplacian_oracle(s, dim) == doctest::Approx(ref).epsilon(1e-8));
            CHECK(gaussian_jap_moment(s, dim) == doctest::Approx(oracle::gaussian_jap(s, dim)).epsilon(1e-8));
        }
        auto e = gaussian(200000, 3, 1.0, 14 + static_cast<std::uint64_t>(s));
        double sum = 0.0, sum2 = 0.0;
        const double n = static_cast<double>(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            double v2 = 0.0;
            for (double c : e.particle(i)) v2 += c * c;
            const double x = laplacian_jap_power(s, 3, v2);
            sum += x;
            sum2 += x * x;
        }
        const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
        CHECK(std::abs(mean - gaussian_laplacian_oracle(s, 3)) < 4.0 * se + 1e-12);
    }
}

TEST_CASE("time averages") {
    std::vector<double> c(100, 2.5);
    auto a = time_average(c);
    CHECK(a.value == doctest::Approx(2.5));
    CHECK(a.std_err == doctest::Approx(0.0));
    std::vector<double> ramp;
    for (int i = 0; i < 105; ++i) ramp.push_back(i);
    // the 5 oldest values are dropped
    CHECK(time_average(ramp).value == doctest::Approx(54.5));
    CHECK_THROWS_AS(time_average(std::vector<double>(5, 1.0)), InvalidParameter);
}

TEST_CASE("CSV output") {
    std::ostringstream hdr;
    write_csv_header(hdr);
    CHECK(hdr.str() == "t,Y0,px,py,pz,Y2,Y3,Y4,Y6,D3,D3_err,entropy,n_coll,accept_rate,majorant\n");

    SimConfig cfg;
    cfg.n_particles = 2000;
    cfg.t_end = 0.3;
    cfg.d3_pairs = 10000;
    cfg.moment_orders = {1.5};
    auto r = run(cfg);
    CHECK(r.series.orders == std::vector<double>{0, 1.5, 2, 3, 4, 6});
    CHECK_THROWS_AS(r.series.order_index(5.0), InvalidParameter);
    std::ostringstream os;
    write_csv(os, r.series);
    std::istringstream is(os.str());
    std::string line;
    std::size_t rows = 0;
    std::getline(is, line);
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 14);
    }
    CHECK(rows == r.series.records.size());
    CHECK(r.series.records.front().t == 0.0);
}
