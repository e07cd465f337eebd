#include "gkin/ensemble.hpp"

#include <cmath>
#include <sstream>

#include "gkin/errors.hpp"

namespace gkin {

namespace {

void random_direction(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> gauss;
    for (;;) {
        double len2 = 0.0;
        for (double& x : out) {
            x = gauss(rng);
            len2 += x * x;
        }
        if (len2 > 1e-20) {
            const double inv = 1.0 / std::sqrt(len2);
            for (double& x : out) x *= inv;
            return;
        }
    }
}

struct Sampler {
    Ensemble& e;
    Rng& rng;

    void operator()(const Maxwellian& m) {
        if (!(m.temperature > 0.0)) throw InvalidParameter("maxwellian temperature must be > 0");
        std::normal_distribution<double> gauss(0.0, std::sqrt(m.temperature));
        for (double& x : e.velocities) x = gauss(rng);
    }

    void operator()(const UniformBall& b) {
        if (!(b.radius > 0.0)) throw InvalidParameter("uniform_ball radius must be > 0");
        for (std::size_t i = 0; i < e.size(); ++i) {
            auto v = e.particle(i);
            random_direction(v, rng);
            const double r = b.radius * std::pow(uniform01(rng), 1.0 / e.dimension);
            for (double& x : v) x *= r;
        }
    }

    void operator()(const TwoDelta& d) {
        const auto n = static_cast<std::size_t>(e.dimension);
        if (d.va.size() != n || d.vb.size() != n) {
            throw InvalidParameter("two_delta velocities must have the configured dimension");
        }
        for (std::size_t i = 0; i < e.size(); ++i) {
            const auto& src = (i % 2 == 0) ? d.va : d.vb;
            auto v = e.particle(i);
            for (std::size_t k = 0; k < n; ++k) v[k] = src[k];
        }
    }

    void operator()(const ParetoTail& p) {
        if (!(p.scale > 0.0)) throw InvalidParameter("pareto scale must be > 0");
        if (!(p.tail_index > 0.0)) throw InvalidParameter("pareto tail_index must be > 0");
        for (std::size_t i = 0; i < e.size(); ++i) {
            auto v = e.particle(i);
            random_direction(v, rng);
            const double r = p.scale * std::pow(uniform_open0(rng), -1.0 / p.tail_index);
            for (double& x : v) x *= r;
        }
    }
};

}  // namespace

void Ensemble::validate() const {
    if (dimension < 2) throw InvalidParameter("ensemble dimension must be at least 2");
    if (velocities.size() % static_cast<std::size_t>(dimension) != 0) {
        throw InvalidParameter("velocity array length is not a multiple of the dimension");
    }
    if (size() < 2) throw InvalidParameter("ensemble needs at least two particles");
    if (!(rho0 > 0.0)) throw InvalidParameter("ensemble mass must be positive");
    for (double x : velocities) {
        if (!std::isfinite(x)) throw InvalidParameter("non-finite velocity component");
    }
}

double Ensemble::kinetic_energy() const {
    CompensatedSum s;
    for (double x : velocities) s.add(x * x);
    return weight() * s.value();
}

std::vector<double> Ensemble::momentum() const {
    const auto n = static_cast<std::size_t>(dimension);
    std::vector<CompensatedSum> acc(n);
    for (std::size_t i = 0; i < size(); ++i) {
        auto v = particle(i);
        for (std::size_t k = 0; k < n; ++k) acc[k].add(v[k]);
    }
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = weight() * acc[k].value();
    return p;
}

double Ensemble::mean_square_peculiar_speed() const {
    const auto p = momentum();
    const auto n = static_cast<std::size_t>(dimension);
    CompensatedSum s;
    for (std::size_t i = 0; i < size(); ++i) {
        auto v = particle(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double c = v[k] - p[k] / rho0;
            s.add(c * c);
        }
    }
    return s.value() / static_cast<double>(size());
}

Ensemble init_ensemble(const InitSpec& spec, int dimension, std::size_t particles, double rho0,
                       Rng& rng) {
    if (dimension < 2) throw InvalidParameter("dimension must be at least 2");
    if (particles < 2) throw InvalidParameter("n_particles must be at least 2");
    if (!(rho0 > 0.0)) throw InvalidParameter("rho0 must be > 0");
    Ensemble e;
    e.dimension = dimension;
    e.rho0 = rho0;
    e.velocities.assign(particles * static_cast<std::size_t>(dimension), 0.0);
    std::visit(Sampler{e, rng}, spec.shape);

    if (spec.remove_mean) {
        const auto n = static_cast<std::size_t>(dimension);
        std::vector<CompensatedSum> acc(n);
        for (std::size_t i = 0; i < particles; ++i) {
            auto v = e.particle(i);
            for (std::size_t k = 0; k < n; ++k) acc[k].add(v[k]);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double mean = acc[k].value() / static_cast<double>(particles);
            if (mean == 0.0) continue;
            for (std::size_t i = 0; i < particles; ++i) e.particle(i)[k] -= mean;
        }
    }
    return e;
}

std::string describe(const InitSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Maxwellian>) {
                os << "maxwellian(" << s.temperature << ")";
            } else if constexpr (std::is_same_v<T, UniformBall>) {
                os << "uniform_ball(" << s.radius << ")";
            } else if constexpr (std::is_same_v<T, TwoDelta>) {
                os << "two_delta(";
                for (double x : s.va) os << x << ' ';
                os << "|";
                for (double x : s.vb) os << ' ' << x;
                os << ")";
            } else {
                os << "pareto(" << s.tail_index << ", " << s.scale << ")";
            }
        },
        spec.shape);
    if (!spec.remove_mean) os << " raw";
    return os.str();
}

}  // namespace gkin
