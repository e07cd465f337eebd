#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gkin/random.hpp"

namespace gkin {

/// Equal-weight particle representation of f: f ~ weight * sum_i delta(v - v_i).
///
/// Velocities are stored row-major (particle-major), `dimension` doubles per
/// particle. weight = rho0 / particles, so the total mass is rho0 exactly.
struct Ensemble {
    int dimension = 3;
    double rho0 = 1.0;
    double time = 0.0;
    std::vector<double> velocities;

    std::size_t size() const noexcept {
        return velocities.size() / static_cast<std::size_t>(dimension);
    }
    double weight() const noexcept { return rho0 / static_cast<double>(size()); }

    std::span<double> particle(std::size_t i) {
        return {velocities.data() + i * static_cast<std::size_t>(dimension),
                static_cast<std::size_t>(dimension)};
    }
    std::span<const double> particle(std::size_t i) const {
        return {velocities.data() + i * static_cast<std::size_t>(dimension),
                static_cast<std::size_t>(dimension)};
    }

    /// Throws InvalidParameter when fewer than two particles, a nonpositive
    /// mass, a ragged velocity array or a non-finite component is found.
    void validate() const;

    /// sum_i weight |v_i|^2, compensated summation.
    double kinetic_energy() const;
    /// weight * sum_i v_i, one entry per component.
    std::vector<double> momentum() const;
    /// Per-particle mean of |v - <v>|^2 (i.e. N times the temperature).
    double mean_square_peculiar_speed() const;
};

struct Maxwellian {
    double temperature = 1.0;
};
struct UniformBall {
    double radius = 1.0;
};
struct TwoDelta {
    std::vector<double> va;
    std::vector<double> vb;
};
/// Isotropic power-law tail: P(|v| > r) = (r / scale)^{-tail_index} for r >= scale.
struct ParetoTail {
    double tail_index = 4.5;
    double scale = 1.0;
};

using InitShape = std::variant<Maxwellian, UniformBall, TwoDelta, ParetoTail>;

struct InitSpec {
    InitShape shape = Maxwellian{};
    /// Subtract the sample mean so the momentum is zero (up to rounding).
    bool remove_mean = true;
};

/// Samples `particles` velocities from `spec`; rho0 sets the total mass.
/// Throws InvalidParameter for nonpositive temperature / radius / scale.
Ensemble init_ensemble(const InitSpec& spec, int dimension, std::size_t particles,
                       double rho0, Rng& rng);

std::string describe(const InitSpec& spec);

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            c_ += (sum_ - t) + x;
        } else {
            c_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const noexcept { return sum_ + c_; }

private:
    double sum_ = 0.0;
    double c_ = 0.0;
};

}  // namespace gkin
