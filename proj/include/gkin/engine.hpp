#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "gkin/cross_section.hpp"
#include "gkin/ensemble.hpp"
#include "gkin/kinematics.hpp"
#include "gkin/observables.hpp"
#include "gkin/random.hpp"

namespace gkin {

/// Collision rate kernel R(|u|): |u| (hard spheres) or m + min(|u|, M).
struct KernelSpec {
    enum class Variant { hard_sphere, truncated };

    Variant variant = Variant::hard_sphere;
    double m = 0.0;
    double M = std::numeric_limits<double>::infinity();

    static KernelSpec hard_sphere() { return {}; }
    /// Throws InvalidParameter unless m >= 0 and M > 0.
    static KernelSpec truncated(double m, double M);

    double rate(double speed) const noexcept {
        return variant == Variant::hard_sphere ? speed : m + std::min(speed, M);
    }
};

/// Counters and energy ledger of one or more collision steps.
struct CollisionStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted = 0;
    std::uint64_t majorant_raises = 0;
    /// Sum over accepted events of weight * (closed-form energy change).
    double energy_change = 0.0;

    CollisionStats& operator+=(const CollisionStats& o) {
        candidates += o.candidates;
        accepted += o.accepted;
        majorant_raises += o.majorant_raises;
        energy_change += o.energy_change;
        return *this;
    }
};

struct SimConfig {
    int dimension = 3;
    double alpha = 0.5;
    double mu = 1.0;
    double rho0 = 1.0;
    std::size_t n_particles = 100000;
    std::optional<double> dt;  // empty: chosen from collision_fraction
    double t_end = 10.0;
    std::uint64_t seed = 1;
    int threads = 1;
    KernelSpec kernel;
    InitSpec init;

    /// Target expected collisions per particle per step for the automatic dt.
    double collision_fraction = 0.1;
    /// Majorant speed in units of the thermal relative speed.
    double majorant_factor = 6.0;

    // output cadence
    double output_every = 0.1;
    double checkpoint_every = 0.0;  // 0: final checkpoint only
    std::vector<double> moment_orders = {0, 1, 2, 3, 4, 6};
    std::size_t d3_pairs = 100000;
    bool entropy = true;

    // steady-state driver
    double steady_window = 5.0;
    double steady_tol = 0.01;
    double t_average = 20.0;
    double t_max = 200.0;

    /// Throws ConfigError naming the first offending key.
    void validate() const;
};

/// Adds independent N(0, 2 mu dt) kicks to every component. Returns the
/// injected energy sum_i weight (|v_i'|^2 - |v_i|^2).
double diffusion_step(Ensemble& e, double mu, double dt, Rng& rng);

/// Majorant-rejection collisions among particles `index[0..count)` of `e`.
///
/// Pairs collide at rate (rho0 / N_p) R(|u|) * rate_scale. A Poisson number of
/// candidate pairs is drawn with mean count(count-1)/2 (rho0/N_p) R_max dt
/// rate_scale, each accepted with probability R(|u|)/R_max. `majorant_speed`
/// is the speed U with R_max = R(U); it is raised to 1.5x the observed speed
/// when a candidate exceeds it (the event is accepted and counted).
CollisionStats collision_step(Ensemble& e, std::span<const std::uint32_t> index,
                              const CollisionParams& p, const KernelSpec& k,
                              const SigmaSampler& sampler, double dt, double rate_scale,
                              double& majorant_speed, Rng& rng);

/// Whole-ensemble collision step (single worker).
CollisionStats collision_step(Ensemble& e, const CollisionParams& p, const KernelSpec& k,
                              const SigmaSampler& sampler, double dt, double& majorant_speed,
                              Rng& rng);

/// Mean of R(|v_i - v_j|) over random pairs; used to size the time step.
double mean_pair_rate(const Ensemble& e, const KernelSpec& k, std::size_t pairs, Rng& rng);

/// Lie-split time stepper: diffusion, then collisions.
///
/// Every random draw comes from a stream keyed by (seed, step, purpose,
/// worker), so a run is a pure function of (config, initial ensemble) and can
/// resume from (seed, step). With threads > 1 each step randomly partitions
/// the particles into disjoint blocks collided concurrently, with pair rates
/// rescaled so every pair keeps its expected rate.
class Simulation {
public:
    explicit Simulation(const SimConfig& cfg);
    Simulation(const SimConfig& cfg, Ensemble initial, std::uint64_t step, double dt);

    void step();
    /// Steps until time() >= t (within half a step).
    void advance_to(double t);
    /// Re-derives the majorant from the current thermal relative speed.
    void refresh_majorant();

    const SimConfig& config() const noexcept { return cfg_; }
    const Ensemble& ensemble() const noexcept { return e_; }
    Ensemble& ensemble() noexcept { return e_; }
    double time() const noexcept { return e_.time; }
    double dt() const noexcept { return dt_; }
    std::uint64_t step_index() const noexcept { return step_; }
    double majorant_speed() const noexcept { return majorant_; }
    double majorant_rate() const noexcept { return cfg_.kernel.rate(majorant_); }
    const CollisionStats& collision_totals() const noexcept { return totals_; }
    double energy_injected() const noexcept { return injected_.value(); }
    double energy_collisional() const noexcept { return collisional_.value(); }

    /// Throws NumericalFailure if any velocity component is NaN/Inf.
    void check_finite() const;

private:
    double choose_dt() const;

    SimConfig cfg_;
    CollisionParams params_;
    SigmaSampler sampler_;
    Ensemble e_;
    double dt_ = 0.0;
    std::uint64_t step_ = 0;
    double majorant_ = 0.0;
    CollisionStats totals_;
    CompensatedSum injected_;
    CompensatedSum collisional_;
    std::vector<std::uint32_t> perm_;
};

/// Random-stream purposes.
enum class Stream : std::uint64_t { init = 0, diffusion = 1, collision = 2, measure = 3,
                                    partition = 4, timestep = 5 };

/// Called after each observable record; return false to stop the run early.
using RunObserver = std::function<bool(const Simulation&, const ObservableRecord&)>;

struct RunResult {
    ObservableSeries series;
    Ensemble final_state;
    CollisionStats totals;
    double dt = 0.0;
    std::uint64_t steps = 0;
};

/// Runs `sim` until cfg.t_end, recording observables every cfg.output_every.
/// On a non-finite velocity, writes `failure_snapshot` (if given) and throws
/// NumericalFailure.
RunResult run(Simulation& sim, const RunObserver& observer = {},
              const std::optional<std::filesystem::path>& failure_snapshot = std::nullopt);

RunResult run(const SimConfig& cfg);

/// Measurement options implied by a configuration.
MeasureOptions measure_options(const SimConfig& cfg);

}  // namespace gkin
