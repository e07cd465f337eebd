#include "gkin/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "gkin/checkpoint.hpp"
#include "gkin/errors.hpp"

namespace gkin {

namespace {

std::uint64_t key(Stream s) { return static_cast<std::uint64_t>(s); }

// Adds N(0, 2 mu dt) to each entry; returns sum of (x'^2 - x^2).
double diffuse_range(std::span<double> xs, double mu, double dt, Rng& rng) {
    if (mu == 0.0 || dt == 0.0) return 0.0;
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 * mu * dt));
    CompensatedSum injected;
    for (double& x : xs) {
        const double xi = gauss(rng);
        injected.add(xi * (2.0 * x + xi));
        x += xi;
    }
    return injected.value();
}

template <typename IndexMap>
CollisionStats collide_block(Ensemble& e, IndexMap&& idx, std::size_t count,
                             const CollisionParams& p, const KernelSpec& k,
                             const SigmaSampler& sampler, double dt, double rate_scale,
                             double& majorant_speed, Rng& rng) {
    CollisionStats stats;
    if (count < 2 || dt <= 0.0) return stats;
    const double n_total = static_cast<double>(e.size());
    const double c = static_cast<double>(count);
    double r_max = k.rate(majorant_speed);
    const double mean = 0.5 * c * (c - 1.0) * (e.rho0 / n_total) * r_max * dt * rate_scale;
    if (!(mean > 0.0)) return stats;

    const std::uint64_t n_candidates = std::poisson_distribution<std::uint64_t>(mean)(rng);
    const auto dim = static_cast<std::size_t>(e.dimension);
    const double beta = p.beta();
    const double loss_factor = -0.25 * (1.0 - p.alpha() * p.alpha());
    const double w = e.weight();
    std::vector<double> nu(dim), sigma(dim);
    CompensatedSum ledger;

    for (std::uint64_t n = 0; n < n_candidates; ++n) {
        const auto i = uniform_index(rng, count);
        auto j = uniform_index(rng, count - 1);
        if (j >= i) ++j;
        auto a = e.particle(idx(i));
        auto b = e.particle(idx(j));
        double u2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) u2 += (a[d] - b[d]) * (a[d] - b[d]);
        const double speed = std::sqrt(u2);
        const double rate = k.rate(speed);
        if (rate > r_max) {
            majorant_speed = 1.5 * speed;
            r_max = k.rate(majorant_speed);
            ++stats.majorant_raises;
        } else if (!(uniform01(rng) * r_max < rate)) {
            continue;
        }
        ++stats.accepted;
        if (u2 == 0.0) continue;
        for (std::size_t d = 0; d < dim; ++d) nu[d] = (a[d] - b[d]) / speed;
        sampler.sample(nu, sigma, rng);
        const double nu_sigma = detail::dot(nu, sigma);
        detail::collide_in_place(a, b, sigma, beta);
        ledger.add(loss_factor * (1.0 - nu_sigma) * u2);
    }
    stats.candidates = n_candidates;
    stats.energy_change = w * ledger.value();
    return stats;
}

}  // namespace

KernelSpec KernelSpec::truncated(double m, double M) {
    if (!(m >= 0.0)) throw InvalidParameter("truncated kernel needs m >= 0");
    if (!(M > 0.0)) throw InvalidParameter("truncated kernel needs M > 0");
    KernelSpec k;
    k.variant = Variant::truncated;
    k.m = m;
    k.M = M;
    return k;
}

void SimConfig::validate() const {
    auto fail = [](const char* key, const std::string& msg) { throw ConfigError(key, msg); };
    if (dimension < 2) fail("dimension", "dimension must be >= 2");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha", "alpha must lie in (0,1]");
    if (!(mu >= 0.0) || !std::isfinite(mu)) fail("mu", "mu must be >= 0");
    if (!(rho0 > 0.0) || !std::isfinite(rho0)) fail("rho0", "rho0 must be > 0");
    if (n_particles < 2) fail("particles", "particles must be >= 2");
    if (n_particles > 0xffffffffull) fail("particles", "particles must fit in 32 bits");
    if (dt && !(*dt > 0.0)) fail("dt", "dt must be > 0 or auto");
    if (!(t_end >= 0.0)) fail("t_end", "t_end must be >= 0");
    if (threads < 1) fail("threads", "threads must be >= 1");
    if (kernel.variant == KernelSpec::Variant::truncated) {
        if (!(kernel.m >= 0.0)) fail("m", "m must be >= 0");
        if (!(kernel.M > 0.0)) fail("M", "M must be > 0");
    }
    if (!(collision_fraction > 0.0 && collision_fraction < 0.5)) {
        fail("collision_fraction", "collision_fraction must lie in (0,0.5)");
    }
    if (!(majorant_factor > 0.0)) fail("majorant_factor", "majorant_factor must be > 0");
    if (!(output_every > 0.0)) fail("every", "output cadence must be > 0");
    if (!(checkpoint_every >= 0.0)) fail("checkpoint_every", "checkpoint_every must be >= 0");
    if (d3_pairs < 10000) fail("d3_pairs", "d3_pairs must be >= 10000");
    for (double s : moment_orders) {
        if (!(s >= 0.0)) fail("moments", "moment orders must be >= 0");
    }
    if (!(steady_window > 0.0)) fail("steady_window", "steady_window must be > 0");
    if (!(steady_tol > 0.0)) fail("steady_tol", "steady_tol must be > 0");
    if (!(t_average >= 0.0)) fail("t_average", "t_average must be >= 0");
    if (!(t_max > 0.0)) fail("t_max", "t_max must be > 0");
}

double diffusion_step(Ensemble& e, double mu, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw InvalidParameter("diffusion step needs dt > 0");
    return e.weight() * diffuse_range(e.velocities, mu, dt, rng);
}

CollisionStats collision_step(Ensemble& e, std::span<const std::uint32_t> index,
                              const CollisionParams& p, const KernelSpec& k,
                              const SigmaSampler& sampler, double dt, double rate_scale,
                              double& majorant_speed, Rng& rng) {
    return collide_block(
        e, [index](std::uint64_t i) { return static_cast<std::size_t>(index[i]); },
        index.size(), p, k, sampler, dt, rate_scale, majorant_speed, rng);
}

CollisionStats collision_step(Ensemble& e, const CollisionParams& p, const KernelSpec& k,
                              const SigmaSampler& sampler, double dt, double& majorant_speed,
                              Rng& rng) {
    return collide_block(
        e, [](std::uint64_t i) { return static_cast<std::size_t>(i); }, e.size(), p, k, sampler,
        dt, 1.0, majorant_speed, rng);
}

double mean_pair_rate(const Ensemble& e, const KernelSpec& k, std::size_t pairs, Rng& rng) {
    const std::size_t n = e.size();
    if (n < 2) throw InvalidParameter("pair rate needs at least two particles");
    CompensatedSum sum;
    for (std::size_t s = 0; s < pairs; ++s) {
        const auto i = uniform_index(rng, n);
        auto j = uniform_index(rng, n - 1);
        if (j >= i) ++j;
        auto a = e.particle(i);
        auto b = e.particle(j);
        double u2 = 0.0;
        for (std::size_t d = 0; d < a.size(); ++d) u2 += (a[d] - b[d]) * (a[d] - b[d]);
        sum.add(k.rate(std::sqrt(u2)));
    }
    return sum.value() / static_cast<double>(pairs);
}

Simulation::Simulation(const SimConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      params_(cfg.alpha, cfg.dimension),
      sampler_(cfg.dimension) {
    auto rng = make_stream(cfg_.seed, {0, key(Stream::init)});
    e_ = init_ensemble(cfg_.init, cfg_.dimension, cfg_.n_particles, cfg_.rho0, rng);
    dt_ = cfg_.dt ? *cfg_.dt : choose_dt();
    if (cfg_.dt) {
        auto trng = make_stream(cfg_.seed, {0, key(Stream::timestep)});
        const double rate = cfg_.rho0 * mean_pair_rate(e_, cfg_.kernel, 20000, trng);
        if (rate * dt_ >= 0.5) {
            throw ConfigError("dt", "dt gives >= 0.5 expected collisions per particle per step");
        }
    }
    refresh_majorant();
}

Simulation::Simulation(const SimConfig& cfg, Ensemble initial, std::uint64_t step, double dt)
    : cfg_((cfg.validate(), cfg)),
      params_(cfg.alpha, cfg.dimension),
      sampler_(cfg.dimension),
      e_(std::move(initial)),
      dt_(dt),
      step_(step) {
    e_.validate();
    if (e_.dimension != cfg_.dimension) throw ConfigError("dimension", "checkpoint dimension differs");
    if (!(dt_ > 0.0)) throw ConfigError("dt", "dt must be > 0");
    refresh_majorant();
}

double Simulation::choose_dt() const {
    auto rng = make_stream(cfg_.seed, {0, key(Stream::timestep)});
    const double n = static_cast<double>(e_.size());
    const double rate = cfg_.rho0 * (n - 1.0) / n * mean_pair_rate(e_, cfg_.kernel, 20000, rng);
    if (!(rate > 0.0)) return 0.01;
    return cfg_.collision_fraction / rate;
}

void Simulation::refresh_majorant() {
    const double vrel = std::sqrt(2.0 * e_.mean_square_peculiar_speed());
    majorant_ = std::max(cfg_.majorant_factor * vrel, 1e-12);
}

void Simulation::check_finite() const {
    for (std::size_t i = 0; i < e_.velocities.size(); ++i) {
        if (!std::isfinite(e_.velocities[i])) {
            throw NumericalFailure("non-finite velocity at particle " +
                                   std::to_string(i / static_cast<std::size_t>(e_.dimension)) +
                                   ", t = " + std::to_string(e_.time));
        }
    }
}

void Simulation::step() {
    const int workers = cfg_.threads;
    const std::uint64_t s = step_;

    if (workers == 1) {
        auto rng = make_stream(cfg_.seed, {s, key(Stream::diffusion), 0});
        injected_.add(e_.weight() * diffuse_range(e_.velocities, cfg_.mu, dt_, rng));
        auto crng = make_stream(cfg_.seed, {s, key(Stream::collision), 0});
        const auto stats =
            collision_step(e_, params_, cfg_.kernel, sampler_, dt_, majorant_, crng);
        totals_ += stats;
        collisional_.add(stats.energy_change);
    } else {
        const std::size_t n = e_.size();
        const auto w = static_cast<std::size_t>(workers);
        const auto dim = static_cast<std::size_t>(e_.dimension);

        std::vector<double> injected(w, 0.0);
        {
            std::vector<std::jthread> pool;
            for (std::size_t c = 0; c < w; ++c) {
                pool.emplace_back([&, c] {
                    const std::size_t lo = n * c / w, hi = n * (c + 1) / w;
                    auto rng = make_stream(cfg_.seed, {s, key(Stream::diffusion), c});
                    std::span<double> part(e_.velocities.data() + lo * dim, (hi - lo) * dim);
                    injected[c] = diffuse_range(part, cfg_.mu, dt_, rng);
                });
            }
        }
        for (double x : injected) injected_.add(e_.weight() * x);

        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), 0u);
        auto prng = make_stream(cfg_.seed, {s, key(Stream::partition)});
        std::shuffle(perm_.begin(), perm_.end(), prng);

        std::vector<CollisionStats> stats(w);
        std::vector<double> majorants(w, majorant_);
        {
            std::vector<std::jthread> pool;
            for (std::size_t c = 0; c < w; ++c) {
                pool.emplace_back([&, c] {
                    const std::size_t lo = n * c / w, hi = n * (c + 1) / w;
                    const std::size_t nb = hi - lo;
                    if (nb < 2) return;
                    const double scale = (static_cast<double>(n) - 1.0) /
                                         (static_cast<double>(nb) - 1.0);
                    auto rng = make_stream(cfg_.seed, {s, key(Stream::collision), c});
                    std::span<const std::uint32_t> block(perm_.data() + lo, nb);
                    stats[c] = collision_step(e_, block, params_, cfg_.kernel, sampler_, dt_,
                                              scale, majorants[c], rng);
                });
            }
        }
        for (std::size_t c = 0; c < w; ++c) {
            totals_ += stats[c];
            collisional_.add(stats[c].energy_change);
            majorant_ = std::max(majorant_, majorants[c]);
        }
    }
    ++step_;
    e_.time = static_cast<double>(step_) * dt_;
}

void Simulation::advance_to(double t) {
    while (e_.time < t - 0.5 * dt_) step();
}

MeasureOptions measure_options(const SimConfig& cfg) {
    MeasureOptions o;
    o.orders = recorded_orders(cfg.moment_orders);
    o.d3_pairs = cfg.d3_pairs;
    o.entropy = cfg.entropy;
    return o;
}

RunResult run(Simulation& sim, const RunObserver& observer,
              const std::optional<std::filesystem::path>& failure_snapshot) {
    const auto& cfg = sim.config();
    RunResult result;
    result.series.dimension = cfg.dimension;
    result.series.rho0 = cfg.rho0;
    const auto opts = measure_options(cfg);
    result.series.orders = opts.orders;
    result.dt = sim.dt();

    const auto every = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(cfg.output_every / sim.dt())));
    CollisionStats last = sim.collision_totals();

    auto record = [&]() -> bool {
        try {
            sim.check_finite();
        } catch (const NumericalFailure&) {
            if (failure_snapshot) {
                write_checkpoint(*failure_snapshot, sim.ensemble(),
                                 CheckpointHeader::from(sim));
            }
            throw;
        }
        auto rng = make_stream(cfg.seed, {sim.step_index(), key(Stream::measure)});
        auto r = measure(sim.ensemble(), opts, rng);
        const auto& tot = sim.collision_totals();
        r.n_coll = tot.accepted - last.accepted;
        r.candidates = tot.candidates - last.candidates;
        r.majorant_raises = tot.majorant_raises - last.majorant_raises;
        r.accept_rate = r.candidates > 0 ? static_cast<double>(r.n_coll) /
                                               static_cast<double>(r.candidates)
                                         : 0.0;
        r.majorant = sim.majorant_rate();
        r.energy_injected = sim.energy_injected();
        r.energy_collisional = sim.energy_collisional();
        last = tot;
        sim.refresh_majorant();
        result.series.records.push_back(std::move(r));
        return observer ? observer(sim, result.series.records.back()) : true;
    };

    bool go = record();
    std::uint64_t since = 0;
    while (go && sim.time() < cfg.t_end - 0.5 * sim.dt()) {
        sim.step();
        ++since;
        const bool at_end = !(sim.time() < cfg.t_end - 0.5 * sim.dt());
        if (since == every || at_end) {
            since = 0;
            go = record();
        }
    }
    result.final_state = sim.ensemble();
    result.totals = sim.collision_totals();
    result.steps = sim.step_index();
    return result;
}

RunResult run(const SimConfig& cfg) {
    Simulation sim(cfg);
    return run(sim);
}

}  // namespace gkin
