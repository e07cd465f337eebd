#include "gkin/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "gkin/engine.hpp"
#include "gkin/errors.hpp"

namespace gkin {

namespace {

template <typename T>
void put(std::ostream& os, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    auto bits = std::bit_cast<U>(value);
    std::array<char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>(bits & 0xffu);
        bits >>= 8;
    }
    os.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    std::array<unsigned char, sizeof(T)> bytes;
    if (!is.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
        throw InvalidParameter("checkpoint is truncated");
    }
    U bits = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) bits = (bits << 8) | bytes[i];
    return std::bit_cast<T>(bits);
}

}  // namespace

CheckpointHeader CheckpointHeader::from(const Simulation& sim) {
    const auto& cfg = sim.config();
    CheckpointHeader h;
    h.dimension = static_cast<std::uint32_t>(cfg.dimension);
    h.particles = sim.ensemble().size();
    h.alpha = cfg.alpha;
    h.mu = cfg.mu;
    h.rho0 = cfg.rho0;
    h.time = sim.time();
    h.seed = cfg.seed;
    h.step = sim.step_index();
    h.dt = sim.dt();
    return h;
}

void write_checkpoint(std::ostream& os, const Ensemble& e, const CheckpointHeader& h) {
    if (h.particles != e.size() || h.dimension != static_cast<std::uint32_t>(e.dimension)) {
        throw InvalidParameter("checkpoint header does not match the ensemble");
    }
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put(os, h.dimension);
    put(os, h.particles);
    put(os, h.alpha);
    put(os, h.mu);
    put(os, h.rho0);
    put(os, h.time);
    put(os, h.seed);
    put(os, h.step);
    put(os, h.dt);
    for (double x : e.velocities) put(os, x);
    if (!os) throw std::runtime_error("failed to write checkpoint");
}

void write_checkpoint(const std::filesystem::path& path, const Ensemble& e,
                      const CheckpointHeader& h) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(os, e, h);
}

Checkpoint read_checkpoint(std::istream& is) {
    char magic[5];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, 5) != 0) {
        throw InvalidParameter("not a GKIN1 checkpoint");
    }
    Checkpoint c;
    auto& h = c.header;
    h.dimension = get<std::uint32_t>(is);
    h.particles = get<std::uint64_t>(is);
    h.alpha = get<double>(is);
    h.mu = get<double>(is);
    h.rho0 = get<double>(is);
    h.time = get<double>(is);
    h.seed = get<std::uint64_t>(is);
    h.step = get<std::uint64_t>(is);
    h.dt = get<double>(is);
    if (h.dimension < 2 || h.particles < 2) throw InvalidParameter("checkpoint header is invalid");
    c.ensemble.dimension = static_cast<int>(h.dimension);
    c.ensemble.rho0 = h.rho0;
    c.ensemble.time = h.time;
    c.ensemble.velocities.resize(h.particles * h.dimension);
    for (double& x : c.ensemble.velocities) x = get<double>(is);
    c.ensemble.validate();
    return c;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidParameter("cannot open checkpoint " + path.string());
    return read_checkpoint(is);
}

}  // namespace gkin
