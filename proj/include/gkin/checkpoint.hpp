#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "gkin/ensemble.hpp"

namespace gkin {

class Simulation;

/// Binary checkpoint header. On disk (all little-endian):
///
///   "GKIN1"            5 bytes
///   dimension          u32
///   particles          u64
///   alpha, mu, rho0    f64 x 3
///   time               f64
///   seed, step         u64 x 2   (random-stream state)
///   dt                 f64
///
/// followed by particles * dimension f64 velocities, row-major.
struct CheckpointHeader {
    std::uint32_t dimension = 3;
    std::uint64_t particles = 0;
    double alpha = 1.0;
    double mu = 1.0;
    double rho0 = 1.0;
    double time = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    double dt = 0.0;

    static CheckpointHeader from(const Simulation& sim);
};

inline constexpr char kCheckpointMagic[5] = {'G', 'K', 'I', 'N', '1'};
inline constexpr std::size_t kCheckpointHeaderBytes = 5 + 4 + 8 + 4 * 8 + 2 * 8 + 8;

void write_checkpoint(std::ostream& os, const Ensemble& e, const CheckpointHeader& h);
void write_checkpoint(const std::filesystem::path& path, const Ensemble& e,
                      const CheckpointHeader& h);

struct Checkpoint {
    CheckpointHeader header;
    Ensemble ensemble;
};

/// Throws InvalidParameter on a bad magic, truncated data or non-finite values.
Checkpoint read_checkpoint(std::istream& is);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace gkin
