#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "gkin/engine.hpp"

namespace gkin {

/// Flat key=value configuration with [simulation], [kernel], [init] and
/// [output] sections. '#' starts a comment. Keys:
///
///   [simulation] dimension alpha mu rho0 particles dt(auto|number) t_end seed
///                threads collision_fraction majorant_factor
///                steady_window steady_tol t_average t_max
///   [kernel]     type(hard_sphere|truncated) m M
///   [init]       shape(maxwellian|uniform_ball|two_delta|pareto) temperature
///                radius va vb (comma lists) tail_index scale remove_mean
///   [output]     every checkpoint_every moments (comma list) d3_pairs entropy
///
/// Unknown sections or keys and out-of-range values throw ConfigError naming
/// the key. An empty document gives the defaults.
SimConfig parse_config_text(std::string_view text);
SimConfig parse_config(const std::filesystem::path& path);

/// Canonical text form; parse_config_text(to_config_text(c)) reproduces c.
std::string to_config_text(const SimConfig& cfg);

}  // namespace gkin
