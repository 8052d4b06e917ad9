#pragma once

#include "gvc/projection.hpp"
#include "gvc/sim.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gvc {

/// Malformed input text. what() names the line and column for syntax errors
/// and the field path (e.g. "agents[2].u_max_mps") for content errors.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// JSON scenario. Required keys: dimension, seed, max_steps, tick_rate_hz,
/// collision_threshold_m, epsilon_m, noise_semi_axes_m, agents (each with
/// start, goal, u_max_mps, margin_semi_axes_m). Optional: sensing_radius_m,
/// stall_limit_steps. Unknown keys are rejected.
Scenario parse_scenario(std::string_view text);
std::string emit_scenario(const Scenario& s);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Obstacles for a one-shot projection:
///   {"atoms": [ {"type": "ball", "center": [...], "radius": r},
///               {"type": "ellipsoid", "center": [...], "shape": [[...], ...]},
///               {"type": "ellipsoid", "center": [...], "semi_axes": [...]},
///               {"type": "polyhedron", "normals": [[...], ...], "offsets": [...]} ],
///    "halfspaces": [ {"normal": [...], "offset": b} ] }
/// Each atom is its own obstacle region. "halfspaces" is optional.
struct AtomsFile {
  std::vector<SetAtom> atoms;
  std::vector<Halfspace> halfspaces;
};

AtomsFile parse_atoms(std::string_view text);

/// "1.5,0" or "1.5 0" -> vector.
Vector parse_point(std::string_view text);

}  // namespace gvc
