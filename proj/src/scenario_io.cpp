#include "gvc/scenario_io.hpp"

#include <json.hpp>

#include <charconv>
#include <limits>
#include <fstream>
#include <set>
#include <sstream>

namespace gvc {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw ParseError(path + ": " + msg);
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points one past the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!keys.contains(k)) field_error(path.empty() ? k : path + "." + k, "unknown field");
}

const json& as_object(const json& j, const std::string& path) {
  if (!j.is_object()) field_error(path.empty() ? "<root>" : path, "expected an object");
  return j;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) field_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) field_error(path, "expected a finite number");
  return v;
}

template <typename Int>
Int as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) field_error(path, "expected an integer");
  if constexpr (std::is_unsigned_v<Int>) {
    if (j.is_number_unsigned()) return j.get<Int>();
    if (j.get<std::int64_t>() < 0) field_error(path, "expected a nonnegative integer");
    return static_cast<Int>(j.get<std::int64_t>());
  } else {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))
      field_error(path, "integer out of range");
    const auto v = j.get<std::int64_t>();
    if (v < std::numeric_limits<Int>::min() || v > std::numeric_limits<Int>::max())
      field_error(path, "integer out of range");
    return static_cast<Int>(v);
  }
}

Vector as_vector(const json& j, const std::string& path, Eigen::Index expected = -1) {
  if (!j.is_array()) field_error(path, "expected an array of numbers");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected)
    field_error(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix as_matrix(const json& j, const std::string& path, Eigen::Index cols = -1) {
  if (!j.is_array() || j.empty()) field_error(path, "expected a nonempty array of rows");
  Matrix m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = as_vector(j[r], path + "[" + std::to_string(r) + "]", cols);
    if (r == 0) {
      cols = row.size();
      m.resize(static_cast<Eigen::Index>(j.size()), cols);
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

SetAtom parse_atom(const json& j, const std::string& path, Eigen::Index& dim) {
  as_object(j, path);
  const json& type = require(j, path, "type");
  if (!type.is_string()) field_error(path + ".type", "expected a string");
  const std::string t = type.get<std::string>();
  try {
    if (t == "ball") {
      reject_unknown(j, path, {"type", "center", "radius"});
      const Vector c = as_vector(require(j, path, "center"), path + ".center", dim);
      dim = c.size();
      return Ellipsoid::ball(c, as_number(require(j, path, "radius"), path + ".radius"));
    }
    if (t == "ellipsoid") {
      reject_unknown(j, path, {"type", "center", "shape", "semi_axes"});
      const Vector c = as_vector(require(j, path, "center"), path + ".center", dim);
      dim = c.size();
      const bool has_shape = j.contains("shape");
      if (has_shape == j.contains("semi_axes")) field_error(path, "give exactly one of shape, semi_axes");
      if (has_shape) {
        const Matrix S = as_matrix(j["shape"], path + ".shape", dim);
        if (S.rows() != dim) field_error(path + ".shape", "expected a square matrix");
        return Ellipsoid(c, S);
      }
      return Ellipsoid::from_semi_axes(c, as_vector(j["semi_axes"], path + ".semi_axes", dim));
    }
    if (t == "polyhedron") {
      reject_unknown(j, path, {"type", "normals", "offsets"});
      const Matrix A = as_matrix(require(j, path, "normals"), path + ".normals", dim);
      dim = A.cols();
      const Vector b = as_vector(require(j, path, "offsets"), path + ".offsets", A.rows());
      return Polyhedron(A, b);
    }
  } catch (const InvalidArgument& e) {
    field_error(path, e.what());
  }
  field_error(path + ".type", "unknown atom type \"" + t + "\"");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  const json root = parse_json(text);
  as_object(root, "");
  reject_unknown(root, "",
                 {"dimension", "seed", "max_steps", "tick_rate_hz", "collision_threshold_m", "epsilon_m",
                  "noise_semi_axes_m", "agents", "sensing_radius_m", "stall_limit_steps"});

  Scenario s;
  s.dimension = as_integer<int>(require(root, "", "dimension"), "dimension");
  if (s.dimension != 2 && s.dimension != 3) field_error("dimension", "must be 2 or 3");
  const Eigen::Index n = s.dimension;
  s.seed = as_integer<std::uint64_t>(require(root, "", "seed"), "seed");
  s.max_steps = as_integer<int>(require(root, "", "max_steps"), "max_steps");
  s.tick_rate_hz = as_number(require(root, "", "tick_rate_hz"), "tick_rate_hz");
  s.collision_threshold_m = as_number(require(root, "", "collision_threshold_m"), "collision_threshold_m");
  s.epsilon_m = as_number(require(root, "", "epsilon_m"), "epsilon_m");
  s.noise_semi_axes = as_vector(require(root, "", "noise_semi_axes_m"), "noise_semi_axes_m", n);
  if (root.contains("sensing_radius_m"))
    s.sensing_radius_m = as_number(root["sensing_radius_m"], "sensing_radius_m");
  if (root.contains("stall_limit_steps"))
    s.stall_limit_steps = as_integer<int>(root["stall_limit_steps"], "stall_limit_steps");

  const json& agents = require(root, "", "agents");
  if (!agents.is_array()) field_error("agents", "expected an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "agents[" + std::to_string(i) + "]";
    const json& a = as_object(agents[i], path);
    reject_unknown(a, path, {"start", "goal", "u_max_mps", "margin_semi_axes_m"});
    AgentSpec spec;
    spec.start = as_vector(require(a, path, "start"), path + ".start", n);
    spec.goal = as_vector(require(a, path, "goal"), path + ".goal", n);
    spec.u_max_mps = as_number(require(a, path, "u_max_mps"), path + ".u_max_mps");
    spec.margin_semi_axes = as_vector(require(a, path, "margin_semi_axes_m"), path + ".margin_semi_axes_m", n);
    s.agents.push_back(std::move(spec));
  }

  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return s;
}

std::string emit_scenario(const Scenario& s) {
  ordered_json root;
  root["dimension"] = s.dimension;
  root["seed"] = s.seed;
  root["max_steps"] = s.max_steps;
  root["tick_rate_hz"] = s.tick_rate_hz;
  root["collision_threshold_m"] = s.collision_threshold_m;
  root["epsilon_m"] = s.epsilon_m;
  root["noise_semi_axes_m"] = to_json(s.noise_semi_axes);
  if (s.sensing_radius_m) root["sensing_radius_m"] = *s.sensing_radius_m;
  root["stall_limit_steps"] = s.stall_limit_steps;
  ordered_json agents = ordered_json::array();
  for (const auto& a : s.agents) {
    ordered_json j;
    j["start"] = to_json(a.start);
    j["goal"] = to_json(a.goal);
    j["u_max_mps"] = a.u_max_mps;
    j["margin_semi_axes_m"] = to_json(a.margin_semi_axes);
    agents.push_back(std::move(j));
  }
  root["agents"] = std::move(agents);
  return root.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error reading " + path.string());
  return os.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error writing " + path.string());
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return parse_scenario(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

AtomsFile parse_atoms(std::string_view text) {
  const json root = parse_json(text);
  as_object(root, "");
  reject_unknown(root, "", {"atoms", "regions", "halfspaces"});
  if (root.contains("atoms") == root.contains("regions")) field_error("<root>", "give exactly one of atoms, regions");
  const char* key = root.contains("atoms") ? "atoms" : "regions";
  const json& list = root[key];
  if (!list.is_array()) field_error(key, "expected an array");

  AtomsFile out;
  Eigen::Index dim = -1;
  for (std::size_t i = 0; i < list.size(); ++i)
    out.atoms.push_back(parse_atom(list[i], std::string(key) + "[" + std::to_string(i) + "]", dim));

  if (root.contains("halfspaces")) {
    const json& hs = root["halfspaces"];
    if (!hs.is_array()) field_error("halfspaces", "expected an array");
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::string path = "halfspaces[" + std::to_string(i) + "]";
      as_object(hs[i], path);
      reject_unknown(hs[i], path, {"normal", "offset"});
      Halfspace h;
      h.normal = as_vector(require(hs[i], path, "normal"), path + ".normal", dim);
      dim = h.normal.size();
      h.offset = as_number(require(hs[i], path, "offset"), path + ".offset");
      out.halfspaces.push_back(std::move(h));
    }
  }
  return out;
}

Vector parse_point(std::string_view text) {
  std::vector<double> vals;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ',' || text[i] == ' ' || text[i] == '(' || text[i] == ')')) ++i;
    if (i >= text.size()) break;
    double v = 0.0;
    const char* begin = text.data() + i;
    const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), v);
    if (ec != std::errc() || !std::isfinite(v))
      throw ParseError("bad coordinate at position " + std::to_string(i) + " in \"" + std::string(text) + "\"");
    i += static_cast<std::size_t>(ptr - begin);
    vals.push_back(v);
  }
  if (vals.empty()) throw ParseError("empty point \"" + std::string(text) + "\"");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace gvc
