#pragma once

// File formats: NRRD volumes, OBJ meshes, JSON parameter documents, plain-text
// polylines, slice masks, fit configs and reports.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "vessel/error.hpp"
#include "vessel/fit.hpp"
#include "vessel/grid.hpp"
#include "vessel/mesh.hpp"
#include "vessel/metrics.hpp"
#include "vessel/params.hpp"

namespace vessel {

namespace io_detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

// Whole-token double parse; false on any trailing garbage.
inline bool parse_number(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size();
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// NRRD

enum class ElementType { UInt8, Float32 };

struct VolumeHeader {
  GridShape sizes;
  ElementType type = ElementType::UInt8;

  std::size_t element_size() const { return type == ElementType::UInt8 ? 1 : 4; }
  std::size_t payload_bytes() const { return sizes.count() * element_size(); }
};

using Volume = std::variant<BinaryGrid, VoxelGrid<float>>;

namespace io_detail {

inline std::string nrrd_header(GridShape s, ElementType t) {
  std::ostringstream h;
  h << "NRRD0004\n"
    << "type: " << (t == ElementType::UInt8 ? "uint8" : "float") << "\n"
    << "dimension: 3\n"
    << "sizes: " << s.nx << " " << s.ny << " " << s.nz << "\n"
    << "encoding: raw\n"
    << "endian: little\n"
    << "space dimension: 3\n"
    << "space directions: (1,0,0) (0,1,0) (0,0,1)\n"
    << "\n";
  return h.str();
}

inline std::string strip_spaces(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  return s;
}

static_assert(sizeof(float) == 4);

inline bool host_little_endian() {
  const std::uint16_t one = 1;
  std::uint8_t b;
  std::memcpy(&b, &one, 1);
  return b == 1;
}

}  // namespace io_detail

/// Parses the header; `offset` receives the byte offset of the payload.
inline VolumeHeader parse_nrrd_header(const std::string& data, std::size_t& offset) {
  using namespace io_detail;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = data.find('\n', pos);
    if (nl == std::string::npos) throw FormatError("nrrd: header not terminated by a blank line");
    std::string line = data.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "NRRD0004") throw FormatError("nrrd: missing NRRD0004 magic");

  VolumeHeader h;
  bool have_type = false, have_dim = false, have_sizes = false, have_enc = false, have_endian = false;
  for (;;) {
    const std::string line = next_line();
    if (line.empty()) break;
    if (line[0] == '#') continue;
    if (line.find(":=") != std::string::npos) throw FormatError("nrrd: key/value pairs are not supported: '" + line + "'");
    const auto colon = line.find(": ");
    if (colon == std::string::npos) throw FormatError("nrrd: malformed header line '" + line + "'");
    const std::string key = line.substr(0, colon);
    const std::string val = trim(line.substr(colon + 2));
    if (key == "type") {
      if (val == "uint8" || val == "uchar" || val == "unsigned char" || val == "uint8_t") h.type = ElementType::UInt8;
      else if (val == "float") h.type = ElementType::Float32;
      else throw FormatError("nrrd field 'type': unsupported element type '" + val + "'");
      have_type = true;
    } else if (key == "dimension") {
      if (val != "3") throw FormatError("nrrd field 'dimension': expected 3, got '" + val + "'");
      have_dim = true;
    } else if (key == "sizes") {
      std::istringstream ss(val);
      long long a = 0, b = 0, c = 0;
      std::string extra;
      if (!(ss >> a >> b >> c) || (ss >> extra) || a <= 0 || b <= 0 || c <= 0) {
        throw FormatError("nrrd field 'sizes': expected three positive integers, got '" + val + "'");
      }
      h.sizes = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
      have_sizes = true;
    } else if (key == "encoding") {
      if (val != "raw") throw FormatError("nrrd field 'encoding': only raw is supported, got '" + val + "'");
      have_enc = true;
    } else if (key == "endian") {
      if (val != "little") throw FormatError("nrrd field 'endian': only little is supported, got '" + val + "'");
      have_endian = true;
    } else if (key == "space dimension") {
      if (val != "3") throw FormatError("nrrd field 'space dimension': expected 3, got '" + val + "'");
    } else if (key == "space directions") {
      if (strip_spaces(val) != "(1,0,0)(0,1,0)(0,0,1)") {
        throw FormatError("nrrd field 'space directions': only unit axis-aligned voxels are supported");
      }
    } else if (key == "space origin") {
      if (strip_spaces(val) != "(0,0,0)") throw FormatError("nrrd field 'space origin': only (0,0,0) is supported");
    } else {
      throw FormatError("nrrd: unsupported field '" + key + "'");
    }
  }
  if (!have_type) throw FormatError("nrrd: missing field 'type'");
  if (!have_dim) throw FormatError("nrrd: missing field 'dimension'");
  if (!have_sizes) throw FormatError("nrrd: missing field 'sizes'");
  if (!have_enc) throw FormatError("nrrd: missing field 'encoding'");
  if (h.type == ElementType::Float32 && !have_endian) throw FormatError("nrrd: missing field 'endian'");
  offset = pos;
  return h;
}

inline Volume parse_volume(const std::string& data) {
  std::size_t offset = 0;
  const VolumeHeader h = parse_nrrd_header(data, offset);
  const std::size_t have = data.size() - offset;
  if (have != h.payload_bytes()) {
    throw LengthError("nrrd: payload has " + std::to_string(have) + " bytes, header implies " +
                      std::to_string(h.payload_bytes()));
  }
  const char* p = data.data() + offset;
  if (h.type == ElementType::UInt8) {
    std::vector<std::uint8_t> v(p, p + h.sizes.count());
    return BinaryGrid(h.sizes, std::move(v));
  }
  if (!io_detail::host_little_endian()) throw FormatError("nrrd: big-endian hosts are not supported");
  std::vector<float> v(h.sizes.count());
  std::memcpy(v.data(), p, h.payload_bytes());
  return VoxelGrid<float>(h.sizes, std::move(v));
}

inline Volume read_volume(const std::string& path) { return parse_volume(io_detail::read_file(path)); }

/// Reads a uint8 volume and rejects values other than 0 and 1.
inline BinaryGrid read_binary_volume(const std::string& path) {
  auto vol = read_volume(path);
  auto* g = std::get_if<BinaryGrid>(&vol);
  if (g == nullptr) throw FormatError("nrrd '" + path + "': expected a uint8 segmentation, got float");
  for (auto v : g->data()) {
    if (v > 1) throw FormatError("nrrd '" + path + "': segmentation values must be 0 or 1");
  }
  return std::move(*g);
}

inline std::string encode_volume(const BinaryGrid& g) {
  std::string out = io_detail::nrrd_header(g.shape(), ElementType::UInt8);
  out.append(reinterpret_cast<const char*>(g.data().data()), g.size());
  return out;
}

inline std::string encode_volume(const VoxelGrid<float>& g) {
  if (!io_detail::host_little_endian()) throw FormatError("nrrd: big-endian hosts are not supported");
  std::string out = io_detail::nrrd_header(g.shape(), ElementType::Float32);
  out.append(reinterpret_cast<const char*>(g.data().data()), g.size() * sizeof(float));
  return out;
}

inline void write_volume(const BinaryGrid& g, const std::string& path) { io_detail::write_file(path, encode_volume(g)); }
inline void write_volume(const VoxelGrid<float>& g, const std::string& path) {
  io_detail::write_file(path, encode_volume(g));
}

inline VoxelGrid<float> to_float_grid(const VoxelGrid<double>& g) {
  std::vector<float> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = static_cast<float>(g[i]);
  return {g.shape(), std::move(v)};
}

// ---------------------------------------------------------------------------
// OBJ

inline std::string encode_obj(const Mesh& mesh) {
  std::string out = "# vessel mesh: " + std::to_string(mesh.vertices.size()) + " vertices, " +
                    std::to_string(mesh.faces.size()) + " faces\n";
  for (const auto& v : mesh.vertices) {
    out += "v " + io_detail::fmt17(v.x) + " " + io_detail::fmt17(v.y) + " " + io_detail::fmt17(v.z) + "\n";
  }
  for (const auto& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) + " " + std::to_string(f[2] + 1) + "\n";
  }
  return out;
}

inline void write_mesh_obj(const Mesh& mesh, const std::string& path) { io_detail::write_file(path, encode_obj(mesh)); }

inline Mesh parse_obj(const std::string& text) {
  Mesh mesh;
  const auto lines = io_detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = io_detail::trim(lines[ln]);
    const std::string where = "obj line " + std::to_string(ln + 1);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tag == "v") {
      if (tok.size() != 3) throw FormatError(where + ": vertex needs 3 coordinates");
      Vec3d v;
      for (int d = 0; d < 3; ++d) {
        if (!io_detail::parse_number(tok[static_cast<std::size_t>(d)], v[d])) {
          throw FormatError(where + ": bad coordinate '" + tok[static_cast<std::size_t>(d)] + "'");
        }
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      if (tok.size() != 3) throw FormatError(where + ": only triangle faces are supported");
      Face f{};
      for (int d = 0; d < 3; ++d) {
        const auto& t = tok[static_cast<std::size_t>(d)];
        double x = 0.0;
        if (!io_detail::parse_number(t, x) || x != std::floor(x) || x < 1) {
          throw FormatError(where + ": bad face index '" + t + "'");
        }
        f[static_cast<std::size_t>(d)] = static_cast<int>(x) - 1;
      }
      mesh.faces.push_back(f);
    } else {
      throw FormatError(where + ": unsupported statement '" + tag + "'");
    }
  }
  for (const auto& f : mesh.faces) {
    for (int i : f) {
      if (i >= static_cast<int>(mesh.vertices.size())) throw FormatError("obj: face index out of range");
    }
  }
  return mesh;
}

inline Mesh read_mesh_obj(const std::string& path) { return parse_obj(io_detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Parameter documents

inline constexpr int kParamsVersion = 1;

struct ParamsDocument {
  Params params;
  std::vector<std::string> warnings;
};

inline nlohmann::json params_to_json(const Params& p) {
  nlohmann::json j;
  j["version"] = kParamsVersion;
  j["P"] = p.P;
  j["centerline_cp"] = nlohmann::json::array();
  for (const auto& c : p.centerline_cp) j["centerline_cp"].push_back({c.x, c.y, c.z});
  j["radius_cp"] = p.radius_cp;
  j["adjustment_cp"] = p.adjustment_cp;
  return j;
}

inline std::string encode_params(const Params& p) { return params_to_json(p).dump(2) + "\n"; }

inline void write_params_json(const Params& p, const std::string& path) {
  io_detail::write_file(path, encode_params(p));
}

inline ParamsDocument parse_params(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("params: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("params: top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "version" && key != "P" && key != "centerline_cp" && key != "radius_cp" && key != "adjustment_cp") {
      throw FormatError("params: unknown key '" + key + "'");
    }
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw FormatError(std::string("params: missing key '") + key + "'");
    return j.at(key);
  };
  auto number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw FormatError("params: '" + key + "' must contain numbers");
    return v.get<double>();
  };

  const auto& ver = require("version");
  if (!ver.is_number_integer() || ver.get<int>() != kParamsVersion) {
    throw FormatError("params: 'version' must be " + std::to_string(kParamsVersion));
  }
  ParamsDocument doc;
  auto& p = doc.params;
  const auto& P = require("P");
  if (!P.is_number_integer()) throw FormatError("params: 'P' must be an integer");
  p.P = P.get<int>();

  const auto& cl = require("centerline_cp");
  if (!cl.is_array()) throw FormatError("params: 'centerline_cp' must be an array");
  for (const auto& pt : cl) {
    if (!pt.is_array() || pt.size() != 3) throw FormatError("params: 'centerline_cp' entries must be [x, y, z]");
    p.centerline_cp.push_back(
        {number(pt[0], "centerline_cp"), number(pt[1], "centerline_cp"), number(pt[2], "centerline_cp")});
  }
  const auto& rad = require("radius_cp");
  if (!rad.is_array()) throw FormatError("params: 'radius_cp' must be an array");
  for (const auto& r : rad) p.radius_cp.push_back(number(r, "radius_cp"));
  const auto& adj = require("adjustment_cp");
  if (!adj.is_array()) throw FormatError("params: 'adjustment_cp' must be an array");
  for (const auto& row : adj) {
    if (!row.is_array()) throw FormatError("params: 'adjustment_cp' entries must be arrays");
    std::vector<double> r;
    for (const auto& a : row) r.push_back(number(a, "adjustment_cp"));
    p.adjustment_cp.push_back(std::move(r));
  }
  try {
    p.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("params: ") + e.what());
  }
  if (p.radius_cp.size() != p.adjustment_cp.size()) {
    doc.warnings.push_back("radius_cp has " + std::to_string(p.radius_cp.size()) + " points but adjustment_cp has " +
                           std::to_string(p.adjustment_cp.size()));
  }
  return doc;
}

inline ParamsDocument read_params_json(const std::string& path) { return parse_params(io_detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Polylines

inline std::string encode_polyline(const std::vector<Vec3d>& pts) {
  std::string out;
  for (const auto& p : pts) {
    out += io_detail::fmt17(p.x) + " " + io_detail::fmt17(p.y) + " " + io_detail::fmt17(p.z) + "\n";
  }
  return out;
}

inline void write_polyline(const std::vector<Vec3d>& pts, const std::string& path) {
  io_detail::write_file(path, encode_polyline(pts));
}

/// One "x y z" per line; blank lines and '#' comments are skipped.
inline std::vector<Vec3d> parse_polyline(const std::string& text) {
  std::vector<Vec3d> pts;
  const auto lines = io_detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = io_detail::trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    Vec3d p;
    bool ok = tok.size() == 3;
    for (int d = 0; ok && d < 3; ++d) ok = io_detail::parse_number(tok[static_cast<std::size_t>(d)], p[d]) && std::isfinite(p[d]);
    if (!ok) throw FormatError("polyline line " + std::to_string(ln + 1) + ": expected 'x y z', got '" + line + "'");
    pts.push_back(p);
  }
  return pts;
}

inline std::vector<Vec3d> read_polyline(const std::string& path) { return parse_polyline(io_detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Slice masks

inline std::string encode_slice_mask(const SliceMask& m) {
  nlohmann::json j;
  j["axis"] = to_string(m.axis);
  j["keep_fraction"] = m.keep_fraction;
  j["slices"] = m.slices;
  return j.dump(2) + "\n";
}

inline void write_slice_mask(const SliceMask& m, const std::string& path) {
  io_detail::write_file(path, encode_slice_mask(m));
}

inline SliceMask parse_slice_mask(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("slice mask: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("slice mask: top level must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "axis" && key != "keep_fraction" && key != "slices") throw FormatError("slice mask: unknown key '" + key + "'");
  }
  SliceMask m;
  if (j.contains("axis")) {
    if (!j["axis"].is_string()) throw FormatError("slice mask: 'axis' must be a string");
    try {
      m.axis = parse_axis(j["axis"].get<std::string>());
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("slice mask: ") + e.what());
    }
  }
  if (!j.contains("keep_fraction") || !j["keep_fraction"].is_number()) {
    throw FormatError("slice mask: 'keep_fraction' must be a number");
  }
  m.keep_fraction = j["keep_fraction"].get<double>();
  if (!(m.keep_fraction > 0.0 && m.keep_fraction <= 1.0)) throw FormatError("slice mask: 'keep_fraction' must be in (0, 1]");
  if (!j.contains("slices") || !j["slices"].is_array()) throw FormatError("slice mask: 'slices' must be an array");
  for (const auto& s : j["slices"]) {
    if (!s.is_number_integer() || s.get<long long>() < 0) throw FormatError("slice mask: slice indices must be non-negative integers");
    m.slices.push_back(s.get<int>());
  }
  return m;
}

inline SliceMask read_slice_mask(const std::string& path) { return parse_slice_mask(io_detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Fit configuration

/// key=value lines, '#' comments. Keys not understood by `extra` (called
/// first, returning false when it does not own the key) are passed to
/// apply_fit_setting; anything left over is an error.
template <class Extra>
void parse_fit_config(const std::string& text, FitHyper& hyper, Extra&& extra) {
  const auto lines = io_detail::split_lines(text);
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = io_detail::trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(ln + 1);
    if (eq == std::string::npos) throw FormatError(where + ": expected key=value");
    const std::string key = io_detail::trim(line.substr(0, eq));
    const std::string val = io_detail::trim(line.substr(eq + 1));
    try {
      if (!extra(key, val) && !apply_fit_setting(hyper, key, val)) throw FormatError("unknown key '" + key + "'");
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
}

inline void parse_fit_config(const std::string& text, FitHyper& hyper) {
  parse_fit_config(text, hyper, [](const std::string&, const std::string&) { return false; });
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json mesh_quality_json(const MeshQuality& q) {
  return {{"n_vertices", q.n_vertices}, {"n_faces", q.n_faces}, {"min_angle_deg", q.min_angle_deg},
          {"max_aspect_ratio", q.max_aspect_ratio}};
}

inline nlohmann::json fit_report_json(const FitReport& r) {
  nlohmann::json j;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : r.stages) {
    j["stages"].push_back({{"stage", s.stage_id},
                           {"iterations", s.iterations},
                           {"initial_loss", s.initial_loss},
                           {"final_loss", s.final_loss},
                           {"components",
                            {{"cl", s.final_components.cl},
                             {"e", s.final_components.e},
                             {"vox", s.final_components.vox},
                             {"reg", s.final_components.reg}}},
                           {"seconds", s.seconds}});
  }
  j["dice"] = r.dice;
  j["hd95"] = r.hd95;
  j["chamfer"] = r.chamfer;
  j["mean_radius"] = r.mean_radius;
  j["mesh"] = mesh_quality_json(r.mesh_quality);
  if (r.sparse_fraction) j["sparse_fraction"] = *r.sparse_fraction;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline nlohmann::json eval_report_json(const EvalReport& r) {
  nlohmann::json j;
  j["dice"] = r.dice;
  if (r.has_centerline) {
    j["hd95"] = r.hd95;
    j["chamfer"] = r.chamfer;
  }
  if (r.has_mesh) j["mesh"] = mesh_quality_json(r.mesh_quality);
  return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) { io_detail::write_file(path, j.dump(2) + "\n"); }

}  // namespace vessel
