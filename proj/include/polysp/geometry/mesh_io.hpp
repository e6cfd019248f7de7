#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "polysp/geometry/mesh.hpp"

namespace polysp {

inline FacetLabel parse_label(const std::string& s) {
  if (s == "D") return FacetLabel::Dirichlet;
  if (s == "N") return FacetLabel::Neumann;
  throw MeshError("malformed mesh file: boundary label must be \"D\" or \"N\", got \"" + s + "\"");
}

inline MeshData mesh_data_from_json(const nlohmann::json& j) {
  MeshData d;
  try {
    for (const auto& v : j.at("vertices")) {
      if (!v.is_array() || v.size() != 2) throw MeshError("malformed mesh file: vertex must be [x, y]");
      d.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    for (const auto& c : j.at("cells")) d.cells.push_back(c.get<std::vector<int>>());
    if (j.contains("boundary"))
      for (const auto& b : j.at("boundary")) {
        auto e = b.at("edge").get<std::vector<int>>();
        if (e.size() != 2) throw MeshError("malformed mesh file: boundary edge must be [i, j]");
        d.boundary.push_back({e[0], e[1], parse_label(b.at("label").get<std::string>())});
      }
    if (j.contains("subtriangulation")) {
      for (const auto& cell : j.at("subtriangulation")) {
        std::vector<std::array<int, 3>> tris;
        for (const auto& t : cell) {
          auto v = t.get<std::vector<int>>();
          if (v.size() != 3) throw MeshError("malformed mesh file: subtriangulation entries must be triples");
          tris.push_back({v[0], v[1], v[2]});
        }
        d.subtriangulation.push_back(tris);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw MeshError(std::string("malformed mesh file: ") + e.what());
  }
  return d;
}

inline nlohmann::json mesh_data_to_json(const MeshData& d) {
  nlohmann::json j;
  j["vertices"] = nlohmann::json::array();
  for (const auto& p : d.vertices) j["vertices"].push_back({p.x, p.y});
  j["cells"] = d.cells;
  j["boundary"] = nlohmann::json::array();
  for (const auto& b : d.boundary) j["boundary"].push_back({{"edge", {b.i, b.j}}, {"label", to_string(b.label)}});
  if (!d.subtriangulation.empty()) {
    j["subtriangulation"] = nlohmann::json::array();
    for (const auto& cell : d.subtriangulation) {
      nlohmann::json c = nlohmann::json::array();
      for (const auto& t : cell) c.push_back({t[0], t[1], t[2]});
      j["subtriangulation"].push_back(c);
    }
  }
  return j;
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  POLYSP_REQUIRE(in.good(), MeshError, "cannot open mesh file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MeshError("malformed mesh file " + path + ": " + e.what());
  }
  return Mesh::build(mesh_data_from_json(j));
}

inline void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  POLYSP_REQUIRE(out.good(), Error, "cannot write " + path);
  out << mesh_data_to_json(mesh.data()).dump(1) << "\n";
}

/// Short content hash of the mesh description, used to tag serialized functions.
inline std::string mesh_hash(const Mesh& mesh) {
  std::string s = mesh_data_to_json(mesh.data()).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace polysp
