#pragma once

// Conforming triangle meshes: validation, derived edges and adjacency, the
// plain-text mesh format and uniform red refinement.
//
// Mesh file format:
//   # comment lines are ignored
//   nv nt
//   x y          (nv lines; decimals or p/q rationals)
//   i j k        (nt lines; zero-based vertex indices)

#include "airyfem/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace airyfem {

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

struct Mesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  ///< counterclockwise
  std::vector<std::array<int, 2>> edges;      ///< (lo, hi), sorted lexicographically
  std::vector<std::array<int, 3>> triangle_edges;  ///< local edge i (opposite vertex i) -> global edge
  std::vector<std::vector<int>> edge_triangles;
  std::vector<std::vector<int>> vertex_triangles;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  Triangle triangle(std::size_t t) const
  {
    const auto& ids = triangles[t];
    return Triangle(vertices[ids[0]], vertices[ids[1]], vertices[ids[2]]);
  }

  bool is_boundary_edge(std::size_t e) const { return edge_triangles[e].size() == 1; }

  /// +1 when local edge i of triangle t runs from the lower to the higher
  /// global vertex index (the global orientation), -1 otherwise.
  int edge_orientation(std::size_t t, int i) const
  {
    const auto& ids = triangles[t];
    return ids[(i + 1) % 3] < ids[(i + 2) % 3] ? 1 : -1;
  }

  long euler_characteristic() const
  {
    return static_cast<long>(num_vertices()) - static_cast<long>(num_edges()) + static_cast<long>(num_triangles());
  }

  bool dual_graph_connected() const
  {
    if (triangles.empty()) return false;
    std::vector<int> parent(triangles.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& inc : edge_triangles)
      if (inc.size() == 2) parent[find(inc[0])] = find(inc[1]);
    const int root = find(0);
    for (std::size_t t = 0; t < triangles.size(); ++t)
      if (find(static_cast<int>(t)) != root) return false;
    return true;
  }

  /// Connected with a single boundary loop: V - E + F = 1.
  bool is_simply_connected() const { return dual_graph_connected() && euler_characteristic() == 1; }

  double max_edge_length() const
  {
    double h = 0;
    for (const auto& e : edges) {
      Vec2 d = vertices[e[1]] - vertices[e[0]];
      h = std::max(h, std::sqrt(to_double(dot(d, d))));
    }
    return h;
  }
};

namespace detail {

inline bool strictly_inside_segment(const Point2& p, const Point2& a, const Point2& b)
{
  if (sgn(cross(b - a, p - a)) != 0) return false;
  Rational s = dot(p - a, b - a);
  return sgn(s) > 0 && s < dot(b - a, b - a);
}

}  // namespace detail

/// Validates the triangulation, orients triangles counterclockwise and derives
/// edges and adjacency. Throws MeshError on any violation.
inline Mesh build_mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles)
{
  Mesh m;
  m.vertices = std::move(vertices);
  const int nv = static_cast<int>(m.vertices.size());
  if (triangles.empty()) throw MeshError("mesh has no triangles");

  for (std::size_t t = 0; t < triangles.size(); ++t) {
    auto ids = triangles[t];
    for (int id : ids)
      if (id < 0 || id >= nv) throw MeshError("triangle " + std::to_string(t) + ": vertex index out of range");
    if (ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2])
      throw MeshError("triangle " + std::to_string(t) + ": repeated vertex");
    Rational a2 = cross(m.vertices[ids[1]] - m.vertices[ids[0]], m.vertices[ids[2]] - m.vertices[ids[0]]);
    if (sgn(a2) == 0) throw MeshError("triangle " + std::to_string(t) + ": degenerate triangle (zero area)");
    if (sgn(a2) < 0) std::swap(ids[1], ids[2]);
    m.triangles.push_back(ids);
  }

  // Directed half-edges in ccw order; each undirected edge may carry at most one per direction.
  std::map<std::array<int, 2>, std::vector<std::pair<int, int>>> incident;  // (lo,hi) -> (triangle, local edge)
  std::map<std::array<int, 2>, int> directed;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& ids = m.triangles[t];
    for (int i = 0; i < 3; ++i) {
      int a = ids[(i + 1) % 3], b = ids[(i + 2) % 3];
      if (directed.count({a, b}))
        throw MeshError("inverted triangle: edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") traversed twice in the same direction");
      directed[{a, b}] = static_cast<int>(t);
      incident[{std::min(a, b), std::max(a, b)}].push_back({static_cast<int>(t), i});
    }
  }

  m.triangle_edges.assign(m.triangles.size(), {-1, -1, -1});
  for (const auto& [key, inc] : incident) {
    if (inc.size() > 2) throw MeshError("nonconforming: edge shared by more than two triangles");
    const int e = static_cast<int>(m.edges.size());
    m.edges.push_back(key);
    std::vector<int> tris;
    for (auto [t, i] : inc) {
      m.triangle_edges[t][i] = e;
      tris.push_back(t);
    }
    m.edge_triangles.push_back(tris);
  }

  m.vertex_triangles.assign(m.vertices.size(), {});
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int id : m.triangles[t]) m.vertex_triangles[id].push_back(static_cast<int>(t));
  for (int v = 0; v < nv; ++v)
    if (m.vertex_triangles[v].empty()) throw MeshError("vertex " + std::to_string(v) + " is not used by any triangle");

  // Hanging nodes: a vertex in the relative interior of an edge.
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const Point2& a = m.vertices[m.edges[e][0]];
    const Point2& b = m.vertices[m.edges[e][1]];
    for (int v = 0; v < nv; ++v)
      if (detail::strictly_inside_segment(m.vertices[v], a, b))
        throw MeshError("nonconforming: vertex " + std::to_string(v) + " lies inside edge (" +
                        std::to_string(m.edges[e][0]) + "," + std::to_string(m.edges[e][1]) + ")");
  }
  return m;
}

inline Mesh load_mesh(std::istream& in)
{
  std::string line;
  int line_no = 0;
  auto next_line = [&](const char* what) -> std::istringstream {
    while (std::getline(in, line)) {
      ++line_no;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return std::istringstream(line);
    }
    throw MeshError("line " + std::to_string(line_no) + ": unexpected end of file, expected " + what);
  };
  auto parse_error = [&](const std::string& msg) {
    return MeshError("line " + std::to_string(line_no) + ": " + msg);
  };
  auto expect_end = [&](std::istringstream& s) {
    std::string extra;
    if (s >> extra) throw parse_error("unexpected trailing token '" + extra + "'");
  };

  long nv = 0, nt = 0;
  {
    auto s = next_line("header 'nv nt'");
    if (!(s >> nv >> nt) || nv < 3 || nt < 1) throw parse_error("bad header, expected 'nv nt'");
    expect_end(s);
  }
  std::vector<Point2> vertices;
  for (long i = 0; i < nv; ++i) {
    auto s = next_line("vertex coordinates");
    std::string xs, ys;
    if (!(s >> xs >> ys)) throw parse_error("expected two coordinates");
    expect_end(s);
    try {
      vertices.push_back({parse_rational(xs), parse_rational(ys)});
    } catch (const std::invalid_argument& err) {
      throw parse_error(err.what());
    }
  }
  std::vector<std::array<int, 3>> triangles;
  for (long i = 0; i < nt; ++i) {
    auto s = next_line("triangle indices");
    std::array<int, 3> ids{};
    if (!(s >> ids[0] >> ids[1] >> ids[2])) throw parse_error("expected three vertex indices");
    expect_end(s);
    triangles.push_back(ids);
  }
  return build_mesh(std::move(vertices), std::move(triangles));
}

inline Mesh load_mesh_string(const std::string& text)
{
  std::istringstream in(text);
  return load_mesh(in);
}

/// Splits every triangle into four through its edge midpoints. New vertex
/// indices are V + (global edge index).
inline Mesh refine_uniform(const Mesh& m)
{
  std::vector<Point2> vertices = m.vertices;
  const int nv = static_cast<int>(m.vertices.size());
  for (const auto& e : m.edges) vertices.push_back((m.vertices[e[0]] + m.vertices[e[1]]) / Rational(2));
  std::vector<std::array<int, 3>> triangles;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    std::array<int, 3> mid;
    for (int i = 0; i < 3; ++i) mid[i] = nv + m.triangle_edges[t][i];  // midpoint of edge opposite v_i
    triangles.push_back({v[0], mid[2], mid[1]});
    triangles.push_back({mid[2], v[1], mid[0]});
    triangles.push_back({mid[1], mid[0], v[2]});
    triangles.push_back({mid[0], mid[1], mid[2]});
  }
  return build_mesh(std::move(vertices), std::move(triangles));
}

/// The unit square split along its diagonal into two triangles.
inline Mesh unit_square_mesh()
{
  return build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
}

inline Mesh single_triangle_mesh()
{
  return build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
}

}  // namespace airyfem
