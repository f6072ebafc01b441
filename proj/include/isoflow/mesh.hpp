#pragma once

// Flat closed oriented triangulated surfaces.
//
// Every facet carries its own lifted corner positions. For flat tori the lift
// of a corner is the representative position of its vertex translated by an
// integer combination of the two periods; for surfaces given in R^3 the lift
// is the vertex position itself. All downstream operators only ever look at a
// single facet's lift, so the quotient never needs global coordinates.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "isoflow/error.hpp"

namespace isoflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Integer multiple a*period1 + b*period2 of the period lattice.
struct LatticeOffset {
  int a = 0;
  int b = 0;

  friend bool operator==(const LatticeOffset&, const LatticeOffset&) = default;
  friend auto operator<=>(const LatticeOffset&, const LatticeOffset&) = default;
  LatticeOffset operator-() const { return {-a, -b}; }
  LatticeOffset operator-(const LatticeOffset& o) const { return {a - o.a, b - o.b}; }
};

/// Periods of a flat torus C / (Z*period1 + Z*period2).
struct Lattice {
  Vec2 period1;
  Vec2 period2;

  Vec2 translation(const LatticeOffset& k) const { return k.a * period1 + k.b * period2; }
};

struct Corner {
  std::size_t vertex = 0;
  LatticeOffset offset;
};

/// Raw facet input: three corners, counterclockwise, with lifted positions.
struct FacetSpec {
  std::array<Corner, 3> corners;
  std::array<Vec3, 3> lifted;
};

/// Oriented orthonormal frame (e1, e2) of a facet plane. The coframe
/// (du1, du2) is dual to it; since the frame is orthonormal, du_i = <e_i, .>.
struct Frame {
  Vec3 e1 = Vec3::UnitX();
  Vec3 e2 = Vec3::UnitY();

  Vec2 coordinates(const Vec3& v) const { return {e1.dot(v), e2.dot(v)}; }
  /// The complex structure on the facet: rotation by +pi/2 in frame coordinates.
  static Vec2 rotate(const Vec2& v) { return {-v.y(), v.x()}; }
};

struct Facet {
  std::array<Corner, 3> corners;
  std::array<Vec3, 3> lifted;
  Frame frame;
  /// Corner positions in frame coordinates, relative to corner 0.
  std::array<Vec2, 3> planar;
  double signed_area = 0.0;
  double area = 0.0;
  /// Gradient of the barycentric coordinate of each corner, in frame coordinates.
  std::array<Vec2, 3> hat_gradient;
  /// Edge index of the side from corner k to corner k+1.
  std::array<std::size_t, 3> edges{};

  std::size_t vertex(int k) const { return corners[k].vertex; }
  Vec2 edge_vector(int k) const { return planar[(k + 1) % 3] - planar[k]; }
};

/// One occurrence of an edge inside a facet: the side from corner `local` to
/// corner `local + 1`. `forward` tells whether that side runs in the
/// canonical direction of the edge.
struct EdgeSide {
  std::size_t facet = 0;
  int local = 0;
  bool forward = true;
};

struct Edge {
  std::size_t v0 = 0;
  std::size_t v1 = 0;
  /// Lattice offset of the v1 end relative to the v0 end.
  LatticeOffset delta;
  std::vector<EdgeSide> sides;
};

struct SurfaceTopology {
  std::string name = "torus";
  int euler_characteristic = 0;
};

class TriangulatedSurface;
using MeshPtr = std::shared_ptr<const TriangulatedSurface>;

/// Immutable flat polyhedral surface. Construction does not validate; call
/// validate_mesh() for the list of violated invariants.
class TriangulatedSurface {
 public:
  /// Builds the surface from raw tables, deriving frames, areas, hat
  /// gradients and the edge table. Throws only on structurally unusable
  /// input (corner referencing a missing vertex).
  static MeshPtr assemble(std::vector<Vec3> vertex_positions, std::vector<FacetSpec> facets,
                          SurfaceTopology topology, std::optional<Lattice> lattice = std::nullopt);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t facet_count() const { return facets_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Vec3>& vertex_positions() const { return vertices_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Facet& facet(std::size_t f) const { return facets_[f]; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  const SurfaceTopology& topology() const { return topology_; }
  const std::optional<Lattice>& lattice() const { return lattice_; }
  bool planar() const { return planar_; }

  double total_area() const {
    double a = 0.0;
    for (const auto& f : facets_) a += f.area;
    return a;
  }

  /// Raw facet tables, suitable for re-assembly after modification.
  std::vector<FacetSpec> facet_specs() const {
    std::vector<FacetSpec> out;
    out.reserve(facets_.size());
    for (const auto& f : facets_) out.push_back({f.corners, f.lifted});
    return out;
  }

  /// Vertex adjacency lists (one entry per edge, loops skipped).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> vertex_edges() const {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(vertices_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto& ed = edges_[e];
      adj[ed.v0].push_back({ed.v1, e});
      if (ed.v0 != ed.v1) adj[ed.v1].push_back({ed.v0, e});
    }
    return adj;
  }

 private:
  TriangulatedSurface() = default;

  std::vector<Vec3> vertices_;
  std::vector<Facet> facets_;
  std::vector<Edge> edges_;
  SurfaceTopology topology_;
  std::optional<Lattice> lattice_;
  bool planar_ = true;
};

namespace detail {

// Canonical orientation of a side (va, oa) -> (vb, ob).
struct EdgeKey {
  std::size_t v0, v1;
  LatticeOffset delta;
  auto operator<=>(const EdgeKey&) const = default;
};

inline std::pair<EdgeKey, bool> canonical_edge(const Corner& from, const Corner& to) {
  const LatticeOffset d = to.offset - from.offset;
  const bool forward = from.vertex < to.vertex || (from.vertex == to.vertex && d > LatticeOffset{});
  if (forward) return {{from.vertex, to.vertex, d}, true};
  return {{to.vertex, from.vertex, -d}, false};
}

}  // namespace detail

inline MeshPtr TriangulatedSurface::assemble(std::vector<Vec3> vertex_positions,
                                             std::vector<FacetSpec> facets,
                                             SurfaceTopology topology,
                                             std::optional<Lattice> lattice) {
  auto mesh = std::shared_ptr<TriangulatedSurface>(new TriangulatedSurface());
  mesh->vertices_ = std::move(vertex_positions);
  mesh->topology_ = std::move(topology);
  mesh->lattice_ = lattice;

  bool planar = true;
  for (const auto& spec : facets)
    for (const auto& p : spec.lifted) planar = planar && p.z() == 0.0;
  mesh->planar_ = planar;

  std::map<detail::EdgeKey, std::size_t> edge_index;
  mesh->facets_.reserve(facets.size());
  for (std::size_t fi = 0; fi < facets.size(); ++fi) {
    const FacetSpec& spec = facets[fi];
    Facet f;
    f.corners = spec.corners;
    f.lifted = spec.lifted;
    for (const auto& c : f.corners) {
      if (c.vertex >= mesh->vertices_.size()) {
        throw Error("facet " + std::to_string(fi) + " references missing vertex " +
                    std::to_string(c.vertex));
      }
    }

    const Vec3 a = f.lifted[1] - f.lifted[0];
    const Vec3 b = f.lifted[2] - f.lifted[0];
    if (!planar) {
      const Vec3 n = a.cross(b);
      if (n.norm() > 0.0 && a.norm() > 0.0) {
        f.frame.e1 = a.normalized();
        f.frame.e2 = n.normalized().cross(f.frame.e1);
      }
    }
    for (int k = 0; k < 3; ++k) f.planar[k] = f.frame.coordinates(f.lifted[k] - f.lifted[0]);

    Eigen::Matrix2d E;
    E.col(0) = f.planar[1] - f.planar[0];
    E.col(1) = f.planar[2] - f.planar[0];
    f.signed_area = 0.5 * E.determinant();
    f.area = std::abs(f.signed_area);
    if (f.signed_area != 0.0) {
      // Rows of E^{-1} are the gradients of the barycentric coordinates of corners 1 and 2.
      const Eigen::Matrix2d Einv = E.inverse();
      f.hat_gradient[1] = Einv.row(0).transpose();
      f.hat_gradient[2] = Einv.row(1).transpose();
      f.hat_gradient[0] = -f.hat_gradient[1] - f.hat_gradient[2];
    } else {
      f.hat_gradient.fill(Vec2::Zero());
    }

    for (int k = 0; k < 3; ++k) {
      auto [key, forward] = detail::canonical_edge(f.corners[k], f.corners[(k + 1) % 3]);
      auto [it, inserted] = edge_index.try_emplace(key, mesh->edges_.size());
      if (inserted) mesh->edges_.push_back(Edge{key.v0, key.v1, key.delta, {}});
      mesh->edges_[it->second].sides.push_back({fi, k, forward});
      f.edges[k] = it->second;
    }
    mesh->facets_.push_back(std::move(f));
  }
  return mesh;
}

/// Hexagonal torus C / Gamma with Gamma = Z + Z e^{i pi/3}, refined N times:
/// N^2 vertices, 3N^2 edges, 2N^2 equilateral facets of area sqrt(3)/(4N^2).
inline MeshPtr build_torus_mesh(int n) {
  if (n < 1) throw Error("build_torus_mesh: N must be positive, got " + std::to_string(n));
  const Lattice lattice{Vec2(1.0, 0.0), Vec2(0.5, std::sqrt(3.0) / 2.0)};
  const double inv = 1.0 / n;
  auto lift = [&](int a, int b) {
    const Vec2 p = (a * inv) * lattice.period1 + (b * inv) * lattice.period2;
    return Vec3(p.x(), p.y(), 0.0);
  };
  auto corner = [&](int a, int b) {
    const int ra = ((a % n) + n) % n;
    const int rb = ((b % n) + n) % n;
    return Corner{static_cast<std::size_t>(ra + n * rb), {(a - ra) / n, (b - rb) / n}};
  };

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(n) * n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) vertices.push_back(lift(a, b));

  std::vector<FacetSpec> facets;
  facets.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a < n; ++a) {
      facets.push_back({{corner(a, b), corner(a + 1, b), corner(a, b + 1)},
                        {lift(a, b), lift(a + 1, b), lift(a, b + 1)}});
      facets.push_back({{corner(a + 1, b), corner(a + 1, b + 1), corner(a, b + 1)},
                        {lift(a + 1, b), lift(a + 1, b + 1), lift(a, b + 1)}});
    }
  }
  return TriangulatedSurface::assemble(std::move(vertices), std::move(facets),
                                       SurfaceTopology{"torus", 0}, lattice);
}

/// Lattice coordinates (theta1, theta2) of a point z = theta1*period1 + theta2*period2.
inline Vec2 lattice_coordinates(const Lattice& lattice, const Vec2& z) {
  Eigen::Matrix2d P;
  P.col(0) = lattice.period1;
  P.col(1) = lattice.period2;
  return P.lu().solve(z);
}

// ---------------------------------------------------------------------------
// Validation

enum class MeshCheck {
  frame,
  planarity,
  orientation,
  area,
  edge_incidence,
  edge_orientation,
  edge_length,
  euler_characteristic,
};

inline const char* to_string(MeshCheck c) {
  switch (c) {
    case MeshCheck::frame: return "frame";
    case MeshCheck::planarity: return "planarity";
    case MeshCheck::orientation: return "orientation";
    case MeshCheck::area: return "area";
    case MeshCheck::edge_incidence: return "edge_incidence";
    case MeshCheck::edge_orientation: return "edge_orientation";
    case MeshCheck::edge_length: return "edge_length";
    case MeshCheck::euler_characteristic: return "euler_characteristic";
  }
  return "unknown";
}

struct MeshViolation {
  MeshCheck check;
  std::string simplex;  // "facet 3", "edge 12" or "mesh"
  std::string message;

  std::string describe() const { return simplex + ": " + to_string(check) + ": " + message; }
};

/// All violated surface invariants; empty iff the mesh is valid.
inline std::vector<MeshViolation> validate_mesh(const TriangulatedSurface& mesh,
                                                double tolerance = 1e-12) {
  std::vector<MeshViolation> out;
  auto report = [&](MeshCheck c, std::string simplex, std::string msg) {
    out.push_back({c, std::move(simplex), std::move(msg)});
  };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
  };

  for (std::size_t fi = 0; fi < mesh.facet_count(); ++fi) {
    const Facet& f = mesh.facet(fi);
    const std::string name = "facet " + std::to_string(fi);
    const double ortho = std::max({std::abs(f.frame.e1.norm() - 1.0), std::abs(f.frame.e2.norm() - 1.0),
                                   std::abs(f.frame.e1.dot(f.frame.e2))});
    if (ortho > tolerance) report(MeshCheck::frame, name, "frame is not orthonormal (" + num(ortho) + ")");
    if (mesh.planar() && f.frame.e1.cross(f.frame.e2).z() < 1.0 - tolerance)
      report(MeshCheck::frame, name, "frame is not positively oriented in the plane");

    const Vec3 a = f.lifted[1] - f.lifted[0];
    const Vec3 b = f.lifted[2] - f.lifted[0];
    const Vec3 normal = f.frame.e1.cross(f.frame.e2);
    const double scale = std::max(a.norm(), b.norm());
    const double off_plane = std::max(std::abs(normal.dot(a)), std::abs(normal.dot(b)));
    if (off_plane > tolerance * std::max(scale, 1.0))
      report(MeshCheck::planarity, name, "corners leave the facet plane by " + num(off_plane));

    if (!(f.signed_area > 0.0))
      report(MeshCheck::orientation, name, "corner triple is not positively oriented");
    const double geometric = 0.5 * a.cross(b).norm();
    if (!(geometric > 0.0) || std::abs(f.area - geometric) > tolerance * geometric)
      report(MeshCheck::area, name, "stored area " + num(f.area) + " vs triangle area " + num(geometric));
  }

  for (std::size_t ei = 0; ei < mesh.edge_count(); ++ei) {
    const Edge& e = mesh.edge(ei);
    const std::string name = "edge " + std::to_string(ei);
    if (e.sides.size() != 2) {
      report(MeshCheck::edge_incidence, name,
             "bounds " + std::to_string(e.sides.size()) + " facets instead of 2");
      continue;
    }
    if (e.sides[0].forward == e.sides[1].forward)
      report(MeshCheck::edge_orientation, name, "incident facets induce the same orientation");
    const double l0 = mesh.facet(e.sides[0].facet).edge_vector(e.sides[0].local).norm();
    const double l1 = mesh.facet(e.sides[1].facet).edge_vector(e.sides[1].local).norm();
    if (!(l0 > 0.0) || std::abs(l0 - l1) > tolerance * std::max(1.0, l0))
      report(MeshCheck::edge_length, name, "lengths " + num(l0) + " and " + num(l1) + " disagree");
  }

  const long euler = static_cast<long>(mesh.vertex_count()) - static_cast<long>(mesh.edge_count()) +
                     static_cast<long>(mesh.facet_count());
  if (euler != mesh.topology().euler_characteristic)
    report(MeshCheck::euler_characteristic, "mesh",
           "V - E + F = " + std::to_string(euler) + ", declared " +
               std::to_string(mesh.topology().euler_characteristic));
  return out;
}

}  // namespace isoflow
