#pragma once

// Initial conditions and flat-file formats.
//
//   mesh     "isoflow-mesh 1" text: topology, optional lattice, vertex and facet tables
//   form     text rows "facet_id i j value" (i, j 1-based) or raw binary
//   map      text rows "vertex_id x1 ... x2m"
//   density  text rows "facet_id mu"
//   trace    tab-separated diagnostics with a header row
//   OBJ      projected vertex positions and the facet table

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isoflow/error.hpp"
#include "isoflow/exact.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/mesh.hpp"

namespace isoflow {

// ---------------------------------------------------------------------------
// Initial conditions

/// Product torus f = r (cos 2pi t1, sin 2pi t1, cos 2pi t2, sin 2pi t2) at the
/// vertices, where (t1, t2) are lattice coordinates. Each complex coordinate
/// depends on one lattice coordinate only, so the smooth map is isotropic.
inline PolyMap clifford_sample(const MeshPtr& mesh, double r, TargetSpace target = {}) {
  if (target.m != 2) throw Error("clifford_sample: requires complex dimension m = 2");
  if (!mesh->lattice() || !mesh->planar()) throw Error("clifford_sample: requires a flat torus mesh with a lattice");
  PolyMap f(mesh, target);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    const Vec3& p = mesh->vertex_positions()[v];
    const Vec2 theta = lattice_coordinates(*mesh->lattice(), Vec2(p.x(), p.y()));
    f.point(v) << r * std::cos(two_pi * theta.x()), r * std::sin(two_pi * theta.x()), r * std::cos(two_pi * theta.y()),
        r * std::sin(two_pi * theta.y());
  }
  return f;
}

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Seeded random polyhedral map with coordinates uniform in [-amplitude, amplitude]
/// on every unpinned vertex (zero on the pinned one).
inline PolyMap random_map(const ExactProjector& P, TargetSpace target, std::uint64_t seed, double amplitude) {
  if (!(amplitude >= 0.0)) throw Error("random_map: amplitude must be nonnegative");
  std::mt19937_64 rng(seed);
  PolyMap f(P.mesh(), target);
  for (std::size_t v = 0; v < f.vertex_count(); ++v) {
    for (int j = 0; j < target.real_dim(); ++j) {
      const double u = detail::unit_uniform(rng);
      if (v != P.pinned_vertex()) f.values()(static_cast<Eigen::Index>(v), j) = amplitude * (2.0 * u - 1.0);
    }
  }
  return f;
}

/// Seeded combination of hat differentials; exact by construction.
inline DiscreteOneForm random_exact(const ExactProjector& P, std::uint64_t seed, double amplitude,
                                    TargetSpace target = {}) {
  return differential(random_map(P, target, seed, amplitude));
}

/// Seeded form with independent coefficients uniform in [-amplitude, amplitude];
/// generally not exact.
inline DiscreteOneForm random_form(const MeshPtr& mesh, TargetSpace target, std::uint64_t seed,
                                   double amplitude = 1.0) {
  std::mt19937_64 rng(seed);
  DiscreteOneForm F(mesh, target);
  for (Eigen::Index k = 0; k < F.data().size(); ++k) F.data()[k] = amplitude * (2.0 * detail::unit_uniform(rng) - 1.0);
  return F;
}

// ---------------------------------------------------------------------------
// Projection to R^3 and OBJ

/// Linear map R^{2m} -> R^3 used for geometry export.
struct Projection {
  Eigen::MatrixXd matrix;  // 3 x 2m

  /// Keeps the listed coordinates (0-based).
  static Projection coordinates(TargetSpace target, std::array<int, 3> coords) {
    Projection p{Eigen::MatrixXd::Zero(3, target.real_dim())};
    for (int r = 0; r < 3; ++r) {
      if (coords[r] < 0 || coords[r] >= target.real_dim()) throw Error("Projection: coordinate out of range");
      p.matrix(r, coords[r]) = 1.0;
    }
    p.validate(target);
    return p;
  }
  /// Default: drop the last coordinate (x4 for C^2).
  static Projection drop_last(TargetSpace target) {
    if (target.real_dim() < 3) throw Error("Projection: target has fewer than 3 real coordinates");
    return coordinates(target, {0, 1, 2});
  }

  void validate(TargetSpace target) const {
    if (matrix.rows() != 3 || matrix.cols() != target.real_dim())
      throw Error("Projection: matrix must be 3 x " + std::to_string(target.real_dim()));
    if (!matrix.allFinite()) throw Error("Projection: non-finite entries");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(matrix);
    lu.setThreshold(1e-12);
    if (lu.rank() < 3) throw Error("Projection: rows are not linearly independent");
  }
};

inline void write_obj(std::ostream& out, const PolyMap& f, const Projection& projection) {
  projection.validate(f.target());
  out << "# isoflow polyhedral map, " << f.vertex_count() << " vertices, " << f.mesh()->facet_count() << " faces\n";
  out << std::setprecision(17);
  for (std::size_t v = 0; v < f.vertex_count(); ++v) {
    const Eigen::Vector3d p = projection.matrix * f.point(v).transpose();
    out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  for (const Facet& facet : f.mesh()->facets())
    out << "f " << facet.vertex(0) + 1 << ' ' << facet.vertex(1) + 1 << ' ' << facet.vertex(2) + 1 << '\n';
}

struct ObjData {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::size_t, 3>> faces;  // 0-based
};

inline ObjData read_obj(std::istream& in) {
  ObjData obj;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw ParseError("OBJ: malformed vertex line: " + line);
      obj.vertices.push_back(p);
    } else if (tag == "f") {
      std::array<std::size_t, 3> face{};
      for (auto& idx : face) {
        std::string tok;
        if (!(ls >> tok)) throw ParseError("OBJ: malformed face line: " + line);
        idx = std::stoul(tok.substr(0, tok.find('/'))) - 1;
      }
      obj.faces.push_back(face);
    }
  }
  return obj;
}

// ---------------------------------------------------------------------------
// Mesh files

inline void write_mesh(std::ostream& out, const TriangulatedSurface& mesh) {
  out << std::setprecision(17);
  out << "isoflow-mesh 1\n";
  out << "topology " << mesh.topology().name << ' ' << mesh.topology().euler_characteristic << '\n';
  if (mesh.lattice()) {
    const auto& L = *mesh.lattice();
    out << "lattice " << L.period1.x() << ' ' << L.period1.y() << ' ' << L.period2.x() << ' ' << L.period2.y() << '\n';
  }
  const int dim = mesh.planar() ? 2 : 3;
  out << "vertices " << mesh.vertex_count() << ' ' << dim << '\n';
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& p = mesh.vertex_positions()[v];
    out << v << ' ' << p.x() << ' ' << p.y();
    if (dim == 3) out << ' ' << p.z();
    out << '\n';
  }
  out << "facets " << mesh.facet_count() << '\n';
  for (std::size_t f = 0; f < mesh.facet_count(); ++f) {
    out << f;
    for (const Corner& c : mesh.facet(f).corners) out << ' ' << c.vertex << ' ' << c.offset.a << ' ' << c.offset.b;
    out << '\n';
  }
}

namespace detail {

inline std::string next_content_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return line;
  }
  throw ParseError("unexpected end of file");
}

}  // namespace detail

inline MeshPtr read_mesh(std::istream& in) {
  std::istringstream head(detail::next_content_line(in));
  std::string magic;
  int version = 0;
  head >> magic >> version;
  if (magic != "isoflow-mesh" || version != 1) throw ParseError("mesh: expected header 'isoflow-mesh 1'");

  SurfaceTopology topology;
  std::optional<Lattice> lattice;
  std::vector<Vec3> vertices;
  std::size_t nv = 0;
  int dim = 2;
  for (;;) {
    std::istringstream ls(detail::next_content_line(in));
    std::string key;
    ls >> key;
    if (key == "topology") {
      if (!(ls >> topology.name >> topology.euler_characteristic)) throw ParseError("mesh: malformed topology line");
    } else if (key == "lattice") {
      Lattice L;
      if (!(ls >> L.period1.x() >> L.period1.y() >> L.period2.x() >> L.period2.y()))
        throw ParseError("mesh: malformed lattice line");
      lattice = L;
    } else if (key == "vertices") {
      if (!(ls >> nv >> dim) || (dim != 2 && dim != 3)) throw ParseError("mesh: malformed vertices line");
      break;
    } else {
      throw ParseError("mesh: unexpected key '" + key + "'");
    }
  }
  vertices.assign(nv, Vec3::Zero());
  for (std::size_t i = 0; i < nv; ++i) {
    std::istringstream ls(detail::next_content_line(in));
    std::size_t id;
    Vec3 p = Vec3::Zero();
    if (!(ls >> id >> p.x() >> p.y())) throw ParseError("mesh: malformed vertex row");
    if (dim == 3 && !(ls >> p.z())) throw ParseError("mesh: malformed vertex row");
    if (id >= nv) throw ParseError("mesh: vertex id out of range");
    vertices[id] = p;
  }
  std::istringstream fl(detail::next_content_line(in));
  std::string key;
  std::size_t nf = 0;
  if (!(fl >> key >> nf) || key != "facets") throw ParseError("mesh: expected 'facets <count>'");
  std::vector<FacetSpec> facets(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    std::istringstream ls(detail::next_content_line(in));
    std::size_t id;
    if (!(ls >> id) || id >= nf) throw ParseError("mesh: malformed facet row");
    FacetSpec spec;
    for (int k = 0; k < 3; ++k) {
      Corner& c = spec.corners[k];
      if (!(ls >> c.vertex >> c.offset.a >> c.offset.b)) throw ParseError("mesh: malformed facet row");
      if (c.vertex >= nv) throw ParseError("mesh: facet references missing vertex");
      if ((c.offset.a != 0 || c.offset.b != 0) && !lattice)
        throw ParseError("mesh: lattice offsets require a lattice line");
      Vec3 p = vertices[c.vertex];
      if (lattice) {
        const Vec2 t = lattice->translation(c.offset);
        p.x() += t.x();
        p.y() += t.y();
      }
      spec.lifted[k] = p;
    }
    facets[id] = spec;
  }
  return TriangulatedSurface::assemble(std::move(vertices), std::move(facets), topology, lattice);
}

// ---------------------------------------------------------------------------
// Forms

inline void write_form_text(std::ostream& out, const DiscreteOneForm& F) {
  out << "# isoflow-form facets " << F.facet_count() << " m " << F.target().m << '\n';
  out << "# facet_id i j value\n";
  out << std::setprecision(17);
  for (std::size_t f = 0; f < F.facet_count(); ++f)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < F.cols(); ++j) out << f << ' ' << i + 1 << ' ' << j + 1 << ' ' << F(f, i, j) << '\n';
}

/// Rows may appear in any order; missing coefficients are zero.
inline DiscreteOneForm read_form_text(std::istream& in, const MeshPtr& mesh, TargetSpace target) {
  DiscreteOneForm F(mesh, target);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::size_t f;
    int i, j;
    double value;
    if (!(ls >> f >> i >> j >> value)) throw ParseError("form: malformed row: " + line);
    if (f >= F.facet_count() || i < 1 || i > 2 || j < 1 || j > F.cols())
      throw ParseError("form: index out of range: " + line);
    F(f, i - 1, j - 1) = value;
  }
  if (!F.all_finite()) throw ParseError("form: non-finite coefficient");
  return F;
}

// Raw binary layout, little-endian:
//   char[8]  "ISOFORM1"
//   uint64   facet count
//   uint32   m
//   uint32   reserved (0)
//   double   coefficients, facet-major, then i (2 rows), then j (2m columns)
inline constexpr char kFormMagic[8] = {'I', 'S', 'O', 'F', 'O', 'R', 'M', '1'};

inline void write_form_binary(std::ostream& out, const DiscreteOneForm& F) {
  static_assert(std::endian::native == std::endian::little, "binary form layout assumes a little-endian host");
  const std::uint64_t facets = F.facet_count();
  const std::uint32_t m = static_cast<std::uint32_t>(F.target().m);
  const std::uint32_t reserved = 0;
  out.write(kFormMagic, sizeof kFormMagic);
  out.write(reinterpret_cast<const char*>(&facets), sizeof facets);
  out.write(reinterpret_cast<const char*>(&m), sizeof m);
  out.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out.write(reinterpret_cast<const char*>(F.data().data()), static_cast<std::streamsize>(F.data().size() * sizeof(double)));
}

inline DiscreteOneForm read_form_binary(std::istream& in, const MeshPtr& mesh) {
  char magic[8];
  std::uint64_t facets = 0;
  std::uint32_t m = 0, reserved = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&facets), sizeof facets);
  in.read(reinterpret_cast<char*>(&m), sizeof m);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  if (!in || std::memcmp(magic, kFormMagic, sizeof magic) != 0) throw ParseError("form: bad binary header");
  if (facets != mesh->facet_count()) throw MismatchError("form: binary facet count does not match mesh");
  DiscreteOneForm F(mesh, TargetSpace{static_cast<int>(m)});
  in.read(reinterpret_cast<char*>(F.data().data()), static_cast<std::streamsize>(F.data().size() * sizeof(double)));
  if (!in) throw ParseError("form: truncated binary payload");
  return F;
}

// ---------------------------------------------------------------------------
// Maps and densities

inline void write_map(std::ostream& out, const PolyMap& f) {
  out << "# isoflow-map vertices " << f.vertex_count() << " m " << f.target().m << '\n';
  out << "# vertex_id";
  for (int j = 0; j < f.target().real_dim(); ++j) out << " x" << j + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t v = 0; v < f.vertex_count(); ++v) {
    out << v;
    for (int j = 0; j < f.target().real_dim(); ++j) out << ' ' << f.values()(static_cast<Eigen::Index>(v), j);
    out << '\n';
  }
}

inline PolyMap read_map(std::istream& in, const MeshPtr& mesh, TargetSpace target) {
  PolyMap f(mesh, target);
  std::vector<char> seen(f.vertex_count(), 0);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::size_t v;
    if (!(ls >> v) || v >= f.vertex_count()) throw ParseError("map: malformed row: " + line);
    for (int j = 0; j < target.real_dim(); ++j)
      if (!(ls >> f.values()(static_cast<Eigen::Index>(v), j))) throw ParseError("map: malformed row: " + line);
    seen[v] = 1;
  }
  for (std::size_t v = 0; v < seen.size(); ++v)
    if (!seen[v]) throw ParseError("map: missing vertex " + std::to_string(v));
  if (!f.values().allFinite()) throw ParseError("map: non-finite coordinate");
  return f;
}

inline void write_density(std::ostream& out, const MomentDensity& mu) {
  out << "# facet_id mu\n" << std::setprecision(17);
  for (std::size_t f = 0; f < mu.size(); ++f) out << f << ' ' << mu[f] << '\n';
}

inline MomentDensity read_density(std::istream& in, const MeshPtr& mesh) {
  MomentDensity mu(mesh);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::size_t f;
    double v;
    if (!(ls >> f >> v) || f >= mu.size()) throw ParseError("density: malformed row: " + line);
    mu[f] = v;
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Diagnostics

inline constexpr const char* kTraceHeader = "step\tt\tphi\tl2norm\th\tgrad_norm\tsoliton_residual";

inline void write_trace_header(std::ostream& out) { out << kTraceHeader << '\n'; }

inline void write_trace_row(std::ostream& out, const FlowRecord& r) {
  out << std::setprecision(17) << r.step << '\t' << r.t << '\t' << r.phi << '\t' << r.l2norm << '\t' << r.h << '\t'
      << r.grad_norm << '\t' << r.soliton_residual << '\n';
}

inline FlowTrace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError("trace: missing header row");
  FlowTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FlowRecord r;
    if (!(ls >> r.step >> r.t >> r.phi >> r.l2norm >> r.h >> r.grad_norm >> r.soliton_residual))
      throw ParseError("trace: malformed row: " + line);
    trace.records.push_back(r);
  }
  return trace;
}

// File-path conveniences.

template <class Writer>
void write_file(const std::string& path, Writer&& writer, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  writer(out);
  if (!out) throw Error("failed writing '" + path + "'");
}

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

}  // namespace isoflow
