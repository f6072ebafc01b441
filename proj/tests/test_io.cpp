#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "isoflow/config.hpp"
#include "isoflow/io.hpp"
#include "oracles.hpp"

using namespace isoflow;

TEST(Clifford, VerticesLieOnTheProductTorus) {
  const MeshPtr mesh = build_torus_mesh(8);
  const double r = 1.7;
  const PolyMap f = clifford_sample(mesh, r);
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    const auto p = f.point(v);
    EXPECT_NEAR(p(0) * p(0) + p(1) * p(1), r * r, 1e-12);
    EXPECT_NEAR(p(2) * p(2) + p(3) * p(3), r * r, 1e-12);
  }
  // Vertex (a, b) sits at angles 2 pi a / N and 2 pi b / N.
  EXPECT_NEAR(f.point(3 + 8 * 5)(0), r * std::cos(2 * std::numbers::pi * 3 / 8), 1e-12);
  EXPECT_NEAR(f.point(3 + 8 * 5)(3), r * std::sin(2 * std::numbers::pi * 5 / 8), 1e-12);
}

TEST(Clifford, ZeroRadiusAndPreconditions) {
  const MeshPtr mesh = build_torus_mesh(4);
  const DiscreteOneForm F = differential(clifford_sample(mesh, 0.0));
  EXPECT_EQ(norm(F), 0.0);
  EXPECT_EQ(energy(F), 0.0);
  EXPECT_THROW(clifford_sample(mesh, 1.0, TargetSpace{3}), Error);
  EXPECT_THROW(clifford_sample(oracle::tetrahedron(), 1.0), Error);
}

TEST(RandomExact, Contract) {
  const MeshPtr mesh = build_torus_mesh(5);
  const ExactProjector P(mesh);
  EXPECT_EQ(norm(random_exact(P, 3, 0.0)), 0.0);
  const DiscreteOneForm a = random_exact(P, 42, 1.5);
  const DiscreteOneForm b = random_exact(P, 42, 1.5);
  EXPECT_EQ(std::memcmp(a.data().data(), b.data().data(), sizeof(double) * static_cast<std::size_t>(a.data().size())), 0);
  EXPECT_NE(random_exact(P, 43, 1.5).data(), a.data());
  EXPECT_LE(exactness_residual(a), 1e-12 * norm(a));
  EXPECT_THROW(random_exact(P, 1, -1.0), Error);
  const PolyMap f = random_map(P, TargetSpace{2}, 42, 1.5);
  EXPECT_LE(f.values().cwiseAbs().maxCoeff(), 1.5);
  EXPECT_EQ(f.point(P.pinned_vertex()).norm(), 0.0);
}

TEST(Obj, CountsAndCoordinates) {
  const MeshPtr mesh = build_torus_mesh(4);
  const PolyMap f = clifford_sample(mesh, 1.0);
  const Projection proj = Projection::drop_last(TargetSpace{2});
  std::stringstream ss;
  write_obj(ss, f, proj);
  const ObjData obj = read_obj(ss);
  ASSERT_EQ(obj.vertices.size(), mesh->vertex_count());
  ASSERT_EQ(obj.faces.size(), mesh->facet_count());
  for (std::size_t v = 0; v < obj.vertices.size(); ++v)
    EXPECT_LE((obj.vertices[v] - Eigen::Vector3d(f.point(v)(0), f.point(v)(1), f.point(v)(2))).norm(), 1e-15);
  EXPECT_EQ(obj.faces[1][0], mesh->facet(1).vertex(0));
}

TEST(Obj, ConstantMapCollapses) {
  const MeshPtr mesh = build_torus_mesh(3);
  PolyMap f(mesh, TargetSpace{2});
  f.values().rowwise() = Eigen::RowVector4d(1, -2, 3, 9);
  std::stringstream ss;
  write_obj(ss, f, Projection::coordinates(TargetSpace{2}, {3, 0, 1}));
  for (const auto& p : read_obj(ss).vertices) EXPECT_EQ(p, Eigen::Vector3d(9, 1, -2));
}

TEST(Projection, Validation) {
  EXPECT_THROW(Projection::coordinates(TargetSpace{2}, {0, 0, 1}), Error);
  EXPECT_THROW(Projection::coordinates(TargetSpace{2}, {0, 1, 4}), Error);
  Eigen::MatrixXd M(3, 4);
  M << 1, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0;
  EXPECT_THROW(Projection{M}.validate(TargetSpace{2}), Error);
  EXPECT_THROW(Projection::drop_last(TargetSpace{1}), Error);
}

TEST(FileFormats, MeshRoundTrip) {
  for (const MeshPtr& mesh : {build_torus_mesh(5), oracle::tetrahedron()}) {
    std::stringstream ss;
    write_mesh(ss, *mesh);
    const MeshPtr back = read_mesh(ss);
    ASSERT_EQ(back->vertex_count(), mesh->vertex_count());
    ASSERT_EQ(back->facet_count(), mesh->facet_count());
    EXPECT_EQ(back->edge_count(), mesh->edge_count());
    EXPECT_EQ(back->topology().euler_characteristic, mesh->topology().euler_characteristic);
    EXPECT_EQ(back->lattice().has_value(), mesh->lattice().has_value());
    for (std::size_t s = 0; s < mesh->facet_count(); ++s)
      for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(back->facet(s).corners[k].vertex, mesh->facet(s).corners[k].vertex);
        EXPECT_EQ(back->facet(s).corners[k].offset, mesh->facet(s).corners[k].offset);
        EXPECT_LE((back->facet(s).lifted[k] - mesh->facet(s).lifted[k]).norm(), 1e-15);
      }
    EXPECT_TRUE(validate_mesh(*back).empty());
  }
}

TEST(FileFormats, MeshParseErrors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_mesh(in);
  };
  EXPECT_THROW(parse("not-a-mesh 1\n"), ParseError);
  EXPECT_THROW(parse("isoflow-mesh 1\nvertices 1 2\n0 0 0\nfacets 1\n0 0 0 0 0 1 0 0 0 1\n"), ParseError);
  EXPECT_THROW(parse("isoflow-mesh 1\nvertices 1 2\n0 0 0\nfacets 1\n0 0 0 0 5 0 0 0 0 0\n"), ParseError);
  EXPECT_THROW(parse("isoflow-mesh 1\nbogus\n"), ParseError);
  EXPECT_THROW(parse("isoflow-mesh 1\nvertices 2 2\n0 0 0\n"), ParseError);
}

TEST(FileFormats, FormRoundTrips) {
  const MeshPtr mesh = build_torus_mesh(3);
  const DiscreteOneForm F = random_form(mesh, TargetSpace{3}, 5);
  {
    std::stringstream ss;
    write_form_text(ss, F);
    EXPECT_EQ(read_form_text(ss, mesh, TargetSpace{3}).data(), F.data());
  }
  {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_form_binary(ss, F);
    const DiscreteOneForm back = read_form_binary(ss, mesh);
    EXPECT_EQ(back.target(), F.target());
    EXPECT_EQ(back.data(), F.data());
  }
}

TEST(FileFormats, FormParseErrors) {
  const MeshPtr mesh = build_torus_mesh(2);
  auto text = [&](const std::string& s) {
    std::istringstream in(s);
    return read_form_text(in, mesh, TargetSpace{2});
  };
  EXPECT_EQ(text("# comment\n3 2 4 1.5\n")(3, 1, 3), 1.5);
  EXPECT_THROW(text("3 3 1 1.0\n"), ParseError);
  EXPECT_THROW(text("99 1 1 1.0\n"), ParseError);
  EXPECT_THROW(text("1 1 1\n"), ParseError);
  EXPECT_THROW(text("1 1 1 nan\n"), ParseError);

  std::istringstream bad("NOTAFORM");
  EXPECT_THROW(read_form_binary(bad, mesh), ParseError);
  const DiscreteOneForm other = random_form(build_torus_mesh(3), TargetSpace{2}, 1);
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  write_form_binary(ss, other);
  EXPECT_THROW(read_form_binary(ss, mesh), MismatchError);
}

TEST(FileFormats, MapDensityTraceRoundTrips) {
  const MeshPtr mesh = build_torus_mesh(4);
  const PolyMap f = clifford_sample(mesh, 1.3);
  {
    std::stringstream ss;
    write_map(ss, f);
    EXPECT_EQ(read_map(ss, mesh, TargetSpace{2}).values(), f.values());
  }
  {
    std::istringstream partial("0 1 2 3 4\n");
    EXPECT_THROW(read_map(partial, mesh, TargetSpace{2}), ParseError);
  }
  {
    const MomentDensity mu = moment_map(differential(f));
    std::stringstream ss;
    write_density(ss, mu);
    EXPECT_EQ(read_density(ss, mesh).values(), mu.values());
  }
  {
    FlowTrace trace;
    trace.records.push_back({0, 0.0, 1.0 / 3.0, 2.0, 1e-3, 0.1, 0.7});
    trace.records.push_back({7, 0.123456789012345678, 1e-300, 1.5, 2e-3, 0.0, 0.0});
    std::stringstream ss;
    write_trace_header(ss);
    for (const auto& r : trace.records) write_trace_row(ss, r);
    const FlowTrace back = read_trace(ss);
    ASSERT_EQ(back.records.size(), 2u);
    EXPECT_EQ(back.records[1].step, 7u);
    EXPECT_EQ(back.records[1].t, trace.records[1].t);
    EXPECT_EQ(back.records[0].phi, trace.records[0].phi);
    EXPECT_EQ(back.records[1].phi, 1e-300);
    std::istringstream headerless("0\t0\t0\t0\t0\t0\t0\n");
    EXPECT_THROW(read_trace(headerless), ParseError);
  }
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_run_config(nlohmann::json::object());
  EXPECT_EQ(c.mesh.n.value(), 8);
  EXPECT_EQ(c.target.m, 2);
  EXPECT_EQ(c.initial.kind, InitialKind::clifford);
  EXPECT_EQ(c.flow.h0, 1e-3);
  EXPECT_FALSE(c.flow.tol_phi.has_value());
  EXPECT_TRUE(std::isinf(c.flow.max_time));
  EXPECT_TRUE(c.lifted);

  const auto j = nlohmann::json::parse(R"({
    "mesh": {"n": 5}, "initial": {"kind": "random", "seed": 3, "amplitude": 0.5},
    "flow": {"tol_phi": 1e-14, "h0": 0.01, "max_step": null},
    "renorm": {"mode": "descent"}, "output": {"dir": "x"},
    "projection": {"matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,1]]}})");
  const RunConfig d = parse_run_config(j);
  EXPECT_EQ(d.mesh.n.value(), 5);
  EXPECT_EQ(d.initial.kind, InitialKind::random);
  EXPECT_EQ(d.initial.seed, 3u);
  EXPECT_EQ(d.flow.tol_phi.value(), 1e-14);
  EXPECT_TRUE(std::isinf(d.flow.max_step));
  EXPECT_FALSE(d.renorm.ascent);
  EXPECT_EQ(d.output.resolve("a.txt"), (std::filesystem::path("x") / "a.txt").string());
  EXPECT_EQ(d.projection().matrix(2, 3), 1.0);
}

TEST(Config, Errors) {
  auto bad = [](const char* text) { return parse_run_config(nlohmann::json::parse(text)); };
  EXPECT_THROW(bad(R"({"mesh": {"n": 4, "file": "a"}})"), ParseError);
  EXPECT_THROW(bad(R"({"initial": {"kind": "spiral"}})"), ParseError);
  EXPECT_THROW(bad(R"({"initial": {"kind": "map_file"}})"), ParseError);
  EXPECT_THROW(bad(R"({"flow": {"h0": "fast"}})"), ParseError);
  EXPECT_THROW(bad(R"({"flow": {"h0": -1}})"), Error);
  EXPECT_THROW(bad(R"({"target": {"m": 0}})"), ParseError);
  EXPECT_THROW(bad(R"({"renorm": {"mode": "sideways"}})"), ParseError);
  EXPECT_THROW(bad(R"({"projection": {"coords": [0, 0, 1]}})"), Error);
  EXPECT_THROW(bad(R"({"projection": {"matrix": [[1,0,0,0],[0,1,0,0]]}})"), ParseError);
}

TEST(Config, FilePathsAreRelativeToTheConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "isoflow_config_test";
  std::filesystem::create_directories(dir / "sub");
  const MeshPtr mesh = build_torus_mesh(3);
  write_file((dir / "sub" / "t3.mesh").string(), [&](std::ostream& s) { write_mesh(s, *mesh); });
  const PolyMap f = clifford_sample(mesh, 2.0);
  write_file((dir / "sub" / "f.txt").string(), [&](std::ostream& s) { write_map(s, f); });
  {
    std::ofstream cfg(dir / "sub" / "run.json");
    cfg << R"({"mesh": {"file": "t3.mesh"}, "initial": {"kind": "map_file", "path": "f.txt"}})";
  }
  const RunConfig c = load_run_config((dir / "sub" / "run.json").string());
  const MeshPtr loaded = c.load_mesh();
  EXPECT_EQ(loaded->vertex_count(), 9u);
  const ExactProjector P(loaded);
  EXPECT_LE((initial_map(c, loaded, P).values() - f.values()).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_run_config((dir / "missing.json").string()), Error);
}

TEST(Config, PerturbedCliffordStart) {
  RunConfig c;
  c.mesh.n = 6;
  c.initial.perturbation = 0.1;
  const MeshPtr mesh = c.load_mesh();
  const ExactProjector P(mesh);
  const DiscreteOneForm clean = differential(clifford_sample(mesh, 1.0));
  const DiscreteOneForm perturbed = differential(initial_map(c, mesh, P));
  EXPECT_NEAR(norm(perturbed - clean) / norm(clean), 0.1, 1e-12);
}
