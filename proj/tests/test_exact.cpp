#include <gtest/gtest.h>

#include <cmath>

#include "isoflow/exact.hpp"
#include "isoflow/gram_schmidt.hpp"
#include "isoflow/io.hpp"
#include "isoflow/stiffness_report.hpp"
#include "oracles.hpp"

using namespace isoflow;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& S) { return Eigen::MatrixXd(S); }

// Two disjoint copies of a torus in one mesh.
MeshPtr two_tori(int n) {
  const MeshPtr a = build_torus_mesh(n);
  auto vertices = a->vertex_positions();
  auto facets = a->facet_specs();
  const std::size_t shift = vertices.size();
  for (std::size_t v = 0; v < shift; ++v) vertices.push_back(a->vertex_positions()[v] + Vec3(0, 0, 5));
  for (const FacetSpec& f : a->facet_specs()) {
    FacetSpec g = f;
    for (int k = 0; k < 3; ++k) {
      g.corners[k].vertex += shift;
      g.lifted[k] += Vec3(0, 0, 5);
    }
    facets.push_back(g);
  }
  return TriangulatedSurface::assemble(vertices, facets, {"torus", 0}, a->lattice());
}

}  // namespace

TEST(Differential, AffineInterpolation) {
  const MeshPtr mesh = build_torus_mesh(3);
  const PolyMap f = random_map(ExactProjector(mesh), TargetSpace{2}, 4, 1.0);
  const DiscreteOneForm F = differential(f);
  for (std::size_t s = 0; s < mesh->facet_count(); ++s) {
    const Facet& facet = mesh->facet(s);
    for (int k = 1; k < 3; ++k) {
      // F applied to the side from corner 0 to corner k reproduces the increment.
      const Vec2 e = facet.planar[k] - facet.planar[0];
      const Eigen::RowVectorXd inc = e.x() * F.block(s).row(0) + e.y() * F.block(s).row(1);
      EXPECT_LT((inc - (f.point(facet.vertex(k)) - f.point(facet.vertex(0)))).norm(), 1e-13);
    }
  }
}

TEST(Stiffness, MatchesQuadratureAndCotangentOracles) {
  for (const MeshPtr& mesh : {build_torus_mesh(2), build_torus_mesh(3), build_torus_mesh(7), oracle::tetrahedron()}) {
    const Eigen::MatrixXd L = dense(stiffness_matrix(*mesh));
    EXPECT_LE((L - oracle::stiffness_by_quadrature(*mesh)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((L - oracle::stiffness_by_cotangents(*mesh)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((L - L.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(L.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Stiffness, GramMatrixOfHatDifferentials) {
  const MeshPtr mesh = build_torus_mesh(3);
  const Eigen::MatrixXd L = dense(stiffness_matrix(*mesh));
  for (std::size_t a = 0; a < mesh->vertex_count(); ++a)
    for (std::size_t b = 0; b < mesh->vertex_count(); ++b) {
      const double g = inner_product(hat_differential(mesh, TargetSpace{2}, a, 1), hat_differential(mesh, TargetSpace{2}, b, 1));
      EXPECT_NEAR(g, L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), 1e-12);
      EXPECT_EQ(inner_product(hat_differential(mesh, TargetSpace{2}, a, 0), hat_differential(mesh, TargetSpace{2}, b, 1)), 0.0);
    }
}

TEST(Stiffness, HexagonalClosedForm) {
  // Six equilateral triangles around each vertex, each contributing
  // area * |grad|^2 = 1/sqrt(3) to the diagonal and cot(pi/3)/2 = 1/(2 sqrt 3)
  // (twice per edge) to the neighbours.
  for (int n = 3; n <= 8; ++n) {
    const Eigen::MatrixXd L = dense(stiffness_matrix(*build_torus_mesh(n)));
    EXPECT_NEAR(L(0, 0), 2.0 * std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(L(0, 1), -1.0 / std::sqrt(3.0), 1e-12);
    EXPECT_EQ((L.row(0).array().abs() > 1e-14).count(), 7);
  }
  // At N = 2 each neighbour is reached by two distinct edges.
  const Eigen::MatrixXd L2 = dense(stiffness_matrix(*build_torus_mesh(2)));
  EXPECT_NEAR(L2(0, 1), -2.0 / std::sqrt(3.0), 1e-12);
}

TEST(Stiffness, ComparisonReport) {
  const StiffnessReport rep = stiffness_comparison(4);
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& r : rep.rows) {
    EXPECT_NEAR(r.assembled, r.closed_form, 1e-12);
    EXPECT_NEAR(r.quadrature, r.closed_form, 1e-12);
    EXPECT_NEAR(r.cotangent, r.closed_form, 1e-12);
  }
  EXPECT_NEAR(rep.rows[0].published, 7.0 * std::sqrt(3.0) / 4.0, 1e-15);
  EXPECT_NEAR(rep.rows[1].published, -5.0 / (4.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_LE(rep.max_row_sum, 1e-12);
  EXPECT_LE(rep.max_quadrature_gap, 1e-12);
  EXPECT_THROW(stiffness_comparison(2), Error);
}

TEST(ExactProjector, MatchesDenseLeastSquares) {
  for (const MeshPtr& mesh : {build_torus_mesh(3), build_torus_mesh(5), oracle::tetrahedron()}) {
    const ExactProjector P(mesh);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const DiscreteOneForm F = random_form(mesh, TargetSpace{2}, seed);
      EXPECT_LE(norm(P.project(F) - oracle::dense_projection(F)), 1e-10 * norm(F));
    }
  }
}

TEST(ExactProjector, MatchesGramSchmidt) {
  for (int n = 1; n <= 6; ++n) {
    const MeshPtr mesh = build_torus_mesh(n);
    const ExactProjector P(mesh);
    const GramSchmidtProjector GS(mesh, TargetSpace{2});
    EXPECT_EQ(GS.rank(), P.basis_size(TargetSpace{2}));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const DiscreteOneForm F = random_form(mesh, TargetSpace{2}, seed);
      EXPECT_LE(norm(P.project(F) - GS.project(F)), 1e-8 * norm(F)) << "N = " << n;
    }
  }
}

TEST(ExactProjector, OrthogonalProjectionProperties) {
  const MeshPtr mesh = build_torus_mesh(6);
  const ExactProjector P(mesh);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DiscreteOneForm F = random_form(mesh, TargetSpace{2}, seed);
    const DiscreteOneForm H = random_form(mesh, TargetSpace{2}, seed + 50);
    const DiscreteOneForm PF = P.project(F);
    EXPECT_LE(norm(P.project(PF) - PF), 1e-12 * norm(F));
    EXPECT_NEAR(inner_product(PF, H), inner_product(F, P.project(H)), 1e-12 * norm(F) * norm(H));
    EXPECT_NEAR(inner_product(F - PF, PF), 0.0, 1e-12 * norm(F) * norm(F));
    const DiscreteOneForm E = random_exact(P, seed, 1.0);
    EXPECT_LE(norm(P.project(E) - E), 1e-12 * norm(E));
  }
}

TEST(ExactProjector, KillsConstantForms) {
  // Constant forms are harmonic on a flat torus, hence orthogonal to all exact forms.
  const MeshPtr mesh = build_torus_mesh(5);
  const ExactProjector P(mesh);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_LE(norm(P.project(coframe_form(mesh, TargetSpace{2}, i, j))), 1e-12);
}

TEST(ExactProjector, IndependentOfPinnedVertex) {
  const MeshPtr mesh = build_torus_mesh(4);
  const ExactProjector P0(mesh, 0), P7(mesh, 7);
  const DiscreteOneForm F = random_form(mesh, TargetSpace{2}, 2);
  EXPECT_LE(norm(P0.project(F) - P7.project(F)), 1e-12 * norm(F));
  EXPECT_THROW(ExactProjector(mesh, 16), Error);
}

TEST(ExactProjector, SingleVertexTorusHasNoExactForms) {
  const MeshPtr mesh = build_torus_mesh(1);
  const ExactProjector P(mesh);
  EXPECT_EQ(P.basis_size(TargetSpace{2}), 0u);
  EXPECT_EQ(norm(P.project(random_form(mesh, TargetSpace{2}, 1))), 0.0);
}

TEST(ExactProjector, DisconnectedMeshIsSingular) { EXPECT_THROW(ExactProjector{two_tori(3)}, SolveError); }

TEST(ExactProjector, RejectsFormsOnOtherMeshes) {
  const ExactProjector P(build_torus_mesh(3));
  EXPECT_THROW(P.project(DiscreteOneForm(build_torus_mesh(3), TargetSpace{2})), MismatchError);
}

TEST(Integration, RecoversMapModuloAnchor) {
  const MeshPtr mesh = build_torus_mesh(8);
  const PolyMap f = clifford_sample(mesh, 1.0);
  const PolyMap g = integrate(differential(f), 0, f.point(0));
  EXPECT_LE((g.values() - f.values()).cwiseAbs().maxCoeff(), 1e-10);

  const PolyMap shifted = integrate(differential(f), 5, Eigen::RowVectorXd::Zero(4));
  const Eigen::RowVectorXd delta = f.point(5);
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) EXPECT_LE((shifted.point(v) + delta - f.point(v)).norm(), 1e-10);
}

TEST(Integration, HatDifferentialIntegratesToHatFunction) {
  const MeshPtr mesh = build_torus_mesh(4);
  const PolyMap h = integrate(hat_differential(mesh, TargetSpace{1}, 6, 1), 0, Eigen::RowVectorXd::Zero(2));
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    EXPECT_NEAR(h.point(v)(0), 0.0, 1e-14);
    EXPECT_NEAR(h.point(v)(1), v == 6 ? 1.0 : 0.0, 1e-14);
  }
}

TEST(Integration, ConstantFormsHavePeriods) {
  const MeshPtr mesh = build_torus_mesh(4);
  const DiscreteOneForm C = coframe_form(mesh, TargetSpace{2}, 0, 0);
  const IntegrationReport rep = integrate_report(C, 0, Eigen::RowVectorXd::Zero(4));
  EXPECT_NEAR(rep.whitney_mismatch, 0.0, 1e-14);  // a Whitney form, but not exact
  EXPECT_GT(rep.period_defect, 0.5);
  EXPECT_GT(exactness_residual(C), 0.1 * norm(C));
  try {
    integrate(C, 0, Eigen::RowVectorXd::Zero(4));
    FAIL() << "expected NonExactError";
  } catch (const NonExactError& e) {
    EXPECT_LT(e.edge(), mesh->edge_count());
    EXPECT_GT(e.residual(), 0.5);
  }
}

TEST(Integration, RandomFormsAreNotWhitney) {
  const MeshPtr mesh = build_torus_mesh(4);
  const DiscreteOneForm F = random_form(mesh, TargetSpace{2}, 8);
  EXPECT_GT(integrate_report(F, 0, Eigen::RowVectorXd::Zero(4)).whitney_mismatch, 0.1);
  EXPECT_THROW(integrate(F, 0, Eigen::RowVectorXd::Zero(4)), NonExactError);
}

TEST(Integration, ExactFormsHaveTinyResidual) {
  const MeshPtr mesh = build_torus_mesh(6);
  const ExactProjector P(mesh);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DiscreteOneForm E = random_exact(P, seed, 2.0);
    EXPECT_LE(exactness_residual(E), 1e-12 * norm(E));
    const DiscreteOneForm PF = P.project(random_form(mesh, TargetSpace{2}, seed));
    EXPECT_LE(exactness_residual(PF), 1e-10 * norm(PF));
  }
}

TEST(Integration, CurvedSurface) {
  const MeshPtr mesh = oracle::tetrahedron();
  const ExactProjector P(mesh);
  const PolyMap f = random_map(P, TargetSpace{2}, 3, 1.0);
  const PolyMap g = integrate(differential(f), 0, f.point(0));
  EXPECT_LE((g.values() - f.values()).cwiseAbs().maxCoeff(), 1e-12);
}
