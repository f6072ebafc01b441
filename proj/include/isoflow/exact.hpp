#pragma once

// Exact forms: polyhedral maps, their differentials, the hat-function basis
// of F0(T), the scalar stiffness matrix and the G-orthogonal projector onto
// F0(T), and integration of exact forms back to maps.

#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "isoflow/error.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/mesh.hpp"

namespace isoflow {

/// Polyhedral map: one point of V = R^{2m} per vertex, affine on each facet.
class PolyMap {
 public:
  PolyMap() = default;
  PolyMap(MeshPtr mesh, TargetSpace target)
      : mesh_(std::move(mesh)), target_(target),
        values_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh_->vertex_count()), target.real_dim())) {}
  PolyMap(MeshPtr mesh, TargetSpace target, Eigen::MatrixXd values)
      : mesh_(std::move(mesh)), target_(target), values_(std::move(values)) {
    if (values_.rows() != static_cast<Eigen::Index>(mesh_->vertex_count()) || values_.cols() != target.real_dim())
      throw MismatchError("PolyMap: value table does not match mesh and target");
  }

  const MeshPtr& mesh() const { return mesh_; }
  const TargetSpace& target() const { return target_; }
  std::size_t vertex_count() const { return static_cast<std::size_t>(values_.rows()); }

  auto point(std::size_t v) const { return values_.row(static_cast<Eigen::Index>(v)); }
  auto point(std::size_t v) { return values_.row(static_cast<Eigen::Index>(v)); }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

 private:
  MeshPtr mesh_;
  TargetSpace target_;
  Eigen::MatrixXd values_;
};

/// df: on each facet, the linear part of the affine interpolant of the corner values.
inline DiscreteOneForm differential(const PolyMap& f) {
  DiscreteOneForm F(f.mesh(), f.target());
  const auto& mesh = *f.mesh();
  for (std::size_t s = 0; s < mesh.facet_count(); ++s) {
    const Facet& facet = mesh.facet(s);
    auto block = F.block(s);
    // The hat gradients sum to zero, so differences against corner 0 suffice
    // and constant maps give an exactly zero form.
    const auto base = f.point(facet.vertex(0));
    for (int k = 1; k < 3; ++k) {
      const Eigen::RowVectorXd value = f.point(facet.vertex(k)) - base;
      block.row(0) += facet.hat_gradient[k].x() * value;
      block.row(1) += facet.hat_gradient[k].y() * value;
    }
  }
  return F;
}

/// F^{vertex, j} = d(hat_vertex) (x) d/dx_j.
inline DiscreteOneForm hat_differential(const MeshPtr& mesh, TargetSpace target, std::size_t vertex, int j) {
  if (vertex >= mesh->vertex_count()) throw Error("hat_differential: no vertex " + std::to_string(vertex));
  if (j < 0 || j >= target.real_dim()) throw Error("hat_differential: target index out of range");
  PolyMap hat(mesh, target);
  hat.values()(static_cast<Eigen::Index>(vertex), j) = 1.0;
  return differential(hat);
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// L_ab = <d hat_a, d hat_b>, assembled facet by facet (constant integrand times area).
inline SparseMatrix stiffness_matrix(const TriangulatedSurface& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.facet_count());
  for (const Facet& f : mesh.facets()) {
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        triplets.emplace_back(static_cast<int>(f.vertex(k)), static_cast<int>(f.vertex(l)),
                              f.area * f.hat_gradient[k].dot(f.hat_gradient[l]));
  }
  const int n = static_cast<int>(mesh.vertex_count());
  SparseMatrix L(n, n);
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

/// G-orthogonal projection onto F0(T), realized by a prefactorized solve of
/// the stiffness system with one vertex pinned. The scalar factorization is
/// shared by all 2m target coordinates. Immutable after construction.
class ExactProjector {
 public:
  explicit ExactProjector(MeshPtr mesh, std::size_t pinned = 0) : mesh_(std::move(mesh)), pinned_(pinned) {
    const std::size_t n = mesh_->vertex_count();
    if (pinned_ >= n) throw Error("ExactProjector: pinned vertex out of range");
    full_ = stiffness_matrix(*mesh_);

    reduced_index_.assign(n, -1);
    int next = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (v != pinned_) reduced_index_[v] = next++;

    std::vector<Eigen::Triplet<double>> triplets;
    for (int col = 0; col < full_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(full_, col); it; ++it) {
        const int r = reduced_index_[static_cast<std::size_t>(it.row())];
        const int c = reduced_index_[static_cast<std::size_t>(it.col())];
        if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
      }
    reduced_ = SparseMatrix(next, next);
    reduced_.setFromTriplets(triplets.begin(), triplets.end());

    if (next > 0) {
      solver_.compute(reduced_);
      if (solver_.info() != Eigen::Success)
        throw SolveError("ExactProjector: stiffness factorization failed (invalid mesh?)");
      // A zero pivot of a singular system survives factorization as rounding noise.
      const Eigen::VectorXd d = solver_.vectorD();
      if (!(d.minCoeff() > 1e-12 * d.cwiseAbs().maxCoeff()))
        throw SolveError("ExactProjector: reduced stiffness matrix is not positive definite (invalid mesh?)");
    }
  }

  const MeshPtr& mesh() const { return mesh_; }
  std::size_t pinned_vertex() const { return pinned_; }
  /// Full stiffness matrix, before pinning.
  const SparseMatrix& stiffness() const { return full_; }
  /// Stiffness restricted to unpinned vertices.
  const SparseMatrix& reduced_stiffness() const { return reduced_; }
  /// Reduced row/column of a vertex, or -1 for the pinned vertex.
  int reduced_index(std::size_t v) const { return reduced_index_[v]; }
  std::size_t basis_size(TargetSpace target) const { return (mesh_->vertex_count() - 1) * target.real_dim(); }

  /// Right-hand side b_{a,j} = <F, F^{a,j}> for every vertex a.
  Eigen::MatrixXd basis_pairings(const DiscreteOneForm& F) const {
    require_mesh(F);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh_->vertex_count()), F.cols());
    for (std::size_t s = 0; s < mesh_->facet_count(); ++s) {
      const Facet& facet = mesh_->facet(s);
      const auto block = F.block(s);
      for (int k = 0; k < 3; ++k) {
        const Vec2& g = facet.hat_gradient[k];
        b.row(static_cast<Eigen::Index>(facet.vertex(k))) += facet.area * (g.x() * block.row(0) + g.y() * block.row(1));
      }
    }
    return b;
  }

  /// The map u, vanishing at the pinned vertex, with du = Pi(F).
  PolyMap potential(const DiscreteOneForm& F) const {
    const Eigen::MatrixXd b = basis_pairings(F);
    PolyMap u(mesh_, F.target());
    if (reduced_.rows() == 0) return u;
    Eigen::MatrixXd rhs(reduced_.rows(), F.cols());
    for (std::size_t v = 0; v < mesh_->vertex_count(); ++v)
      if (reduced_index_[v] >= 0) rhs.row(reduced_index_[v]) = b.row(static_cast<Eigen::Index>(v));
    const Eigen::MatrixXd c = solver_.solve(rhs);
    if (solver_.info() != Eigen::Success) throw SolveError("ExactProjector: solve failed");
    for (std::size_t v = 0; v < mesh_->vertex_count(); ++v)
      if (reduced_index_[v] >= 0) u.values().row(static_cast<Eigen::Index>(v)) = c.row(reduced_index_[v]);
    return u;
  }

  DiscreteOneForm project(const DiscreteOneForm& F) const { return differential(potential(F)); }

 private:
  void require_mesh(const DiscreteOneForm& F) const {
    if (F.mesh() != mesh_) throw MismatchError("ExactProjector: form lives on a different mesh");
  }

  MeshPtr mesh_;
  std::size_t pinned_;
  SparseMatrix full_;
  SparseMatrix reduced_;
  std::vector<int> reduced_index_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

inline DiscreteOneForm project_exact(const ExactProjector& P, const DiscreteOneForm& F) { return P.project(F); }

// ---------------------------------------------------------------------------
// Integration

/// Outcome of spanning-tree integration of a form.
struct IntegrationReport {
  PolyMap map;
  /// Largest disagreement between the two incident facets' edge pullbacks.
  double whitney_mismatch = 0.0;
  /// Largest period defect over non-tree edges.
  double period_defect = 0.0;
  std::size_t worst_edge = 0;

  double residual() const { return std::max(whitney_mismatch, period_defect); }
};

namespace detail {

// F_sigma applied to the side's edge vector, oriented from edge.v0 to edge.v1.
inline Eigen::RowVectorXd edge_increment(const DiscreteOneForm& F, const EdgeSide& side) {
  const Facet& facet = F.mesh()->facet(side.facet);
  const Vec2 w = facet.edge_vector(side.local);
  const auto block = F.block(side.facet);
  Eigen::RowVectorXd inc = w.x() * block.row(0) + w.y() * block.row(1);
  if (!side.forward) inc = -inc;
  return inc;
}

}  // namespace detail

/// Breadth-first integration from (x0, v0) without any exactness check.
inline IntegrationReport integrate_report(const DiscreteOneForm& F, std::size_t x0, const Eigen::RowVectorXd& v0) {
  const auto& mesh = *F.mesh();
  if (x0 >= mesh.vertex_count()) throw Error("integrate: anchor vertex out of range");
  if (v0.size() != F.cols()) throw MismatchError("integrate: anchor point has the wrong dimension");

  IntegrationReport rep{PolyMap(F.mesh(), F.target())};
  double worst = -1.0;
  auto note = [&](std::size_t e, double r) {
    if (r > worst) {
      worst = r;
      rep.worst_edge = e;
    }
  };

  std::vector<Eigen::RowVectorXd> increments(mesh.edge_count());
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    const Edge& edge = mesh.edge(e);
    if (edge.sides.empty()) continue;
    increments[e] = detail::edge_increment(F, edge.sides[0]);
    for (std::size_t s = 1; s < edge.sides.size(); ++s) {
      const double r = (detail::edge_increment(F, edge.sides[s]) - increments[e]).norm();
      rep.whitney_mismatch = std::max(rep.whitney_mismatch, r);
      note(e, r);
    }
  }

  std::vector<char> visited(mesh.vertex_count(), 0);
  std::vector<char> tree_edge(mesh.edge_count(), 0);
  const auto adjacency = mesh.vertex_edges();
  std::deque<std::size_t> queue{x0};
  visited[x0] = 1;
  rep.map.point(x0) = v0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (const auto& [w, e] : adjacency[u]) {
      if (visited[w] || increments[e].size() == 0) continue;
      const Edge& edge = mesh.edge(e);
      rep.map.point(w) = rep.map.point(u) + (edge.v0 == u ? increments[e] : Eigen::RowVectorXd(-increments[e]));
      visited[w] = 1;
      tree_edge[e] = 1;
      queue.push_back(w);
    }
  }
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    if (!visited[v]) throw Error("integrate: mesh is disconnected (vertex " + std::to_string(v) + " unreachable)");

  for (std::size_t e = 0; e < mesh.edge_count(); ++e) {
    if (tree_edge[e] || increments[e].size() == 0) continue;
    const Edge& edge = mesh.edge(e);
    const double r = (rep.map.point(edge.v1) - rep.map.point(edge.v0) - increments[e]).norm();
    rep.period_defect = std::max(rep.period_defect, r);
    note(e, r);
  }
  return rep;
}

/// Max over edges of the Whitney mismatch and the period defect; zero iff F is exact.
inline double exactness_residual(const DiscreteOneForm& F) {
  if (F.mesh()->vertex_count() == 0) return 0.0;
  return integrate_report(F, 0, Eigen::RowVectorXd::Zero(F.cols())).residual();
}

inline constexpr double kDefaultExactnessTolerance = 1e-8;

/// chi(F): the unique map with df = F and f(x0) = v0. Rejects forms whose
/// residual exceeds tolerance * ||F||.
inline PolyMap integrate(const DiscreteOneForm& F, std::size_t x0, const Eigen::RowVectorXd& v0,
                         double tolerance = kDefaultExactnessTolerance) {
  IntegrationReport rep = integrate_report(F, x0, v0);
  const double limit = tolerance * norm(F);
  if (rep.residual() > limit) {
    throw NonExactError(rep.worst_edge, rep.residual(),
                        "integrate: form is not exact; residual " + std::to_string(rep.residual()) +
                            " on edge " + std::to_string(rep.worst_edge) + " exceeds " + std::to_string(limit));
  }
  return std::move(rep.map);
}

}  // namespace isoflow
