#pragma once

// Reference computations for the tests. Each one takes a different route from
// the library code it checks: explicit linear solves instead of stored
// gradients, complex arithmetic instead of real block formulas, dense QR
// instead of the sparse factorization, finite differences instead of
// closed-form derivatives.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "isoflow/exact.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/mesh.hpp"
#include "isoflow/moment.hpp"

namespace oracle {

using isoflow::DiscreteOneForm;
using isoflow::MeshPtr;
using isoflow::TargetSpace;
using isoflow::Vec2;
using isoflow::Vec3;

/// Barycentric coordinate gradients by solving [x y 1] c = e_k on the corners.
inline std::array<Vec2, 3> barycentric_gradients(const std::array<Vec2, 3>& p) {
  Eigen::Matrix3d A;
  for (int k = 0; k < 3; ++k) A.row(k) << p[k].x(), p[k].y(), 1.0;
  const Eigen::Matrix3d C = A.inverse();  // column k holds (a, b, c) of lambda_k
  std::array<Vec2, 3> g;
  for (int k = 0; k < 3; ++k) g[k] = Vec2(C(0, k), C(1, k));
  return g;
}

/// Intrinsic corner coordinates of a facet from its three edge lengths.
inline std::array<Vec2, 3> intrinsic_corners(const isoflow::Facet& f) {
  const double a = (f.lifted[1] - f.lifted[0]).norm();
  const double b = (f.lifted[2] - f.lifted[0]).norm();
  const double c = (f.lifted[2] - f.lifted[1]).norm();
  const double x = (a * a + b * b - c * c) / (2.0 * a);
  return {Vec2(0.0, 0.0), Vec2(a, 0.0), Vec2(x, std::sqrt(std::max(0.0, b * b - x * x)))};
}

/// Stiffness by summing element matrices area * grad(lambda_k) . grad(lambda_l).
inline Eigen::MatrixXd stiffness_by_quadrature(const isoflow::TriangulatedSurface& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& f : mesh.facets()) {
    const auto p = intrinsic_corners(f);
    const double area = 0.5 * std::abs((p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x());
    const auto g = barycentric_gradients(p);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        L(static_cast<Eigen::Index>(f.vertex(k)), static_cast<Eigen::Index>(f.vertex(l))) += area * g[k].dot(g[l]);
  }
  return L;
}

/// Cotangent weights from the law of cosines.
inline Eigen::MatrixXd stiffness_by_cotangents(const isoflow::TriangulatedSurface& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& f : mesh.facets()) {
    std::array<double, 3> len;  // len[k]: side opposite corner k
    for (int k = 0; k < 3; ++k) len[k] = (f.lifted[(k + 2) % 3] - f.lifted[(k + 1) % 3]).norm();
    for (int k = 0; k < 3; ++k) {
      const double a = len[k], b = len[(k + 1) % 3], c = len[(k + 2) % 3];
      const double angle = std::acos((b * b + c * c - a * a) / (2.0 * b * c));
      const double w = 0.5 / std::tan(angle);
      const auto i = static_cast<Eigen::Index>(f.vertex((k + 1) % 3));
      const auto j = static_cast<Eigen::Index>(f.vertex((k + 2) % 3));
      L(i, j) -= w;
      L(j, i) -= w;
      L(i, i) += w;
      L(j, j) += w;
    }
  }
  return L;
}

/// Per facet, writes each complex coordinate of the linear map as
/// v -> alpha v + beta conj(v) and returns -sum(|alpha|^2 - |beta|^2).
inline Eigen::VectorXd moment_by_complex_parts(const DiscreteOneForm& F) {
  Eigen::VectorXd mu(static_cast<Eigen::Index>(F.facet_count()));
  const std::complex<double> I(0.0, 1.0);
  for (std::size_t s = 0; s < F.facet_count(); ++s) {
    double acc = 0.0;
    for (int k = 0; k < F.target().m; ++k) {
      const std::complex<double> Ae1(F(s, 0, 2 * k), F(s, 0, 2 * k + 1));
      const std::complex<double> Ae2(F(s, 1, 2 * k), F(s, 1, 2 * k + 1));
      const std::complex<double> alpha = 0.5 * (Ae1 - I * Ae2);
      const std::complex<double> beta = 0.5 * (Ae1 + I * Ae2);
      acc += std::norm(alpha) - std::norm(beta);
    }
    mu[static_cast<Eigen::Index>(s)] = -acc;
  }
  return mu;
}

/// Projection onto the span of the hat differentials by dense least squares
/// in area-weighted coordinates.
inline DiscreteOneForm dense_projection(const DiscreteOneForm& F) {
  const auto& mesh = *F.mesh();
  const TargetSpace target = F.target();
  const auto rows = static_cast<Eigen::Index>(F.data().size());
  Eigen::VectorXd w(rows);
  for (std::size_t s = 0; s < mesh.facet_count(); ++s)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < target.real_dim(); ++j)
        w[static_cast<Eigen::Index>((s * 2 + static_cast<std::size_t>(i)) * static_cast<std::size_t>(target.real_dim()) +
                                    static_cast<std::size_t>(j))] = std::sqrt(mesh.facet(s).area);
  const auto cols = static_cast<Eigen::Index>(mesh.vertex_count()) * target.real_dim();
  Eigen::MatrixXd B(rows, cols);
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    for (int j = 0; j < target.real_dim(); ++j)
      B.col(static_cast<Eigen::Index>(v) * target.real_dim() + j) =
          w.cwiseProduct(isoflow::hat_differential(F.mesh(), target, v, j).data());
  const Eigen::VectorXd c = B.completeOrthogonalDecomposition().solve(w.cwiseProduct(F.data()));
  DiscreteOneForm out(F.mesh(), target);
  out.data() = (B * c).cwiseQuotient(w);
  return out;
}

/// Gradient of phi for the area-weighted metric by central differences of phi.
inline DiscreteOneForm gradient_by_differences(const DiscreteOneForm& F, double eps = 1e-6) {
  DiscreteOneForm g(F.mesh(), F.target());
  for (std::size_t s = 0; s < F.facet_count(); ++s)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < F.cols(); ++j) {
        DiscreteOneForm a = F, b = F;
        a(s, i, j) += eps;
        b(s, i, j) -= eps;
        g(s, i, j) = (isoflow::energy(a) - isoflow::energy(b)) / (2.0 * eps) / F.mesh()->facet(s).area;
      }
  return g;
}

/// Boundary of a tetrahedron: a closed non-flat polyhedral sphere.
inline MeshPtr tetrahedron() {
  const std::vector<Vec3> v = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  std::vector<isoflow::FacetSpec> facets;
  const int faces[4][3] = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  for (const auto& t : faces) {
    isoflow::FacetSpec spec;
    for (int k = 0; k < 3; ++k) {
      spec.corners[k] = {static_cast<std::size_t>(t[k]), {}};
      spec.lifted[k] = v[static_cast<std::size_t>(t[k])];
    }
    facets.push_back(spec);
  }
  return isoflow::TriangulatedSurface::assemble(v, facets, {"sphere", 2});
}

}  // namespace oracle
