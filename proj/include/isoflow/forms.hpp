#pragma once

// V-valued discrete 1-forms, constant on each facet, with the flat Kaehler
// package of the moduli space: the L2 metric, the complex structure J (acting
// on the source), multiplication by i (acting on the target), the involution
// R = iJ, the Kaehler form, the gauge action and the pointwise pullback of the
// target symplectic form.
//
// Coefficients are stored in each facet's orthonormal coframe:
//   F_sigma = sum_{i,j} F(sigma, i, j) du_i (x) d/dx_j,   i in {0,1}, j in [0, 2m).
// Target columns (2k, 2k+1) form the k-th complex line, i d/dx_{2k} = d/dx_{2k+1}.

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isoflow/error.hpp"
#include "isoflow/mesh.hpp"

namespace isoflow {

/// Target V = C^m with its flat Kaehler structure; real dimension 2m.
struct TargetSpace {
  int m = 2;

  int real_dim() const { return 2 * m; }
  friend bool operator==(const TargetSpace&, const TargetSpace&) = default;
};

/// Per-facet real scalar: an element of the Lie algebra of the real gauge torus.
class MomentDensity {
 public:
  MomentDensity() = default;
  explicit MomentDensity(MeshPtr mesh) : mesh_(std::move(mesh)), values_(Eigen::VectorXd::Zero(mesh_->facet_count())) {}
  MomentDensity(MeshPtr mesh, Eigen::VectorXd values) : mesh_(std::move(mesh)), values_(std::move(values)) {
    if (values_.size() != static_cast<Eigen::Index>(mesh_->facet_count()))
      throw MismatchError("MomentDensity: value count does not match facet count");
  }

  static MomentDensity constant(MeshPtr mesh, double v) {
    MomentDensity z(std::move(mesh));
    z.values_.setConstant(v);
    return z;
  }

  const MeshPtr& mesh() const { return mesh_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  double operator[](std::size_t f) const { return values_[static_cast<Eigen::Index>(f)]; }
  double& operator[](std::size_t f) { return values_[static_cast<Eigen::Index>(f)]; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

 private:
  MeshPtr mesh_;
  Eigen::VectorXd values_;
};

/// L2 pairing of densities against the facet area forms.
inline double density_inner(const MomentDensity& a, const MomentDensity& b) {
  if (a.mesh() != b.mesh()) throw MismatchError("density_inner: densities live on different meshes");
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) s += a.mesh()->facet(f).area * a[f] * b[f];
  return s;
}

/// Element of F(T): one 2 x 2m coefficient block per facet.
class DiscreteOneForm {
 public:
  using Block = Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstBlock = Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic, Eigen::RowMajor>>;

  DiscreteOneForm() = default;
  DiscreteOneForm(MeshPtr mesh, TargetSpace target)
      : mesh_(std::move(mesh)), target_(target),
        data_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh_->facet_count()) * 2 * target.real_dim())) {
    if (target.m < 1) throw Error("TargetSpace: complex dimension must be at least 1");
  }
  DiscreteOneForm(MeshPtr mesh, TargetSpace target, Eigen::VectorXd data)
      : mesh_(std::move(mesh)), target_(target), data_(std::move(data)) {
    if (data_.size() != static_cast<Eigen::Index>(mesh_->facet_count()) * 2 * target.real_dim())
      throw MismatchError("DiscreteOneForm: coefficient count does not match mesh and target");
  }

  /// The same constant coefficients on every facet.
  static DiscreteOneForm constant(MeshPtr mesh, TargetSpace target, const Eigen::MatrixXd& block) {
    DiscreteOneForm F(std::move(mesh), target);
    for (std::size_t f = 0; f < F.facet_count(); ++f) F.block(f) = block;
    return F;
  }

  const MeshPtr& mesh() const { return mesh_; }
  const TargetSpace& target() const { return target_; }
  std::size_t facet_count() const { return mesh_ ? mesh_->facet_count() : 0; }
  int cols() const { return target_.real_dim(); }

  double operator()(std::size_t f, int i, int j) const { return data_[index(f, i, j)]; }
  double& operator()(std::size_t f, int i, int j) { return data_[index(f, i, j)]; }

  Block block(std::size_t f) { return Block(data_.data() + offset(f), 2, cols()); }
  ConstBlock block(std::size_t f) const { return ConstBlock(data_.data() + offset(f), 2, cols()); }

  const Eigen::VectorXd& data() const { return data_; }
  Eigen::VectorXd& data() { return data_; }

  bool same_space(const DiscreteOneForm& o) const { return mesh_ == o.mesh_ && target_ == o.target_; }
  void require_same_space(const DiscreteOneForm& o, const char* op) const {
    if (!same_space(o)) throw MismatchError(std::string(op) + ": forms live on different meshes or targets");
  }

  bool all_finite() const { return data_.allFinite(); }

  DiscreteOneForm& operator+=(const DiscreteOneForm& o) {
    require_same_space(o, "operator+=");
    data_ += o.data_;
    return *this;
  }
  DiscreteOneForm& operator-=(const DiscreteOneForm& o) {
    require_same_space(o, "operator-=");
    data_ -= o.data_;
    return *this;
  }
  DiscreteOneForm& operator*=(double s) {
    data_ *= s;
    return *this;
  }
  friend DiscreteOneForm operator+(DiscreteOneForm a, const DiscreteOneForm& b) { return a += b; }
  friend DiscreteOneForm operator-(DiscreteOneForm a, const DiscreteOneForm& b) { return a -= b; }
  friend DiscreteOneForm operator*(double s, DiscreteOneForm a) { return a *= s; }
  friend DiscreteOneForm operator*(DiscreteOneForm a, double s) { return a *= s; }
  friend DiscreteOneForm operator-(DiscreteOneForm a) { return a *= -1.0; }

 private:
  Eigen::Index offset(std::size_t f) const { return static_cast<Eigen::Index>(f) * 2 * cols(); }
  Eigen::Index index(std::size_t f, int i, int j) const { return offset(f) + i * cols() + j; }

  MeshPtr mesh_;
  TargetSpace target_;
  Eigen::VectorXd data_;
};

/// Basis form du_i (x) d/dx_j on every facet.
inline DiscreteOneForm coframe_form(MeshPtr mesh, TargetSpace target, int i, int j) {
  DiscreteOneForm F(std::move(mesh), target);
  for (std::size_t f = 0; f < F.facet_count(); ++f) F(f, i, j) = 1.0;
  return F;
}

/// G(F, H) = sum over facets of area * <F_sigma, H_sigma>.
inline double inner_product(const DiscreteOneForm& F, const DiscreteOneForm& H) {
  F.require_same_space(H, "inner_product");
  double s = 0.0;
  for (std::size_t f = 0; f < F.facet_count(); ++f)
    s += F.mesh()->facet(f).area * F.block(f).cwiseProduct(H.block(f)).sum();
  return s;
}

inline double norm(const DiscreteOneForm& F) { return std::sqrt(inner_product(F, F)); }

/// Pointwise squared norms |F_sigma|^2.
inline MomentDensity facet_norm_sq(const DiscreteOneForm& F) {
  MomentDensity out(F.mesh());
  for (std::size_t f = 0; f < F.facet_count(); ++f) out[f] = F.block(f).squaredNorm();
  return out;
}

/// (JF)_sigma = -F_sigma o J_sigma, i.e. (JF)_{0j} = -F_{1j}, (JF)_{1j} = F_{0j}.
inline DiscreteOneForm apply_J(const DiscreteOneForm& F) {
  DiscreteOneForm out(F.mesh(), F.target());
  for (std::size_t f = 0; f < F.facet_count(); ++f) {
    auto src = F.block(f);
    auto dst = out.block(f);
    dst.row(0) = -src.row(1);
    dst.row(1) = src.row(0);
  }
  return out;
}

/// Multiplication by i on the target: d/dx_{2k} -> d/dx_{2k+1} -> -d/dx_{2k}.
inline DiscreteOneForm apply_i(const DiscreteOneForm& F) {
  DiscreteOneForm out(F.mesh(), F.target());
  const int m = F.target().m;
  for (std::size_t f = 0; f < F.facet_count(); ++f) {
    auto src = F.block(f);
    auto dst = out.block(f);
    for (int k = 0; k < m; ++k) {
      dst.col(2 * k + 1) = src.col(2 * k);
      dst.col(2 * k) = -src.col(2 * k + 1);
    }
  }
  return out;
}

/// The involution R = iJ; its +1 eigenspace is the complex-linear forms.
inline DiscreteOneForm apply_R(const DiscreteOneForm& F) {
  DiscreteOneForm out(F.mesh(), F.target());
  const int m = F.target().m;
  for (std::size_t f = 0; f < F.facet_count(); ++f) {
    auto src = F.block(f);
    auto dst = out.block(f);
    for (int k = 0; k < m; ++k) {
      const int re = 2 * k;
      const int im = 2 * k + 1;
      // J then i, written out: (RF)_{0,re} = F_{1,im}, (RF)_{0,im} = -F_{1,re},
      //                        (RF)_{1,re} = -F_{0,im}, (RF)_{1,im} = F_{0,re}.
      dst(0, re) = src(1, im);
      dst(0, im) = -src(1, re);
      dst(1, re) = -src(0, im);
      dst(1, im) = src(0, re);
    }
  }
  return out;
}

struct SplitForm {
  DiscreteOneForm plus;
  DiscreteOneForm minus;
};

/// F = F+ + F- with F+- = (F +- RF)/2.
inline SplitForm split_pm(const DiscreteOneForm& F) {
  const DiscreteOneForm RF = apply_R(F);
  return {0.5 * (F + RF), 0.5 * (F - RF)};
}

/// Facetwise multiplication by complex scalars: c F = Re(c) F + Im(c) iF.
inline DiscreteOneForm complex_multiply(std::span<const std::complex<double>> c, const DiscreteOneForm& F) {
  if (c.size() != F.facet_count()) throw MismatchError("complex_multiply: one scalar per facet required");
  const DiscreteOneForm iF = apply_i(F);
  DiscreteOneForm out(F.mesh(), F.target());
  for (std::size_t f = 0; f < F.facet_count(); ++f)
    out.block(f) = c[f].real() * F.block(f) + c[f].imag() * iF.block(f);
  return out;
}

/// Complexified gauge action lambda . F = conj(lambda)^{-1} F+ + lambda F-.
inline DiscreteOneForm gauge_act(std::span<const std::complex<double>> lambda, const DiscreteOneForm& F) {
  if (lambda.size() != F.facet_count()) throw MismatchError("gauge_act: one scalar per facet required");
  std::vector<std::complex<double>> inv_conj(lambda.size());
  for (std::size_t f = 0; f < lambda.size(); ++f) {
    if (lambda[f] == std::complex<double>(0.0, 0.0))
      throw Error("gauge_act: gauge parameter vanishes on facet " + std::to_string(f));
    inv_conj[f] = 1.0 / std::conj(lambda[f]);
  }
  const SplitForm s = split_pm(F);
  return complex_multiply(inv_conj, s.plus) + complex_multiply(lambda, s.minus);
}

/// Omega(A, B) = G(JA, B).
inline double kahler_form(const DiscreteOneForm& A, const DiscreteOneForm& B) {
  A.require_same_space(B, "kahler_form");
  return inner_product(apply_J(A), B);
}

/// X_zeta(F) = i zeta F for a real density zeta.
inline DiscreteOneForm infinitesimal_action(const MomentDensity& zeta, const DiscreteOneForm& F) {
  if (zeta.mesh() != F.mesh()) throw MismatchError("infinitesimal_action: density and form on different meshes");
  DiscreteOneForm out = apply_i(F);
  for (std::size_t f = 0; f < F.facet_count(); ++f) out.block(f) *= zeta[f];
  return out;
}

/// omega_V(F(e1), F(e2)) on each facet, the pullback density F*omega_V / omega_sigma.
inline MomentDensity pullback_density(const DiscreteOneForm& F) {
  MomentDensity out(F.mesh());
  const int m = F.target().m;
  for (std::size_t f = 0; f < F.facet_count(); ++f) {
    auto b = F.block(f);
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += b(0, 2 * k) * b(1, 2 * k + 1) - b(0, 2 * k + 1) * b(1, 2 * k);
    out[f] = s;
  }
  return out;
}

}  // namespace isoflow
