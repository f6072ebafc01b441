#pragma once

// Dense reference projector onto F0(T): the hat differentials F^{a,j} (pinned
// vertex excluded) are orthonormalized by modified Gram-Schmidt against the
// L2 metric G, and Pi(F) = sum_k <F, e_k> e_k. Quadratic memory and cubic
// time; only meant for small meshes, as an independent check of the sparse
// projector.

#include <cstddef>
#include <vector>

#include "isoflow/exact.hpp"
#include "isoflow/forms.hpp"

namespace isoflow {

class GramSchmidtProjector {
 public:
  GramSchmidtProjector(const MeshPtr& mesh, TargetSpace target, std::size_t pinned = 0) : target_(target) {
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
      if (v == pinned) continue;
      for (int j = 0; j < target.real_dim(); ++j) {
        DiscreteOneForm e = hat_differential(mesh, target, v, j);
        // Two passes keep the basis orthonormal to working precision.
        for (int pass = 0; pass < 2; ++pass)
          for (const auto& q : basis_) e -= inner_product(e, q) * q;
        const double n = norm(e);
        if (n > 1e-12) basis_.push_back((1.0 / n) * e);
      }
    }
  }

  std::size_t rank() const { return basis_.size(); }
  const std::vector<DiscreteOneForm>& basis() const { return basis_; }

  DiscreteOneForm project(const DiscreteOneForm& F) const {
    DiscreteOneForm out(F.mesh(), F.target());
    for (const auto& q : basis_) out += inner_product(F, q) * q;
    return out;
  }

 private:
  TargetSpace target_;
  std::vector<DiscreteOneForm> basis_;
};

}  // namespace isoflow
