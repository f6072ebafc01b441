#pragma once

// Moment map of the real gauge torus and its energy.

#include "isoflow/exact.hpp"
#include "isoflow/forms.hpp"

namespace isoflow {

/// mu(F)(sigma) = -1/2 <(RF)_sigma, F_sigma>.
inline MomentDensity moment_map(const DiscreteOneForm& F) {
  const DiscreteOneForm RF = apply_R(F);
  MomentDensity mu(F.mesh());
  for (std::size_t f = 0; f < F.facet_count(); ++f) mu[f] = -0.5 * RF.block(f).cwiseProduct(F.block(f)).sum();
  return mu;
}

inline double energy_of_density(const MomentDensity& mu) { return 0.5 * density_inner(mu, mu); }

/// phi(F) = 1/2 ||mu(F)||^2.
inline double energy(const DiscreteOneForm& F) { return energy_of_density(moment_map(F)); }

/// Gradient of phi on F(T): -mu(F) RF, facetwise.
inline DiscreteOneForm gradient(const DiscreteOneForm& F) {
  const MomentDensity mu = moment_map(F);
  DiscreteOneForm g = apply_R(F);
  for (std::size_t f = 0; f < F.facet_count(); ++f) g.block(f) *= -mu[f];
  return g;
}

/// Gradient of phi restricted to F0(T): Pi(grad phi(F)). F is assumed exact.
inline DiscreteOneForm restricted_gradient(const ExactProjector& P, const DiscreteOneForm& F) {
  return P.project(gradient(F));
}

/// D mu|_F . Fdot = -<RF, Fdot> facetwise.
inline MomentDensity moment_map_derivative(const DiscreteOneForm& F, const DiscreteOneForm& Fdot) {
  F.require_same_space(Fdot, "moment_map_derivative");
  const DiscreteOneForm RF = apply_R(F);
  MomentDensity out(F.mesh());
  for (std::size_t f = 0; f < F.facet_count(); ++f) out[f] = -RF.block(f).cwiseProduct(Fdot.block(f)).sum();
  return out;
}

}  // namespace isoflow
