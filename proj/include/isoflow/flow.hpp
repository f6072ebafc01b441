#pragma once

// Time integration of the modified moment map flow dF/dt = -Pi grad phi(F)
// on exact forms, its lift to polyhedral maps, the norm-preserving
// renormalized flow, soliton search and regularity diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "isoflow/error.hpp"
#include "isoflow/exact.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/moment.hpp"

namespace isoflow {

struct FlowConfig {
  double h0 = 1e-3;
  std::size_t max_steps = 200000;
  /// Defaults scale with the initial norm: 1e-12 (1 + |F0|^4) and 1e-9 (1 + |F0|^3).
  std::optional<double> tol_phi;
  std::optional<double> tol_grad;
  double shrink = 0.5;
  double grow = 1.5;
  /// Accepted steps in a row before the step is grown.
  int grow_after = 3;
  double max_step = std::numeric_limits<double>::infinity();
  double max_time = std::numeric_limits<double>::infinity();
  std::size_t trace_stride = 1;
  /// Measure the exactness residual of every accepted iterate.
  bool monitor_exactness = true;

  void validate() const {
    if (!(h0 > 0.0)) throw Error("FlowConfig: h0 must be positive");
    if (tol_phi && !(*tol_phi > 0.0)) throw Error("FlowConfig: tol_phi must be positive");
    if (tol_grad && !(*tol_grad > 0.0)) throw Error("FlowConfig: tol_grad must be positive");
    if (!(shrink > 0.0 && shrink < 1.0 && grow > 1.0)) throw Error("FlowConfig: need 0 < shrink < 1 < grow");
    if (grow_after < 1) throw Error("FlowConfig: grow_after must be at least 1");
    if (!(max_step > 0.0)) throw Error("FlowConfig: max_step must be positive");
    if (trace_stride < 1) throw Error("FlowConfig: trace_stride must be at least 1");
  }
};

struct FlowRecord {
  std::size_t step = 0;
  double t = 0.0;
  double phi = 0.0;
  double l2norm = 0.0;
  double h = 0.0;
  double grad_norm = 0.0;
  double soliton_residual = 0.0;
};

struct FlowTrace {
  std::vector<FlowRecord> records;
};

enum class Termination { converged, max_steps, stalled, max_time };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_steps: return "max_steps";
    case Termination::stalled: return "stalled";
    case Termination::max_time: return "max_time";
  }
  return "unknown";
}

/// Quantities checked along every accepted step.
struct FlowMonitor {
  /// max |(|F_{k+1}|^2 - |F_k|^2)/h + 8 phi(F_k)| / (h |grad|^2)
  double norm_law_ratio = 0.0;
  /// max (|F_{k+1}|^2 - |F_k|^2) / (h^2 |grad|^2), positive only if the norm grew
  double norm_growth_ratio = 0.0;
  /// max exactness residual / |F|
  double exactness_ratio = 0.0;
  /// number of accepted steps where phi increased (must stay 0)
  std::size_t energy_increases = 0;
};

struct FlowResult {
  DiscreteOneForm final;
  Termination reason = Termination::max_steps;
  FlowTrace trace;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double time = 0.0;
  double tol_phi = 0.0;
  double tol_grad = 0.0;
  FlowMonitor monitor;
};

using FlowObserver = std::function<void(const FlowRecord&, const DiscreteOneForm&)>;

namespace detail {

inline double soliton_residual_from(double phi, double l2norm, const DiscreteOneForm& F, const DiscreteOneForm& g) {
  const double kappa = 4.0 * phi / (l2norm * l2norm);
  const double a = norm(g);
  const double b = kappa * l2norm;
  const double floor = 1e-14 * std::max(1.0, l2norm * l2norm * l2norm);
  if (a <= floor && b <= floor) return 0.0;
  return norm(g - kappa * F) / std::max(a, b);
}

}  // namespace detail

/// One explicit Euler step F - h grad0 phi(F).
inline DiscreteOneForm flow_step(const ExactProjector& P, const DiscreteOneForm& F, double h) {
  if (!(h > 0.0)) throw Error("flow_step: step must be positive");
  return F - h * restricted_gradient(P, F);
}

/// |grad0 phi(F) - kappa F| / max(|grad0 phi(F)|, kappa |F|) with kappa = 4 phi / |F|^2.
inline double soliton_residual(const ExactProjector& P, const DiscreteOneForm& F) {
  const double n = norm(F);
  if (!(n > 0.0)) throw Error("soliton_residual: zero form");
  return detail::soliton_residual_from(energy(F), n, F, restricted_gradient(P, F));
}

/// Adaptive explicit Euler: a step is accepted iff phi does not increase;
/// rejected steps halve h, streaks of accepted steps grow it.
inline FlowResult run_flow(const ExactProjector& P, const DiscreteOneForm& F0, const FlowConfig& cfg,
                           const FlowObserver& observer = {}) {
  cfg.validate();
  const double n0 = norm(F0);
  {
    const double r = exactness_residual(F0);
    if (r > kDefaultExactnessTolerance * n0)
      throw NonExactError(0, r, "run_flow: initial form is not exact (residual " + std::to_string(r) + ")");
  }

  FlowResult res;
  res.tol_phi = cfg.tol_phi.value_or(1e-12 * (1.0 + std::pow(n0, 4)));
  res.tol_grad = cfg.tol_grad.value_or(1e-9 * (1.0 + std::pow(n0, 3)));

  DiscreteOneForm F = F0;
  double phi = energy(F);
  DiscreteOneForm g = restricted_gradient(P, F);
  double gn = norm(g);
  double fn = n0;
  double t = 0.0;
  double h = cfg.h0;
  int streak = 0;
  std::size_t last_recorded = std::numeric_limits<std::size_t>::max();

  auto record = [&](std::size_t step) {
    FlowRecord rec{step, t, phi, fn, h, gn, fn > 0.0 ? detail::soliton_residual_from(phi, fn, F, g) : 0.0};
    res.trace.records.push_back(rec);
    last_recorded = step;
    if (observer) observer(rec, F);
  };
  record(0);

  for (;;) {
    if (phi <= res.tol_phi && gn <= res.tol_grad) {
      res.reason = Termination::converged;
      break;
    }
    if (res.accepted >= cfg.max_steps) {
      res.reason = Termination::max_steps;
      break;
    }
    if (t >= cfg.max_time) {
      res.reason = Termination::max_time;
      break;
    }
    const double step = std::min({h, cfg.max_step, cfg.max_time - t});
    DiscreteOneForm next = F - step * g;
    const double phi_next = energy(next);
    if (phi_next <= phi) {
      // |F + s|^2 - |F|^2 = <s, 2F + s> for the applied increment s = -h g;
      // differencing the stored iterates would drown the O(h^2) term in rounding.
      const DiscreteOneForm increment = -step * g;
      const double dnorm2 = inner_product(increment, 2.0 * F + increment);
      const double g2 = gn * gn;
      if (g2 > 0.0) {
        res.monitor.norm_law_ratio =
            std::max(res.monitor.norm_law_ratio, std::abs(dnorm2 / step + 8.0 * phi) / (step * g2));
        res.monitor.norm_growth_ratio = std::max(res.monitor.norm_growth_ratio, dnorm2 / (step * step * g2));
      }
      F = std::move(next);
      t += step;
      phi = phi_next;
      g = restricted_gradient(P, F);
      gn = norm(g);
      fn = norm(F);
      ++res.accepted;
      if (cfg.monitor_exactness && fn > 0.0)
        res.monitor.exactness_ratio = std::max(res.monitor.exactness_ratio, exactness_residual(F) / fn);
      if (res.accepted % cfg.trace_stride == 0) record(res.accepted);
      if (++streak >= cfg.grow_after) {
        h = std::min(h * cfg.grow, cfg.max_step);
        streak = 0;
      }
    } else {
      ++res.rejected;
      streak = 0;
      h = step * cfg.shrink;
      if (h < 1e-14 * cfg.h0) {
        res.reason = Termination::stalled;
        break;
      }
    }
  }
  if (last_recorded != res.accepted) record(res.accepted);
  res.time = t;
  res.final = std::move(F);
  return res;
}

// ---------------------------------------------------------------------------
// Lifted flow on polyhedral maps

struct LiftedSnapshot {
  FlowRecord record;
  PolyMap map;
  /// |d(chi(F_t)) - F_t| / max(|F_0|, tiny)
  double commutation_error = 0.0;
};

struct LiftedFlowResult {
  FlowResult flow;
  std::vector<LiftedSnapshot> trajectory;
  double max_commutation_error = 0.0;
};

/// Runs the flow on df0 and integrates every recorded iterate, anchored at
/// vertex 0 with value f0(0).
inline LiftedFlowResult run_lifted_flow(const ExactProjector& P, const PolyMap& f0, const FlowConfig& cfg,
                                        const FlowObserver& observer = {}) {
  const std::size_t anchor = 0;
  const Eigen::RowVectorXd v0 = f0.point(anchor);
  const DiscreteOneForm F0 = differential(f0);
  const double scale = std::max(norm(F0), std::numeric_limits<double>::min());

  LiftedFlowResult out;
  auto lift = [&](const FlowRecord& rec, const DiscreteOneForm& F) {
    PolyMap f = integrate(F, anchor, v0);
    const double err = norm(differential(f) - F) / scale;
    out.max_commutation_error = std::max(out.max_commutation_error, err);
    out.trajectory.push_back({rec, std::move(f), err});
    if (observer) observer(rec, F);
  };
  out.flow = run_flow(P, F0, cfg, lift);
  return out;
}

// ---------------------------------------------------------------------------
// Renormalized flow and solitons

/// (4 phi(F) / |F|^2) F - grad0 phi(F); G-orthogonal to F.
inline DiscreteOneForm renormalized_field(const ExactProjector& P, const DiscreteOneForm& F) {
  const double n = norm(F);
  if (!(n > 0.0)) throw Error("renormalized_field: zero form");
  const double kappa = 4.0 * energy(F) / (n * n);
  return kappa * F - restricted_gradient(P, F);
}

namespace detail {

inline DiscreteOneForm renormalized_move(const ExactProjector& P, const DiscreteOneForm& F, double h, double sign) {
  const double n = norm(F);
  if (!(n > 0.0)) throw Error("renormalized_step: zero form");
  if (!(h > 0.0)) throw Error("renormalized_step: step must be positive");
  DiscreteOneForm next = F + (sign * h) * renormalized_field(P, F);
  next *= n / norm(next);
  return next;
}

}  // namespace detail

/// Euler step of the renormalized flow followed by rescaling to the input norm.
inline DiscreteOneForm renormalized_step(const ExactProjector& P, const DiscreteOneForm& F, double h) {
  return detail::renormalized_move(P, F, h, 1.0);
}

/// Sign-flipped renormalized step: ascent of phi on the sphere of radius |F|.
inline DiscreteOneForm renormalized_ascent_step(const ExactProjector& P, const DiscreteOneForm& F, double h) {
  return detail::renormalized_move(P, F, h, -1.0);
}

struct SolitonSearchConfig {
  double h0 = 1e-2;
  std::size_t max_steps = 100000;
  double tolerance = 1e-10;
  double shrink = 0.5;
  double grow = 1.5;
  int grow_after = 3;
};

struct SolitonResult {
  DiscreteOneForm soliton;
  double phi = 0.0;
  double residual = 0.0;
  std::size_t steps = 0;
  bool converged = false;
};

/// Adaptive renormalized ascent from a seed; the result has the seed's norm.
/// Maxima of phi on the sphere are solitons with phi > 0. A step is accepted
/// when it raises phi, or when it keeps phi within rounding and lowers the
/// soliton residual (near the maximum the gain in phi drops below one ulp).
inline SolitonResult find_soliton(const ExactProjector& P, const DiscreteOneForm& seed,
                                  const SolitonSearchConfig& cfg = {}) {
  const double n = norm(seed);
  if (!(n > 0.0)) throw Error("find_soliton: zero seed");
  SolitonResult out;
  DiscreteOneForm F = seed;
  double phi = energy(F);
  double residual = soliton_residual(P, F);
  double h = cfg.h0;
  int streak = 0;
  for (out.steps = 0; out.steps < cfg.max_steps && residual > cfg.tolerance; ++out.steps) {
    DiscreteOneForm next = renormalized_ascent_step(P, F, h);
    const double phi_next = energy(next);
    const double residual_next = soliton_residual(P, next);
    if (phi_next > phi || (phi_next >= phi * (1.0 - 1e-13) && residual_next < residual)) {
      F = std::move(next);
      phi = phi_next;
      residual = residual_next;
      if (++streak >= cfg.grow_after) {
        h *= cfg.grow;
        streak = 0;
      }
    } else {
      h *= cfg.shrink;
      streak = 0;
      if (h < 1e-14 * cfg.h0) break;
    }
  }
  out.converged = residual <= cfg.tolerance;
  out.residual = residual;
  out.phi = phi;
  out.soliton = std::move(F);
  return out;
}

/// Norm of the self-similar solution r(t) G through r0 G at t = 0, for a unit
/// soliton G: r(t) = (8 phi(G) (t - t0))^{-1/2} with t0 = -1 / (8 phi(G) r0^2).
inline double homothety_radius(double phi_unit_soliton, double r0, double t) {
  const double t0 = -1.0 / (8.0 * phi_unit_soliton * r0 * r0);
  return 1.0 / std::sqrt(8.0 * phi_unit_soliton * (t - t0));
}

/// Least-squares slope of log(phi) against t over the last `fraction` of the
/// trace (records with phi > 0). Negative slope means exponential decay.
inline std::optional<double> tail_log_rate(const FlowTrace& trace, double fraction = 0.5) {
  const std::size_t n = trace.records.size();
  const std::size_t start = static_cast<std::size_t>(std::floor((1.0 - fraction) * static_cast<double>(n)));
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t k = 0;
  for (std::size_t i = start; i < n; ++i) {
    const auto& r = trace.records[i];
    if (!(r.phi > 0.0)) continue;
    const double y = std::log(r.phi);
    st += r.t;
    sy += y;
    stt += r.t * r.t;
    sty += r.t * y;
    ++k;
  }
  if (k < 3) return std::nullopt;
  const double denom = static_cast<double>(k) * stt - st * st;
  if (!(std::abs(denom) > 0.0)) return std::nullopt;
  return (static_cast<double>(k) * sty - st * sy) / denom;
}

// ---------------------------------------------------------------------------
// Regularity diagnostics

struct RegularityReport {
  /// Singular values of D mu|_F on F0(T), descending, with F0 carrying the L2
  /// metric (orthonormal basis) and the densities carrying the area-weighted metric.
  Eigen::VectorXd singular_values;
  double threshold = 0.0;
  std::size_t rank = 0;
  std::size_t facets = 0;
  std::size_t basis_size = 0;
};

inline constexpr std::size_t kRegularityBasisLimit = 5000;

inline RegularityReport regularity_diagnostic(const ExactProjector& P, const DiscreteOneForm& F,
                                              double relative_threshold = 1e-8) {
  const auto& mesh = *P.mesh();
  if (F.mesh() != P.mesh()) throw MismatchError("regularity_diagnostic: form on a different mesh");
  const std::size_t n = mesh.vertex_count() - 1;
  const int cols = F.cols();
  const std::size_t basis = n * static_cast<std::size_t>(cols);
  if (basis > kRegularityBasisLimit)
    throw Error("regularity_diagnostic: " + std::to_string(basis) + " basis elements exceed the dense limit of " +
                std::to_string(kRegularityBasisLimit));

  RegularityReport rep;
  rep.facets = mesh.facet_count();
  rep.basis_size = basis;
  if (basis == 0) {
    rep.singular_values = Eigen::VectorXd::Zero(0);
    return rep;
  }

  const Eigen::MatrixXd Ldense = Eigen::MatrixXd(P.reduced_stiffness());
  const Eigen::LLT<Eigen::MatrixXd> llt(Ldense);
  if (llt.info() != Eigen::Success) throw SolveError("regularity_diagnostic: stiffness is not positive definite");

  const DiscreteOneForm RF = apply_R(F);
  const Eigen::Index nf = static_cast<Eigen::Index>(mesh.facet_count());
  Eigen::MatrixXd M(nf, static_cast<Eigen::Index>(basis));
  for (int j = 0; j < cols; ++j) {
    // Rows: facets; columns: hat basis elements of the j-th target coordinate.
    Eigen::MatrixXd hat = Eigen::MatrixXd::Zero(nf, static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < mesh.facet_count(); ++s) {
      const Facet& facet = mesh.facet(s);
      const double w = -std::sqrt(facet.area);
      for (int k = 0; k < 3; ++k) {
        const int r = P.reduced_index(facet.vertex(k));
        if (r < 0) continue;
        const Vec2& grad = facet.hat_gradient[k];
        hat(static_cast<Eigen::Index>(s), r) += w * (grad.x() * RF(s, 0, j) + grad.y() * RF(s, 1, j));
      }
    }
    // Orthonormalize: with L = U^T U the forms hat * U^{-1} are G-orthonormal.
    const Eigen::MatrixXd block = llt.matrixL().solve(hat.transpose()).transpose();
    M.middleCols(static_cast<Eigen::Index>(j) * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = block;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  rep.singular_values = svd.singularValues();
  const double smax = rep.singular_values.size() ? rep.singular_values.maxCoeff() : 0.0;
  rep.threshold = relative_threshold * smax;
  for (Eigen::Index i = 0; i < rep.singular_values.size(); ++i)
    if (rep.singular_values[i] > rep.threshold) ++rep.rank;
  return rep;
}

}  // namespace isoflow
