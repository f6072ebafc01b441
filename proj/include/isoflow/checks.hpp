#pragma once

// Invariant suite run by `isoflow check`: algebraic identities of the Kaehler
// package, the moment map, the projector, the gradient and a short flow, all
// on seeded random data over a given mesh.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "isoflow/exact.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/gram_schmidt.hpp"
#include "isoflow/io.hpp"
#include "isoflow/mesh.hpp"
#include "isoflow/moment.hpp"

namespace isoflow {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct CheckOptions {
  std::uint64_t seed = 7;
  int samples = 20;
  /// Gram-Schmidt comparison only up to this many vertices.
  std::size_t gram_schmidt_vertex_limit = 64;
  std::size_t flow_steps = 200;
};

namespace detail {

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

inline std::vector<std::complex<double>> random_unit_gauge(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::complex<double>> out(n);
  for (auto& z : out) z = std::polar(1.0, 2.0 * 3.141592653589793 * unit_uniform(rng));
  return out;
}

}  // namespace detail

inline std::vector<CheckResult> run_invariant_suite(const MeshPtr& mesh, TargetSpace target,
                                                    const CheckOptions& opt = {},
                                                    const DiscreteOneForm* initial = nullptr) {
  std::vector<CheckResult> out;
  auto check = [&](std::string name, double value, double tol) {
    out.push_back({std::move(name), value, tol, value <= tol});
  };

  check("mesh violations", static_cast<double>(validate_mesh(*mesh).size()), 0.0);
  const ExactProjector P(mesh);
  std::mt19937_64 rng(opt.seed);

  double algebra = 0.0, gauge = 0.0, oracle = 0.0, hamiltonian = 0.0, grad_id = 0.0;
  double idem = 0.0, adjoint = 0.0, fixes = 0.0, roundtrip = 0.0, restricted = 0.0;
  for (int s = 0; s < opt.samples; ++s) {
    const DiscreteOneForm F = random_form(mesh, target, rng());
    const DiscreteOneForm H = random_form(mesh, target, rng());
    const double nF = norm(F);
    algebra = std::max({algebra, norm(apply_R(apply_R(F)) - F) / nF, norm(apply_J(apply_J(F)) + F) / nF,
                        norm(apply_i(apply_i(F)) + F) / nF, norm(apply_J(apply_i(F)) - apply_i(apply_J(F))) / nF,
                        detail::rel(norm(apply_R(F)), nF), detail::rel(norm(apply_J(F)), nF)});

    const auto lambda = detail::random_unit_gauge(mesh->facet_count(), rng);
    const DiscreteOneForm gF = gauge_act(lambda, F);
    gauge = std::max({gauge, detail::rel(norm(gF), nF),
                      (moment_map(gF).values() - moment_map(F).values()).lpNorm<Eigen::Infinity>()});

    oracle = std::max(oracle, (moment_map(F).values() + pullback_density(F).values()).lpNorm<Eigen::Infinity>());

    MomentDensity zeta(mesh);
    for (std::size_t f = 0; f < zeta.size(); ++f) zeta[f] = 2.0 * detail::unit_uniform(rng) - 1.0;
    const double eps = 1e-4;
    MomentDensity dmu(mesh, (moment_map(F + eps * H).values() - moment_map(F - eps * H).values()) / (2.0 * eps));
    hamiltonian = std::max(hamiltonian, detail::rel(density_inner(dmu, zeta), -kahler_form(infinitesimal_action(zeta, F), H)));

    grad_id = std::max(grad_id, detail::rel(inner_product(gradient(F), F), 4.0 * energy(F)));

    const DiscreteOneForm PF = P.project(F);
    idem = std::max(idem, norm(P.project(PF) - PF) / nF);
    adjoint = std::max(adjoint, std::abs(inner_product(PF, H) - inner_product(F, P.project(H))) / (nF * norm(H)));

    const DiscreteOneForm E = random_exact(P, rng(), 1.0, target);
    const double nE = norm(E);
    if (nE > 0.0) {
      fixes = std::max(fixes, norm(P.project(E) - E) / nE);
      const PolyMap f = integrate(E, 0, Eigen::RowVectorXd::Zero(target.real_dim()));
      roundtrip = std::max(roundtrip, norm(differential(f) - E) / nE);
      restricted = std::max(restricted, detail::rel(inner_product(restricted_gradient(P, E), E), 4.0 * energy(E)));
    }
  }
  check("R^2 = id, J^2 = i^2 = -id, [J,i] = 0, isometries", algebra, 1e-13);
  check("unit gauge preserves norm and mu", gauge, 1e-12);
  check("mu = -pullback density", oracle, 1e-13);
  check("Hamiltonian identity", hamiltonian, 1e-6);
  check("<grad phi(F), F> = 4 phi(F)", grad_id, 1e-12);
  check("projector idempotent", idem, 1e-10);
  check("projector self-adjoint", adjoint, 1e-10);
  check("projector fixes exact forms", fixes, 1e-10);
  check("d(integrate(F)) = F", roundtrip, 1e-10);
  check("<grad0 phi(F), F> = 4 phi(F) on exact F", restricted, 1e-10);

  double constants = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < target.real_dim(); ++j) {
      const DiscreteOneForm C = coframe_form(mesh, target, i, j);
      constants = std::max(constants, norm(P.project(C)) / norm(C));
    }
  check("projector kills constant forms", constants, 1e-10);

  if (mesh->vertex_count() <= opt.gram_schmidt_vertex_limit) {
    const GramSchmidtProjector GS(mesh, target);
    double diff = 0.0;
    for (int s = 0; s < 3; ++s) {
      const DiscreteOneForm F = random_form(mesh, target, rng());
      diff = std::max(diff, norm(P.project(F) - GS.project(F)) / norm(F));
    }
    check("sparse projector = Gram-Schmidt projector", diff, 1e-8);
  }

  {
    const DiscreteOneForm F0 = initial ? *initial : random_exact(P, rng(), 1.0, target);
    FlowConfig cfg;
    cfg.max_steps = opt.flow_steps;
    cfg.h0 = 1e-4;
    double increases = 0.0;
    double previous = energy(F0);
    const FlowResult res = run_flow(P, F0, cfg, [&](const FlowRecord& r, const DiscreteOneForm&) {
      if (r.phi > previous) increases += 1.0;
      previous = r.phi;
    });
    check("flow: phi non-increasing", increases, 0.0);
    check("flow: norm decay law ratio", res.monitor.norm_law_ratio, 1.1);
    check("flow: exactness residual / |F|", res.monitor.exactness_ratio, 1e-8);
  }
  return out;
}

/// Writes every file format to memory and reads it back.
inline std::vector<CheckResult> run_roundtrip_suite(const MeshPtr& mesh, const PolyMap& f, const Projection& projection) {
  std::vector<CheckResult> out;
  auto check = [&](std::string name, double value, double tol) {
    out.push_back({std::move(name), value, tol, value <= tol});
  };
  const TargetSpace target = f.target();
  const DiscreteOneForm F = differential(f);

  {
    std::stringstream ss;
    write_mesh(ss, *mesh);
    const MeshPtr back = read_mesh(ss);
    double gap = back->vertex_count() == mesh->vertex_count() && back->facet_count() == mesh->facet_count() ? 0.0 : 1.0;
    for (std::size_t s = 0; gap == 0.0 && s < mesh->facet_count(); ++s)
      for (int k = 0; k < 3; ++k) {
        const Facet &a = mesh->facet(s), &b = back->facet(s);
        if (a.corners[k].vertex != b.corners[k].vertex || a.corners[k].offset != b.corners[k].offset) gap = 1.0;
        gap = std::max({gap, (a.lifted[k] - b.lifted[k]).norm(), (a.hat_gradient[k] - b.hat_gradient[k]).norm()});
      }
    check("mesh file round trip", gap, 1e-14);
  }
  {
    std::stringstream ss;
    write_form_text(ss, F);
    check("form text round trip", (read_form_text(ss, mesh, target).data() - F.data()).lpNorm<Eigen::Infinity>(), 0.0);
  }
  {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_form_binary(ss, F);
    check("form binary round trip", (read_form_binary(ss, mesh).data() - F.data()).lpNorm<Eigen::Infinity>(), 0.0);
  }
  {
    std::stringstream ss;
    write_map(ss, f);
    check("map round trip", (read_map(ss, mesh, target).values() - f.values()).lpNorm<Eigen::Infinity>(), 0.0);
  }
  {
    const MomentDensity mu = moment_map(F);
    std::stringstream ss;
    write_density(ss, mu);
    check("density round trip", (read_density(ss, mesh).values() - mu.values()).lpNorm<Eigen::Infinity>(), 0.0);
  }
  {
    FlowTrace trace;
    trace.records.push_back({0, 0.0, energy(F), norm(F), 1e-3, norm(gradient(F)), 0.5});
    trace.records.push_back({1, 1e-3, 0.25 * energy(F), 0.5 * norm(F), 1.5e-3, 0.1, 0.25});
    std::stringstream ss;
    write_trace_header(ss);
    for (const auto& r : trace.records) write_trace_row(ss, r);
    const FlowTrace back = read_trace(ss);
    double gap = back.records.size() == trace.records.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; gap == 0.0 && i < trace.records.size(); ++i) {
      const auto &a = trace.records[i], &b = back.records[i];
      gap = std::max({a.step == b.step ? 0.0 : 1.0, std::abs(a.t - b.t), std::abs(a.phi - b.phi),
                      std::abs(a.l2norm - b.l2norm), std::abs(a.h - b.h), std::abs(a.grad_norm - b.grad_norm),
                      std::abs(a.soliton_residual - b.soliton_residual)});
    }
    check("diagnostics round trip", gap, 0.0);
  }
  {
    std::stringstream ss;
    write_obj(ss, f, projection);
    const ObjData obj = read_obj(ss);
    double gap = obj.vertices.size() == f.vertex_count() && obj.faces.size() == mesh->facet_count() ? 0.0 : 1.0;
    for (std::size_t v = 0; gap == 0.0 && v < obj.vertices.size(); ++v)
      gap = std::max(gap, (obj.vertices[v] - projection.matrix * f.point(v).transpose()).norm());
    for (std::size_t s = 0; gap == 0.0 && s < obj.faces.size(); ++s)
      for (int k = 0; k < 3; ++k)
        if (obj.faces[s][k] != mesh->facet(s).vertex(k)) gap = 1.0;
    check("OBJ round trip", gap, 1e-12);
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

}  // namespace isoflow
