// isoflow command-line driver.
//
//   isoflow mesh   --n N | --in FILE  [--out FILE] [--obj FILE]
//   isoflow init   [--config FILE] [--kind K] [--n N] [--seed S] ... --out DIR
//   isoflow flow   [--config FILE] [--n N] [--seed S] [--out DIR] [--tol-phi X] [--tol-grad X] [--max-steps K] [--h0 X]
//   isoflow renorm [--config FILE] [same overrides] [--mode ascent|descent] [--unit]
//   isoflow check  [--config FILE] [--mesh T4|FILE] [--n N] [--seed S]
//   isoflow gram   [--n N]
//
// Exit codes: 0 success, 1 error, 3 flow or search did not converge,
// 4 invariant or mesh check failed.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "isoflow/checks.hpp"
#include "isoflow/config.hpp"
#include "isoflow/isoflow.hpp"
#include "isoflow/stiffness_report.hpp"

namespace {

using namespace isoflow;

constexpr int kExitError = 1;
constexpr int kExitNotConverged = 3;
constexpr int kExitCheckFailed = 4;

struct Overrides {
  std::string config;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> tol_phi;
  std::optional<double> tol_grad;
  std::optional<std::size_t> max_steps;
  std::optional<double> h0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "run configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--n", n, "build the hexagonal torus with N x N vertices instead of the configured mesh");
    cmd->add_option("--seed", seed, "seed of the random initial map, or of the perturbation for a Clifford start");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--tol-phi", tol_phi, "energy tolerance");
    cmd->add_option("--tol-grad", tol_grad, "gradient norm tolerance");
    cmd->add_option("--max-steps", max_steps, "maximum accepted steps");
    cmd->add_option("--h0", h0, "initial step size");
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(config);
    if (n) {
      c.mesh.n = *n;
      c.mesh.file.reset();
    }
    if (seed) {
      c.initial.seed = *seed;
      c.initial.perturbation_seed = *seed;
    }
    if (out) c.output.dir = *out;
    if (tol_phi) c.flow.tol_phi = *tol_phi;
    if (tol_grad) c.flow.tol_grad = *tol_grad;
    if (max_steps) c.flow.max_steps = *max_steps;
    if (h0) c.flow.h0 = *h0;
    c.flow.validate();
    return c;
  }
};

void prepare_output(const OutputConfig& o) { std::filesystem::create_directories(o.dir); }

void write_results(const RunConfig& c, const PolyMap& f, const DiscreteOneForm& F) {
  const OutputConfig& o = c.output;
  if (!o.obj.empty()) write_file(o.resolve(o.obj), [&](std::ostream& s) { write_obj(s, f, c.projection()); });
  if (!o.map.empty()) write_file(o.resolve(o.map), [&](std::ostream& s) { write_map(s, f); });
  if (!o.form.empty()) write_file(o.resolve(o.form), [&](std::ostream& s) { write_form_text(s, F); });
  if (!o.density.empty()) write_file(o.resolve(o.density), [&](std::ostream& s) { write_density(s, moment_map(F)); });
}

// Mesh positions as a map into R^4 with z in the third slot, so that the
// default projection exports the surface itself.
PolyMap embedding_map(const MeshPtr& mesh) {
  PolyMap f(mesh, TargetSpace{2});
  for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
    const Vec3& p = mesh->vertex_positions()[v];
    f.point(v) << p.x(), p.y(), p.z(), 0.0;
  }
  return f;
}

MeshPtr mesh_from_spec(const std::string& spec) {
  static const std::regex torus(R"([Tt]_?(\d+))");
  std::smatch m;
  if (std::regex_match(spec, m, torus)) return build_torus_mesh(std::stoi(m[1]));
  auto in = open_input(spec);
  return read_mesh(in);
}

int print_checks(const std::vector<CheckResult>& results) {
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "ok    " : "FAIL  ") << std::left << std::setw(52) << r.name << std::right
              << std::setprecision(3) << std::scientific << r.value << "  (tol " << r.tolerance << ")\n"
              << std::defaultfloat;
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitCheckFailed;
}

// --------------------------------------------------------------------------

int cmd_mesh(std::optional<int> n, const std::string& in, const std::string& out, const std::string& obj) {
  if (!n && in.empty()) n = 8;
  MeshPtr mesh;
  if (!in.empty()) {
    auto s = open_input(in);
    mesh = read_mesh(s);
  } else {
    mesh = build_torus_mesh(*n);
  }
  const auto violations = validate_mesh(*mesh);
  std::cout << "vertices " << mesh->vertex_count() << "\nedges " << mesh->edge_count() << "\nfacets "
            << mesh->facet_count() << "\neuler " << mesh->topology().euler_characteristic << " (" << mesh->topology().name
            << ")\ntotal_area " << std::setprecision(17) << mesh->total_area() << "\n";
  for (const auto& v : violations) std::cerr << "violation: " << v.describe() << "\n";
  if (!out.empty()) write_file(out, [&](std::ostream& s) { write_mesh(s, *mesh); });
  if (!obj.empty()) {
    const PolyMap f = embedding_map(mesh);
    write_file(obj, [&](std::ostream& s) { write_obj(s, f, Projection::drop_last(f.target())); });
  }
  return violations.empty() ? 0 : kExitCheckFailed;
}

int cmd_init(const Overrides& ov, const std::string& kind, std::optional<double> radius,
             std::optional<double> amplitude, std::optional<double> perturbation, const std::string& map_in,
             bool binary) {
  RunConfig c = ov.resolve();
  if (!kind.empty()) {
    if (kind == "clifford") c.initial.kind = InitialKind::clifford;
    else if (kind == "random") c.initial.kind = InitialKind::random;
    else if (kind == "file") c.initial.kind = InitialKind::map_file;
    else throw ParseError("init: --kind must be clifford, random or file");
  }
  if (radius) c.initial.radius = *radius;
  if (amplitude) c.initial.amplitude = *amplitude;
  if (perturbation) c.initial.perturbation = *perturbation;
  if (!map_in.empty()) c.initial.path = map_in;
  if (c.initial.kind == InitialKind::map_file && c.initial.path.empty()) throw ParseError("init: --map-in is required");

  const MeshPtr mesh = c.load_mesh();
  const ExactProjector P(mesh);
  const PolyMap f = initial_map(c, mesh, P);
  const DiscreteOneForm F = differential(f);
  prepare_output(c.output);
  const OutputConfig& o = c.output;
  write_file(o.resolve("initial_map.txt"), [&](std::ostream& s) { write_map(s, f); });
  write_file(o.resolve("initial_form.txt"), [&](std::ostream& s) { write_form_text(s, F); });
  if (binary)
    write_file(o.resolve("initial_form.bin"), [&](std::ostream& s) { write_form_binary(s, F); }, std::ios::binary);
  std::cout << std::setprecision(17) << "phi " << energy(F) << "\nl2norm " << norm(F) << "\nmax_abs_mu "
            << moment_map(F).max_abs() << "\n";
  return 0;
}

int cmd_flow(const Overrides& ov) {
  const RunConfig c = ov.resolve();
  const MeshPtr mesh = c.load_mesh();
  const ExactProjector P(mesh);
  const PolyMap f0 = initial_map(c, mesh, P);
  prepare_output(c.output);
  const OutputConfig& o = c.output;

  std::ofstream diag;
  if (!o.diagnostics.empty()) {
    diag.open(o.resolve(o.diagnostics), std::ios::trunc);
    if (!diag) throw Error("cannot open '" + o.resolve(o.diagnostics) + "' for writing");
    write_trace_header(diag);
    diag.flush();
  }
  auto observer = [&](const FlowRecord& r, const DiscreteOneForm& F) {
    if (diag.is_open()) {
      write_trace_row(diag, r);
      diag.flush();
    }
    if (!o.checkpoint_prefix.empty())
      write_file(o.resolve(o.checkpoint_prefix + std::to_string(r.step) + ".txt"),
                 [&](std::ostream& s) { write_form_text(s, F); });
  };

  const auto start = std::chrono::steady_clock::now();
  FlowResult res;
  PolyMap f_final = f0;
  double commutation = 0.0;
  if (c.lifted) {
    LiftedFlowResult lifted = run_lifted_flow(P, f0, c.flow, observer);
    commutation = lifted.max_commutation_error;
    f_final = lifted.trajectory.back().map;
    res = std::move(lifted.flow);
  } else {
    res = run_flow(P, differential(f0), c.flow, observer);
    f_final = integrate(res.final, 0, f0.point(0));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_results(c, f_final, res.final);

  const DiscreteOneForm F0 = differential(f0);
  std::cout << std::setprecision(6) << "reason " << to_string(res.reason) << "\naccepted " << res.accepted
            << "\nrejected " << res.rejected << "\ntime " << res.time << "\nphi_initial " << energy(F0)
            << "\nphi_final " << energy(res.final) << "\ntol_phi " << res.tol_phi << "\ntol_grad " << res.tol_grad
            << "\nmax_abs_mu " << moment_map(res.final).max_abs() << "\nrelative_displacement "
            << norm(res.final - F0) / norm(F0) << "\nnorm_law_ratio " << res.monitor.norm_law_ratio
            << "\nexactness_ratio " << res.monitor.exactness_ratio << "\n";
  if (c.lifted) std::cout << "commutation_error " << commutation << "\n";
  if (const auto rate = tail_log_rate(res.trace)) std::cout << "tail_log_rate " << *rate << "\n";
  std::cout << "wall_seconds " << seconds << "\n";

  return res.reason == Termination::converged || res.reason == Termination::max_time ? 0 : kExitNotConverged;
}

int cmd_renorm(const Overrides& ov, const std::string& mode, bool unit) {
  RunConfig c = ov.resolve();
  if (!mode.empty()) {
    if (mode != "ascent" && mode != "descent") throw ParseError("renorm: --mode must be ascent or descent");
    c.renorm.ascent = mode == "ascent";
  }
  const MeshPtr mesh = c.load_mesh();
  const ExactProjector P(mesh);
  const PolyMap f0 = initial_map(c, mesh, P);
  DiscreteOneForm F = differential(f0);
  if (!(norm(F) > 0.0)) throw Error("renorm: initial form is zero");
  if (unit) F *= 1.0 / norm(F);
  prepare_output(c.output);
  const OutputConfig& o = c.output;

  bool converged = false;
  if (c.renorm.ascent) {
    SolitonSearchConfig sc;
    sc.h0 = c.renorm.h;
    sc.max_steps = c.renorm.steps;
    sc.tolerance = c.renorm.tolerance;
    const SolitonResult s = find_soliton(P, F, sc);
    F = s.soliton;
    converged = s.converged;
    std::cout << std::setprecision(10) << "steps " << s.steps << "\n";
  } else {
    std::ofstream diag;
    if (!o.diagnostics.empty()) {
      diag.open(o.resolve(o.diagnostics), std::ios::trunc);
      write_trace_header(diag);
    }
    double residual = soliton_residual(P, F);
    std::size_t k = 0;
    auto row = [&] {
      if (!diag.is_open()) return;
      const double phi = energy(F);
      write_trace_row(diag, {k, static_cast<double>(k) * c.renorm.h, phi, norm(F), c.renorm.h,
                             norm(restricted_gradient(P, F)), residual});
      diag.flush();
    };
    row();
    for (; k < c.renorm.steps && residual > c.renorm.tolerance;) {
      F = renormalized_step(P, F, c.renorm.h);
      residual = soliton_residual(P, F);
      ++k;
      row();
    }
    converged = residual <= c.renorm.tolerance;
    std::cout << "steps " << k << "\n";
  }
  write_results(c, integrate(F, 0, f0.point(0)), F);
  std::cout << std::setprecision(10) << "mode " << (c.renorm.ascent ? "ascent" : "descent") << "\nl2norm " << norm(F)
            << "\nphi " << energy(F) << "\nsoliton_residual " << soliton_residual(P, F) << "\n";
  return converged ? 0 : kExitNotConverged;
}

int cmd_check(const std::string& config, const std::string& mesh_spec, std::optional<int> n,
              std::optional<std::uint64_t> seed, int samples) {
  CheckOptions opt;
  opt.samples = samples;
  MeshPtr mesh;
  TargetSpace target;
  std::optional<RunConfig> c;
  if (!config.empty()) {
    c = load_run_config(config);
    mesh = c->load_mesh();
    target = c->target;
    opt.seed = c->initial.seed;
  }
  if (!mesh_spec.empty()) mesh = mesh_from_spec(mesh_spec);
  if (n) mesh = build_torus_mesh(*n);
  if (!mesh) mesh = build_torus_mesh(4);
  if (seed) opt.seed = *seed;

  std::cout << "mesh: " << mesh->vertex_count() << " vertices, " << mesh->facet_count() << " facets; target C^"
            << target.m << "; seed " << opt.seed << "\n";
  const ExactProjector P(mesh);
  std::optional<PolyMap> f;
  if (c && mesh_spec.empty() && !n) {
    f = initial_map(*c, mesh, P);
  } else {
    f = random_map(P, target, opt.seed, 1.0);
  }
  const DiscreteOneForm F0 = differential(*f);
  auto results = run_invariant_suite(mesh, target, opt, &F0);
  const Projection projection = c ? c->projection() : Projection::drop_last(target);
  for (auto& r : run_roundtrip_suite(mesh, *f, projection)) results.push_back(std::move(r));
  const int code = print_checks(results);
  std::cout << (code == 0 ? "all checks passed" : "some checks failed") << "\n";
  return code;
}

int cmd_gram(int n) {
  print_stiffness_report(std::cout, stiffness_comparison(n));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polyhedral modified moment map flow"};
  app.require_subcommand(1);

  Overrides flow_ov, init_ov, renorm_ov;

  auto* mesh_cmd = app.add_subcommand("mesh", "build or read a mesh, validate it, export it");
  std::optional<int> mesh_n;
  std::string mesh_in, mesh_out, mesh_obj;
  mesh_cmd->add_option("--n", mesh_n, "hexagonal torus with N x N vertices (default 8)");
  mesh_cmd->add_option("--in", mesh_in, "mesh file to read instead")->check(CLI::ExistingFile);
  mesh_cmd->add_option("--out", mesh_out, "write the mesh file here");
  mesh_cmd->add_option("--obj", mesh_obj, "write the flat surface as OBJ here");
  mesh_cmd->get_option("--n")->excludes("--in");

  auto* init_cmd = app.add_subcommand("init", "write an initial map and its differential");
  init_ov.add_to(init_cmd);
  std::string init_kind, init_map;
  std::optional<double> init_radius, init_amplitude, init_perturbation;
  bool init_binary = false;
  init_cmd->add_option("--kind", init_kind, "clifford, random or file");
  init_cmd->add_option("--radius", init_radius, "Clifford radius");
  init_cmd->add_option("--amplitude", init_amplitude, "random map amplitude");
  init_cmd->add_option("--perturbation", init_perturbation, "relative size of the perturbation of a Clifford start");
  init_cmd->add_option("--map-in", init_map, "map file for --kind file")->check(CLI::ExistingFile);
  init_cmd->add_flag("--binary", init_binary, "also write the form in binary");

  auto* flow_cmd = app.add_subcommand("flow", "run the flow");
  flow_ov.add_to(flow_cmd);

  auto* renorm_cmd = app.add_subcommand("renorm", "renormalized flow or soliton ascent");
  renorm_ov.add_to(renorm_cmd);
  std::string renorm_mode;
  bool renorm_unit = false;
  renorm_cmd->add_option("--mode", renorm_mode, "ascent or descent");
  renorm_cmd->add_flag("--unit", renorm_unit, "scale the initial form to unit norm");

  auto* check_cmd = app.add_subcommand("check", "run the invariant and file-format suites");
  std::string check_config, check_mesh;
  std::optional<int> check_n;
  std::optional<std::uint64_t> check_seed;
  int check_samples = 20;
  check_cmd->add_option("--config", check_config, "run configuration (JSON)")->check(CLI::ExistingFile);
  check_cmd->add_option("--mesh", check_mesh, "T<N> for the hexagonal torus, or a mesh file");
  check_cmd->add_option("--n", check_n, "hexagonal torus with N x N vertices");
  check_cmd->add_option("--seed", check_seed, "random seed");
  check_cmd->add_option("--samples", check_samples, "random instances per identity");

  auto* gram_cmd = app.add_subcommand("gram", "print stiffness entries against the published closed forms");
  int gram_n = 4;
  gram_cmd->add_option("--n", gram_n, "torus size, at least 3");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*mesh_cmd) return cmd_mesh(mesh_n, mesh_in, mesh_out, mesh_obj);
    if (*init_cmd)
      return cmd_init(init_ov, init_kind, init_radius, init_amplitude, init_perturbation, init_map, init_binary);
    if (*flow_cmd) return cmd_flow(flow_ov);
    if (*renorm_cmd) return cmd_renorm(renorm_ov, renorm_mode, renorm_unit);
    if (*check_cmd) return cmd_check(check_config, check_mesh, check_n, check_seed, check_samples);
    if (*gram_cmd) return cmd_gram(gram_n);
  } catch (const std::exception& e) {
    std::cerr << "isoflow: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
