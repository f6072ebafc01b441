#pragma once

// Run configuration, read from JSON. Every field is optional; see
// configs/*.json for complete examples and README.md for the schema.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "isoflow/error.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/forms.hpp"
#include "isoflow/io.hpp"
#include "isoflow/mesh.hpp"

namespace isoflow {

struct MeshSource {
  std::optional<int> n = 8;
  std::optional<std::string> file;
};

enum class InitialKind { clifford, random, map_file };

struct InitialCondition {
  InitialKind kind = InitialKind::clifford;
  double radius = 1.0;
  std::uint64_t seed = 7;
  double amplitude = 1.0;
  /// Random exact perturbation added to the Clifford start, scaled to this
  /// fraction of the start's L2 norm. Zero disables it.
  double perturbation = 0.0;
  std::uint64_t perturbation_seed = 11;
  std::string path;
};

struct RenormConfig {
  bool ascent = true;
  double h = 1e-2;
  std::size_t steps = 100000;
  double tolerance = 1e-10;
};

struct OutputConfig {
  std::string dir = ".";
  std::string diagnostics = "diagnostics.tsv";
  std::string checkpoint_prefix;  // empty: no checkpoints
  std::string obj = "final.obj";
  std::string map = "final_map.txt";
  std::string form = "final_form.txt";
  std::string density = "final_mu.txt";

  std::string resolve(const std::string& name) const {
    if (name.empty()) return name;
    return (std::filesystem::path(dir) / name).string();
  }
};

struct RunConfig {
  MeshSource mesh;
  TargetSpace target;
  InitialCondition initial;
  FlowConfig flow;
  bool lifted = true;
  RenormConfig renorm;
  OutputConfig output;
  std::optional<std::array<int, 3>> projection_coords;
  std::optional<Eigen::MatrixXd> projection_matrix;

  MeshPtr load_mesh() const {
    if (mesh.file) {
      auto in = open_input(*mesh.file);
      return read_mesh(in);
    }
    return build_torus_mesh(mesh.n.value_or(8));
  }

  Projection projection() const {
    if (projection_matrix) {
      Projection p{*projection_matrix};
      p.validate(target);
      return p;
    }
    if (projection_coords) return Projection::coordinates(target, *projection_coords);
    return Projection::drop_last(target);
  }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::read_opt;
  RunConfig c;
  try {
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      if (m.contains("file")) {
        c.mesh.file = m.at("file").get<std::string>();
        c.mesh.n.reset();
      }
      if (m.contains("n")) {
        if (c.mesh.file) throw ParseError("config: mesh takes either 'n' or 'file', not both");
        c.mesh.n = m.at("n").get<int>();
      }
    }
    if (j.contains("target")) read_opt(j.at("target"), "m", c.target.m);
    if (c.target.m < 1) throw ParseError("config: target.m must be at least 1");

    if (j.contains("initial")) {
      const auto& ic = j.at("initial");
      const std::string kind = ic.value("kind", std::string("clifford"));
      if (kind == "clifford") {
        c.initial.kind = InitialKind::clifford;
      } else if (kind == "random") {
        c.initial.kind = InitialKind::random;
      } else if (kind == "map_file") {
        c.initial.kind = InitialKind::map_file;
        if (!ic.contains("path")) throw ParseError("config: initial.kind map_file needs 'path'");
      } else {
        throw ParseError("config: unknown initial.kind '" + kind + "'");
      }
      read_opt(ic, "radius", c.initial.radius);
      read_opt(ic, "seed", c.initial.seed);
      read_opt(ic, "amplitude", c.initial.amplitude);
      read_opt(ic, "perturbation", c.initial.perturbation);
      read_opt(ic, "perturbation_seed", c.initial.perturbation_seed);
      read_opt(ic, "path", c.initial.path);
    }

    if (j.contains("flow")) {
      const auto& f = j.at("flow");
      read_opt(f, "h0", c.flow.h0);
      read_opt(f, "max_steps", c.flow.max_steps);
      if (f.contains("tol_phi") && !f.at("tol_phi").is_null()) c.flow.tol_phi = f.at("tol_phi").get<double>();
      if (f.contains("tol_grad") && !f.at("tol_grad").is_null()) c.flow.tol_grad = f.at("tol_grad").get<double>();
      read_opt(f, "shrink", c.flow.shrink);
      read_opt(f, "grow", c.flow.grow);
      read_opt(f, "grow_after", c.flow.grow_after);
      read_opt(f, "max_step", c.flow.max_step);
      read_opt(f, "max_time", c.flow.max_time);
      read_opt(f, "trace_stride", c.flow.trace_stride);
      read_opt(f, "monitor_exactness", c.flow.monitor_exactness);
    }
    read_opt(j, "lifted", c.lifted);

    if (j.contains("renorm")) {
      const auto& r = j.at("renorm");
      const std::string mode = r.value("mode", std::string("ascent"));
      if (mode != "ascent" && mode != "descent") throw ParseError("config: renorm.mode must be ascent or descent");
      c.renorm.ascent = mode == "ascent";
      read_opt(r, "h", c.renorm.h);
      read_opt(r, "steps", c.renorm.steps);
      read_opt(r, "tolerance", c.renorm.tolerance);
    }

    if (j.contains("output")) {
      const auto& o = j.at("output");
      read_opt(o, "dir", c.output.dir);
      read_opt(o, "diagnostics", c.output.diagnostics);
      read_opt(o, "checkpoint_prefix", c.output.checkpoint_prefix);
      read_opt(o, "obj", c.output.obj);
      read_opt(o, "map", c.output.map);
      read_opt(o, "form", c.output.form);
      read_opt(o, "density", c.output.density);
    }

    if (j.contains("projection")) {
      const auto& p = j.at("projection");
      if (p.contains("coords")) c.projection_coords = p.at("coords").get<std::array<int, 3>>();
      if (p.contains("matrix")) {
        const auto rows = p.at("matrix").get<std::vector<std::vector<double>>>();
        if (rows.size() != 3) throw ParseError("config: projection.matrix needs 3 rows");
        Eigen::MatrixXd M(3, c.target.real_dim());
        for (int r = 0; r < 3; ++r) {
          if (rows[r].size() != static_cast<std::size_t>(c.target.real_dim()))
            throw ParseError("config: projection.matrix rows need 2m entries");
          for (int k = 0; k < c.target.real_dim(); ++k) M(r, k) = rows[r][k];
        }
        c.projection_matrix = M;
      }
      if (c.projection_coords && c.projection_matrix)
        throw ParseError("config: projection takes either 'coords' or 'matrix'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  c.flow.validate();
  c.projection();  // checks independence of the rows
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
  RunConfig c = parse_run_config(j);
  // Relative input paths are taken relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  if (c.mesh.file) rebase(*c.mesh.file);
  if (c.initial.kind == InitialKind::map_file) rebase(c.initial.path);
  return c;
}

/// Builds the initial polyhedral map described by the configuration.
inline PolyMap initial_map(const RunConfig& c, const MeshPtr& mesh, const ExactProjector& P) {
  switch (c.initial.kind) {
    case InitialKind::clifford: {
      PolyMap f = clifford_sample(mesh, c.initial.radius, c.target);
      if (c.initial.perturbation > 0.0) {
        const PolyMap noise = random_map(P, c.target, c.initial.perturbation_seed, 1.0);
        const double scale = c.initial.perturbation * norm(differential(f)) / norm(differential(noise));
        f.values() += scale * noise.values();
      }
      return f;
    }
    case InitialKind::random:
      return random_map(P, c.target, c.initial.seed, c.initial.amplitude);
    case InitialKind::map_file: {
      auto in = open_input(c.initial.path);
      return read_map(in, mesh, c.target);
    }
  }
  throw Error("initial_map: unknown initial condition");
}

}  // namespace isoflow
