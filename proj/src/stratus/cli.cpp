// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
#include "stratus/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stratus/common.hpp"
#include "stratus/expr.hpp"
#include "stratus/io.hpp"
#include "stratus/mesh.hpp"
#include "stratus/model.hpp"
#include "stratus/solver.hpp"
#include "stratus/tape.hpp"

namespace stratus {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// JSON access with dotted key paths in every error message.

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown key '" + join(path, it.key()) + "'");
  }
}

const json* get(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path,
                    const char* key) {
  const json* p = get(obj, key);
  if (p == nullptr) fail(join(path, key), "required");
  return *p;
}

const json& object_of(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "must be an object");
  return v;
}

std::string str_of(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "must be a string");
  return v.get<std::string>();
}

double num_of(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "must be a number");
  return v.get<double>();
}

long int_of(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "must be an integer");
  return v.get<long>();
}

std::string brace_list(const std::set<std::string>& items) {
  std::string out = "{";
  bool first = true;
  for (const auto& s : items) {
    if (!first) out += ", ";
    out += s;
    first = false;
  }
  return out + "}";
}

std::string space_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += " ";
    out += s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resolved run description.

struct RunPlan {
  ModelDef model;  // the model being advanced (predictor for the vam pair)
  std::optional<ModelDef> corrector;
  Mesh mesh;
  SolverSettings settings;
  std::string solver_type;  // transient | steady | vam
  std::string out_dir = "output";
  bool want_csv = false;
  bool want_vtk = false;
  bool want_lifted = false;
  bool want_checkpoint = false;
  int nz = 10;
  int level = -1;          // sme expansion order, for the report
  std::string model_kind;  // config-level name: swe | sme | vam | poisson
};

struct Overrides {
  std::string out_dir;
  std::optional<double> end_time;
  std::optional<double> write_interval;
};

ModelDef build_model(const json& sec, int& level_out,
                     std::string& kind_out) {
  const std::string path = "model";
  check_keys(sec, path, {"name", "dimension", "level", "parameters"});
  const std::string name = str_of(require(sec, "model", "name"), "model.name");
  if (name != "swe" && name != "sme" && name != "vam" && name != "poisson")
    fail("model.name", "must be one of swe, sme, vam, poisson (got '" + name +
                           "')");

  int dimension = 1;
  if (const json* d = get(sec, "dimension")) {
    dimension = static_cast<int>(int_of(*d, "model.dimension"));
    if (dimension != 1 && dimension != 2)
      fail("model.dimension", "must be 1 or 2");
  }

  const json* level = get(sec, "level");
  if (name == "sme") {
    if (level == nullptr)
      fail("model.level", "required for sme models (moment expansion order)");
    level_out = static_cast<int>(int_of(*level, "model.level"));
    if (level_out < 0 || level_out > 8)
      fail("model.level", "must be between 0 and 8");
  } else if (level != nullptr) {
    fail("model.level", "only valid for sme models");
  }

  kind_out = name;
  ModelDef m;
  if (name == "swe") {
    m = swe_model(dimension);
  } else if (name == "sme") {
    m = sme_model(dimension, level_out);
  } else if (name == "poisson") {
    if (dimension != 1) fail("model.dimension", "must be 1 for poisson");
    m = poisson_model();
  } else {
    if (dimension != 1)
      fail("model.dimension", "must be 1 for the vam model pair");
    m = vam_models().first;
  }

  if (const json* params = get(sec, "parameters")) {
    const json& obj = object_of(*params, "model.parameters");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string key = "model.parameters." + it.key();
      bool found = false;
      for (std::size_t i = 0; i < m.layout.params.size(); ++i)
        if (m.layout.params[i] == it.key()) {
          m.layout.param_defaults[i] = num_of(*it, key);
          found = true;
          break;
        }
      if (!found)
        fail(key, "unknown parameter; the model has: " +
                      space_list(m.layout.params));
    }
  }
  return m;
}

Mesh build_mesh(const json& sec, const ModelDef& model) {
  check_keys(sec, "mesh",
             {"kind", "path", "a", "b", "n", "left_tag", "right_tag"});
  const std::string kind =
      str_of(require(sec, "mesh", "kind"), "mesh.kind");
  Mesh mesh;
  if (kind == "interval") {
    const double a = num_of(require(sec, "mesh", "a"), "mesh.a");
    const double b = num_of(require(sec, "mesh", "b"), "mesh.b");
    const long n = int_of(require(sec, "mesh", "n"), "mesh.n");
    if (!(a < b)) fail("mesh.b", "must be greater than mesh.a");
    if (n < 1) fail("mesh.n", "must be at least 1");
    std::string lt = "left", rt = "right";
    if (const json* v = get(sec, "left_tag")) lt = str_of(*v, "mesh.left_tag");
    if (const json* v = get(sec, "right_tag"))
      rt = str_of(*v, "mesh.right_tag");
    mesh = uniform_interval(a, b, static_cast<std::size_t>(n), lt, rt);
  } else if (kind == "msh") {
    const std::string path =
        str_of(require(sec, "mesh", "path"), "mesh.path");
    try {
      mesh = parse_msh(path);
    } catch (const Error& e) {
      fail("mesh.path", e.what());
    }
  } else {
    fail("mesh.kind", "must be 'interval' or 'msh' (got '" + kind + "')");
  }
  if (mesh.dimension != model.dimension)
    fail("model.dimension",
         "model is " + std::to_string(model.dimension) +
             "d but the mesh is " + std::to_string(mesh.dimension) + "d");
  return mesh;
}

std::vector<BoundaryCondition> build_bcs(const json& list,
                                         const VariableLayout& layout) {
  if (!list.is_array()) fail("bcs", "must be an array");
  std::vector<BoundaryCondition> bcs;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "bcs[" + std::to_string(i) + "]";
    const json& entry = object_of(list[i], path);
    check_keys(entry, path, {"tag", "type", "pair", "values"});
    BoundaryCondition bc;
    bc.tag = str_of(require(entry, path, "tag"), path + ".tag");
    const std::string type =
        str_of(require(entry, path, "type"), path + ".type");
    if (type == "extrapolation") {
      bc.kind = BcKind::extrapolate;
    } else if (type == "periodic") {
      bc.kind = BcKind::periodic;
      bc.pair_tag = str_of(require(entry, path, "pair"), path + ".pair");
    } else if (type == "prescribe") {
      bc.kind = BcKind::prescribe;
      const json& values = object_of(
          require(entry, path, "values"), path + ".values");
      if (values.empty()) fail(path + ".values", "must name at least one field");
      for (auto it = values.begin(); it != values.end(); ++it) {
        const std::string vkey = path + ".values." + it.key();
        int index = -1;
        for (std::size_t f = 0; f < layout.state.size(); ++f)
          if (layout.state[f] == it.key()) index = static_cast<int>(f);
        if (index < 0)
          fail(vkey, "unknown state field; the model has: " +
                         space_list(layout.state));
        try {
          bc.prescribe[index] = parse_expr(str_of(*it, vkey), layout);
        } catch (const SyntaxError& e) {
          fail(vkey, e.what());
        }
      }
    } else {
      fail(path + ".type",
           "must be one of extrapolation, periodic, prescribe (got '" + type +
               "')");
    }
    bcs.push_back(std::move(bc));
  }
  return bcs;
}

// The ghost fill must have a rule for every tagged boundary, so the tag
// sets have to agree exactly; the message lists both sides.
void check_tag_coverage(const std::vector<BoundaryCondition>& bcs,
                        const Mesh& mesh) {
  std::set<std::string> config_tags;
  for (const auto& bc : bcs) config_tags.insert(bc.tag);
  std::set<std::string> mesh_tags(mesh.tag_names.begin(),
                                  mesh.tag_names.end());
  if (config_tags != mesh_tags)
    throw ConfigError("boundary conditions cover tags " +
                      brace_list(config_tags) + " but the mesh defines tags " +
                      brace_list(mesh_tags));
  for (const auto& bc : bcs)
    if (bc.kind == BcKind::periodic && !mesh_tags.count(bc.pair_tag))
      throw ConfigError("periodic pair tag '" + bc.pair_tag +
                        "' is not a mesh tag; the mesh defines tags " +
                        brace_list(mesh_tags));
}

void build_ic(const json& list, ModelDef& model) {
  if (!list.is_array()) fail("ic", "must be an array of expression strings");
  if (list.size() != static_cast<std::size_t>(model.n_fields))
    fail("ic", "expected " + std::to_string(model.n_fields) +
                   " expressions (fields: " + space_list(model.layout.state) +
                   "), got " + std::to_string(list.size()));
  std::vector<Expr> ic;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "ic[" + std::to_string(i) + "]";
    Expr e;
    try {
      e = parse_expr(str_of(list[i], path), model.layout);
    } catch (const SyntaxError& err) {
      fail(path, err.what());
    }
    const Kernel probe = compile_kernel({e}, model.layout);
    if (probe.uses(Slot::state) || probe.uses(Slot::aux) ||
        probe.uses(Slot::normal))
      fail(path, "may only use coordinates, parameters, and time");
    ic.push_back(std::move(e));
  }
  model.initial_condition = std::move(ic);
}

void build_solver(const json& sec, RunPlan& plan) {
  check_keys(sec, "solver",
             {"type", "cfl", "t_end", "output_interval", "max_steps", "newton",
              "gmres"});
  plan.solver_type =
      str_of(require(sec, "solver", "type"), "solver.type");
  const std::string& type = plan.solver_type;
  if (type != "transient" && type != "steady" && type != "vam")
    fail("solver.type",
         "must be one of transient, steady, vam (got '" + type + "')");
  const std::string& name = plan.model_kind;
  if (type == "steady" && plan.model.residual.empty())
    fail("solver.type",
         "'steady' needs a model with a residual block; '" + name +
             "' has none");
  if (type == "vam" && name != "vam")
    fail("solver.type", "'vam' runs the vam model pair, not '" + name + "'");
  if (name == "vam" && type != "vam")
    fail("solver.type", "the vam model pair requires solver type 'vam'");
  if (name == "poisson" && type != "steady")
    fail("solver.type", "the poisson model is steady; use 'steady'");

  SolverSettings& s = plan.settings;
  if (const json* v = get(sec, "cfl")) s.cfl = num_of(*v, "solver.cfl");
  if (const json* v = get(sec, "t_end")) s.t_end = num_of(*v, "solver.t_end");
  if (const json* v = get(sec, "output_interval"))
    s.output_interval = num_of(*v, "solver.output_interval");
  if (const json* v = get(sec, "max_steps"))
    s.max_steps = int_of(*v, "solver.max_steps");
  if (s.t_end < 0.0) fail("solver.t_end", "must be non-negative");
  if (s.output_interval < 0.0)
    fail("solver.output_interval", "must be non-negative");

  if (const json* nw = get(sec, "newton")) {
    const json& obj = object_of(*nw, "solver.newton");
    check_keys(obj, "solver.newton", {"tol_abs", "tol_rel", "max_iter"});
    if (const json* v = get(obj, "tol_abs"))
      s.newton.tol_abs = num_of(*v, "solver.newton.tol_abs");
    if (const json* v = get(obj, "tol_rel"))
      s.newton.tol_rel = num_of(*v, "solver.newton.tol_rel");
    if (const json* v = get(obj, "max_iter"))
      s.newton.max_iter = static_cast<int>(int_of(*v, "solver.newton.max_iter"));
  }
  if (const json* gm = get(sec, "gmres")) {
    const json& obj = object_of(*gm, "solver.gmres");
    check_keys(obj, "solver.gmres", {"tol", "restart", "max_restarts"});
    if (const json* v = get(obj, "tol"))
      s.gmres.tol = num_of(*v, "solver.gmres.tol");
    if (const json* v = get(obj, "restart"))
      s.gmres.restart = static_cast<int>(int_of(*v, "solver.gmres.restart"));
    if (const json* v = get(obj, "max_restarts"))
      s.gmres.max_restarts =
          static_cast<int>(int_of(*v, "solver.gmres.max_restarts"));
  }
}

void build_output(const json* sec, RunPlan& plan) {
  if (sec == nullptr) {
    // No section: default to the natural per-dimension tabular format.
    (plan.mesh.dimension == 1 ? plan.want_csv : plan.want_vtk) = true;
    return;
  }
  const json& obj = object_of(*sec, "output");
  check_keys(obj, "output", {"dir", "formats", "nz"});
  if (const json* v = get(obj, "dir")) plan.out_dir = str_of(*v, "output.dir");
  if (const json* v = get(obj, "nz")) {
    plan.nz = static_cast<int>(int_of(*v, "output.nz"));
    if (plan.nz < 2) fail("output.nz", "must be at least 2");
  }
  const json* formats = get(obj, "formats");
  if (formats == nullptr) {
    (plan.mesh.dimension == 1 ? plan.want_csv : plan.want_vtk) = true;
    return;
  }
  if (!formats->is_array()) fail("output.formats", "must be an array");
  for (const json& f : *formats) {
    const std::string name = str_of(f, "output.formats");
    if (name == "csv") {
      if (plan.mesh.dimension != 1)
        fail("output.formats", "'csv' requires a one-dimensional mesh");
      plan.want_csv = true;
    } else if (name == "vtk") {
      if (plan.mesh.dimension != 2)
        fail("output.formats", "'vtk' requires a two-dimensional mesh");
      plan.want_vtk = true;
    } else if (name == "lifted_vtk") {
      if (!plan.model.lift)
        fail("output.formats",
             "'lifted_vtk' requires a model with a vertical lift");
      plan.want_lifted = true;
    } else if (name == "checkpoint") {
      plan.want_checkpoint = true;
    } else {
      fail("output.formats", "unknown format '" + name + "'");
    }
  }
}

RunPlan build_plan(const json& root, const Overrides& ov) {
  check_keys(root, "", {"model", "mesh", "bcs", "ic", "solver", "output"});
  RunPlan plan;
  plan.model = build_model(object_of(require(root, "", "model"), "model"),
                           plan.level, plan.model_kind);
  plan.mesh =
      build_mesh(object_of(require(root, "", "mesh"), "mesh"), plan.model);

  if (const json* bcs = get(root, "bcs"); bcs != nullptr && !bcs->empty())
    plan.model.boundary_conditions = build_bcs(*bcs, plan.model.layout);
  check_tag_coverage(plan.model.boundary_conditions, plan.mesh);

  build_solver(object_of(require(root, "", "solver"), "solver"), plan);

  if (const json* ic = get(root, "ic")) {
    build_ic(*ic, plan.model);
  } else if (plan.model.initial_condition.empty() &&
             plan.solver_type != "steady") {
    fail("ic", "required (the model has no built-in initial condition)");
  }

  if (plan.model_kind == "vam") plan.corrector = vam_models().second;

  build_output(get(root, "output"), plan);

  if (!ov.out_dir.empty()) plan.out_dir = ov.out_dir;
  if (ov.end_time) plan.settings.t_end = *ov.end_time;
  if (ov.write_interval) plan.settings.output_interval = *ov.write_interval;
  if (plan.settings.t_end < 0.0) fail("solver.t_end", "must be non-negative");
  return plan;
}

void print_report(const RunPlan& plan) {
  std::printf("OK\n");
  std::printf("model: %s (dimension %d", plan.model_kind.c_str(),
              plan.model.dimension);
  if (plan.level >= 0) std::printf(", level %d", plan.level);
  std::printf(")\n");
  std::printf("state fields: %s\n",
              space_list(plan.model.layout.state).c_str());
  std::printf("aux fields: %s\n", space_list(plan.model.layout.aux).c_str());
  std::string params;
  for (std::size_t i = 0; i < plan.model.layout.params.size(); ++i) {
    if (!params.empty()) params += ", ";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s = %g",
                  plan.model.layout.params[i].c_str(),
                  plan.model.layout.param_defaults[i]);
    params += buf;
  }
  std::printf("parameters: %s\n", params.c_str());
  std::printf("solver: %s\n", plan.solver_type.c_str());
  std::printf("mesh: %zu cells (%dd), tags: %s\n", plan.mesh.n_inner,
              plan.mesh.dimension, space_list(plan.mesh.tag_names).c_str());
}

int run_plan(RunPlan& plan) {
  namespace fs = std::filesystem;
  fs::create_directories(plan.out_dir);

  long snap_count = 0;
  const SnapshotSink sink = [&](const Snapshot& snap) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "%04ld", snap_count);
    const std::string stem = plan.out_dir + "/";
    if (plan.want_csv)
      write_csv_1d(plan.mesh, snap, stem + "snap_" + tag + ".csv");
    if (plan.want_vtk)
      write_vtk(plan.mesh, snap, stem + "snap_" + tag + ".vtk");
    if (plan.want_lifted)
      write_lifted_vtk(plan.mesh, plan.model, snap, plan.nz,
                       stem + "lifted_" + tag + ".vtk");
    ++snap_count;
  };

  long last_step = 0;
  double last_t = 0.0;
  plan.settings.step_monitor = [&](long step, double t, double dt) {
    last_step = step;
    last_t = t;
    std::printf("step %6ld  t = %-14.8g dt = %.8g\n", step, t, dt);
  };

  const auto tic = std::chrono::steady_clock::now();
  try {
    RunState rs;
    if (plan.solver_type == "transient") {
      rs = transient_hyperbolic_solve(plan.mesh, plan.model, plan.settings,
                                      sink);
    } else if (plan.solver_type == "vam") {
      rs = vam_solve(plan.mesh, plan.model, *plan.corrector, plan.settings,
                     sink);
    } else {
      int iterations = 0;
      rs.state = steady_residual_solve(plan.mesh, plan.model, plan.settings,
                                       nullptr, &iterations);
      rs.step = iterations;
      sink(make_snapshot(plan.mesh, plan.model, 0.0, iterations, rs.state.q,
                         rs.state.qaux));
      std::printf("newton iterations: %d\n", iterations);
    }
    if (plan.want_checkpoint)
      checkpoint_write(plan.mesh, plan.model, rs.state.q, rs.state.qaux, rs.t,
                       rs.step, plan.out_dir + "/checkpoint_final");
    const std::chrono::duration<double> wall =
        std::chrono::steady_clock::now() - tic;
    std::printf(
        "run complete: %ld step(s), t = %g, %ld snapshot(s), %.3f s wall "
        "clock\n",
        rs.step, rs.t, snap_count, wall.count());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error at step %ld, t = %g: %s\n", last_step,
                 last_t, e.what());
    return 1;
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"stratus: depth-averaged free-surface flow runner"};
  std::string config_path;
  Overrides ov;
  double end_time = 0.0;
  double write_interval = 0.0;
  bool validate_only = false;
  app.add_option("--config", config_path, "JSON run configuration file")
      ->required();
  app.add_option("--output", ov.out_dir, "override output.dir");
  auto* et =
      app.add_option("--end-time", end_time, "override solver.t_end");
  auto* wi = app.add_option("--write-interval", write_interval,
                            "override solver.output_interval");
  app.add_flag("--validate-only", validate_only,
               "validate the configuration, print the resolved layout, exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "flag error: " << e.what() << "\n";
    return 2;
  }
  if (et->count() > 0) ov.end_time = end_time;
  if (wi->count() > 0) ov.write_interval = write_interval;

  RunPlan plan;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config '" + config_path + "'");
    json root;
    try {
      root = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    plan = build_plan(root, ov);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  if (validate_only) {
    print_report(plan);
    return 0;
  }
  return run_plan(plan);
}

}  // namespace stratus
