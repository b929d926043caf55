// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Numerical engines: CFL time stepping, a path-conservative finite-volume
// step, matrix-free Newton-GMRES, explicit/implicit source updates, and
// the three composed drivers (transient hyperbolic, steady residual, and
// the non-hydrostatic predictor-corrector loop).
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "stratus/io.hpp"
#include "stratus/mesh.hpp"
#include "stratus/model.hpp"

namespace stratus {

/// Full solution arrays, field-major with stride mesh.n_total():
/// value f of cell c sits at q[f * stride + c].
struct StateArrays {
  std::vector<double> q;
  std::vector<double> qaux;
};

struct NewtonSettings {
  double tol_abs = 1e-10;
  double tol_rel = 1e-12;
  int max_iter = 50;
};

struct GmresSettings {
  double tol = 1e-12;
  int restart = 30;
  int max_restarts = 100;
};

struct SolverSettings {
  double cfl = 0.45;
  double t_end = 1.0;
  double output_interval = 0.0;  // <= 0: only first and final snapshots
  long max_steps = -1;           // < 0: no step limit
  NewtonSettings newton;
  GmresSettings gmres;
  bool vam_skip_corrector = false;  // freeze p0 = p1 = 0 (diagnostics)
  /// Called after every accepted step with (step, new time, dt taken).
  std::function<void(long, double, double)> step_monitor;
};

/// Receives a snapshot at every configured output time.
using SnapshotSink = std::function<void(const Snapshot&)>;

/// Resume point for the transient drivers.
struct RunState {
  StateArrays state;
  double t = 0.0;
  long step = 0;
};

/// CFL time step: cfl * min over inner cells of l_i / s_i with s_i the
/// largest wave speed over the cell's face normals and l_i the cell
/// length (1D) or volume / total face area (2D).  When every cell is
/// quiescent (all speeds < 1e-12) the step falls back to cfl * min l_i.
double compute_dt(const Mesh& mesh, const ModelDef& model,
                  const StateArrays& state, std::span<const double> params,
                  double cfl);

/// Rusanov-type path-conservative fluctuations across one face.  dl and
/// dr must hold n_fields slots; the caller scales by area/volume and dt.
void face_fluctuations(const ModelDef& model, std::span<const double> ql,
                       std::span<const double> qr,
                       std::span<const double> qauxl,
                       std::span<const double> qauxr,
                       std::span<const double> params,
                       std::array<double, 2> n, std::span<double> dl,
                       std::span<double> dr);

/// One forward-Euler update of the inner cells by accumulated face
/// fluctuations.  Ghost columns are left untouched.  Throws
/// NumericsError (with the cell id) if an update is not finite.
void hyperbolic_step(const Mesh& mesh, const ModelDef& model,
                     StateArrays& state, std::span<const double> params,
                     double dt);

/// Explicit source update Q += dt * S(Q) on inner cells.
void step_source(const Mesh& mesh, const ModelDef& model, StateArrays& state,
                 std::span<const double> params, double dt, double t);

/// Implicit source update: per cell solve Q' - Q - dt * S(Q') = 0 by a
/// dense Newton iteration using the exact source Jacobian.
void step_source_implicit(const Mesh& mesh, const ModelDef& model,
                          StateArrays& state, std::span<const double> params,
                          double dt, double t, const NewtonSettings& ns);

/// Runs the model's aux rules in declaration order: algebraic rules are
/// evaluated pointwise on all cells; derivative rules evaluate their
/// field expression and reconstruct the requested derivative through the
/// least-squares stencils (ghost rows copy their owner).
void update_qaux(const Mesh& mesh, const LsqStencils& stencils,
                 const ModelDef& model, StateArrays& state,
                 std::span<const double> params, double t);

/// The least-squares degree the model's derivative rules require (>= 1).
int required_stencil_degree(const ModelDef& model);

/// Restarted GMRES (modified Gram-Schmidt Arnoldi + Givens rotations).
/// Solves A x = b to ||b - A x|| <= tol * ||b|| (absolute when b = 0).
/// apply_a writes A*v for a vector v of b's size.  Throws NumericsError
/// with the final residual norm when restarts are exhausted.
std::vector<double> gmres(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>&
        apply_a,
    const std::vector<double>& b, const std::vector<double>& x0,
    const GmresSettings& gs);

struct NewtonResult {
  std::vector<double> x;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Undamped matrix-free Newton: Jacobian-vector products by forward
/// finite differences with eps = sqrt(machine eps) * (1 + ||x||_inf) /
/// max(||v||_inf, 1e-30).  Stops when ||R||_inf <= tol_abs or
/// tol_rel * ||R(x0)||_inf.
NewtonResult newton_solve(
    const std::function<std::vector<double>(const std::vector<double>&)>&
        residual,
    std::vector<double> x0, const NewtonSettings& ns, const GmresSettings& gs);

/// Evaluates the model's initial-condition expressions at the inner cell
/// centroids (zero where the model has none).  Aux starts at zero.
StateArrays initial_state(const Mesh& mesh, const ModelDef& model);

/// Explicit time loop: fill ghosts, update aux, CFL step (clipped to
/// output times and t_end), hyperbolic update, source update.  Snapshots
/// go to `sink` at t = 0 (or the resume time), every output interval,
/// and the final time.
RunState transient_hyperbolic_solve(const Mesh& mesh, const ModelDef& model,
                                    const SolverSettings& settings,
                                    const SnapshotSink& sink,
                                    std::optional<RunState> resume = {});

/// Steady solve: Newton on the residual kernel over the full state
/// array.  Each residual evaluation fills ghosts, updates aux, then
/// zeroes the ghost rows.  Reports Newton iterations via `iterations`.
StateArrays steady_residual_solve(const Mesh& mesh, const ModelDef& model,
                                  const SolverSettings& settings,
                                  const StateArrays* initial = nullptr,
                                  int* iterations = nullptr);

/// Predictor-corrector loop for the non-hydrostatic pair: hyperbolic
/// predictor step, implicit pressure solve on the corrector model, then
/// the pressure source update of the predictor state.
RunState vam_solve(const Mesh& mesh, const ModelDef& predictor,
                   const ModelDef& corrector, const SolverSettings& settings,
                   const SnapshotSink& sink,
                   std::optional<RunState> resume = {});

}  // namespace stratus
