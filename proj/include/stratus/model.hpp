// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Model abstraction: symbolic flux / nonconservative / source / residual
// blocks over a variable layout, boundary conditions, auxiliary-field
// update rules, and vertical lifting of depth-averaged states.  Concrete
// builders cover the shallow-water equations, the shallow-moment
// hierarchy, a non-hydrostatic predictor/corrector pair, and a steady
// Poisson problem.
#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stratus/expr.hpp"
#include "stratus/mesh.hpp"
#include "stratus/tape.hpp"

namespace stratus {

enum class BcKind : std::uint8_t { extrapolate, periodic, prescribe };

/// Boundary treatment for one physical tag.  `prescribe` maps state-field
/// indices to expressions evaluated with the inner cell's state/aux, the
/// face midpoint (x, y), the ghost-centroid distance, the outward normal,
/// the parameters, and the time; unlisted fields fall back to
/// extrapolation.
struct BoundaryCondition {
  BcKind kind = BcKind::extrapolate;
  std::string tag;
  std::string pair_tag;           // periodic only: the opposite tag
  std::map<int, Expr> prescribe;  // prescribe only
};

/// How one auxiliary field is recomputed by update_qaux.  Algebraic rules
/// evaluate `value` pointwise on every cell (ghosts included).  Derivative
/// rules evaluate `value` into a scratch field and reconstruct the
/// spatial derivative `multi_index` of that field on inner cells (ghost
/// rows copy their owner).  Aux fields without a rule are persistent:
/// they keep whatever was written into them externally.
struct AuxRule {
  int aux_index = 0;
  bool is_derivative = false;
  Expr value;
  std::array<int, 2> multi_index{0, 0};
};

/// Vertical reconstruction recipe: the horizontal velocity profile is
/// u(zeta) = sum_i state[u_moments[i]] / h * phi_i(zeta) over the shifted
/// Legendre basis, pressure is hydrostatic, density is constant below the
/// free surface, and the vertical velocity comes from the mean-velocity
/// divergence, w = -h (du/dx + dv/dy).
struct Lift3d {
  int h_state = 0;
  std::vector<int> u_moments;  // state indices of h*alpha_0 .. h*alpha_N
  std::vector<int> v_moments;  // empty in 1D
  int dudx_aux = -1;
  int dvdy_aux = -1;           // -1 in 1D
  int g_param = -1;
  int rho_param = -1;
};

/// One cell's vertical samples produced by lift_to_3d.
struct LiftedColumn {
  std::size_t cell = 0;
  std::vector<double> z;
  std::vector<double> rho;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<double> w;
  std::vector<double> p;
};

/// Compiled evaluators for all symbolic blocks of a model, shared by the
/// solvers.  Built once by finalize_model; evaluation is pure.
struct ModelKernels {
  std::vector<Kernel> flux;             // per direction, n_fields outputs
  std::vector<Kernel> flux_jacobian;    // per direction, n_fields^2 row-major
  std::vector<Kernel> nonconservative;  // per direction, n_fields^2 row-major
  Kernel source;                        // n_fields outputs
  Kernel source_jacobian;               // n_fields^2 outputs
  Kernel residual;                      // n_fields outputs; empty if none
  Kernel eigenvalues;                   // n_fields outputs; empty if none
  std::vector<Kernel> aux_rules;        // one output each, rule order
};

/// A complete model definition.  Symbolic pieces left empty default to
/// zero blocks of the right shape when the model is finalized.  Instances
/// are immutable once finalized.
struct ModelDef {
  std::string name;
  int dimension = 1;
  int n_fields = 0;
  VariableLayout layout;
  std::vector<std::vector<Expr>> flux;                          // [d][n]
  std::vector<std::vector<std::vector<Expr>>> nonconservative;  // [d][n][n]
  std::vector<Expr> source;                                     // [n]
  std::vector<Expr> residual;            // [n] for steady models, else empty
  std::vector<Expr> eigenvalues;         // closed form over the normal slot
  std::vector<BoundaryCondition> boundary_conditions;
  std::vector<Expr> initial_condition;   // over (x, y); may be empty
  std::optional<Lift3d> lift;
  std::vector<AuxRule> aux_rules;        // in evaluation order
  std::shared_ptr<const ModelKernels> kernels;

  /// Compiled kernels; throws ConfigError if finalize_model was not run.
  const ModelKernels& compiled() const;
};

/// Validates shapes, fills omitted blocks with zeros, and compiles all
/// kernels.  Builders return finalized models; call this again only after
/// editing the symbolic pieces of a custom model.
void finalize_model(ModelDef& m);

/// Shallow-water equations in d dimensions: states (h, hu[, hv]),
/// momentum flux with the h u^2 + g h^2 / 2 pressure closure, closed-form
/// characteristic speeds, and a constant-profile vertical lift.
ModelDef swe_model(int dimension);

/// Shallow-moment hierarchy of expansion order N in d dimensions:
/// states (h, h*alpha_0..h*alpha_N[, h*beta_0..h*beta_N]).  Flux and
/// nonconservative blocks contract the exact basis moment tensors; the
/// source combines Newtonian bulk friction (nu) and linear bottom slip
/// (C).  Order 0 reduces entry-wise to swe_model(d).
ModelDef sme_model(int dimension, int order);

/// Non-hydrostatic predictor/corrector pair (1D).  The predictor carries
/// (h, hu0, hu1, hw0, hw1) with a hyperbolic block and the pressure
/// source; the corrector solves a steady residual in the pressure
/// unknowns (p0, p1), obtained by substituting the semi-implicit update
/// into the divergence constraints.
std::pair<ModelDef, ModelDef> vam_models();

/// Steady 1D Poisson problem: one state T, residual -T_xx + 2, Dirichlet
/// values 1 and 2 prescribed on the "left" and "right" tags.
ModelDef poisson_model();

/// Characteristic speeds of the quasilinear operator (dF/dQ + NC) . n at
/// one state.  Uses the model's closed form when present, otherwise
/// assembles the matrix from the compiled Jacobian and nonconservative
/// kernels and solves it with the dense QR engine.  Returns ascending
/// values; throws NumericsError on complex pairs (loss of hyperbolicity).
std::vector<double> quasilinear_eigenvalues(const ModelDef& m,
                                            std::span<const double> q,
                                            std::span<const double> qaux,
                                            std::span<const double> params,
                                            std::array<double, 2> n);

/// Writes every ghost-cell column of Q according to the model's boundary
/// conditions.  Q and Qaux are field-major with stride mesh.n_total().
/// Ghost values depend only on inner cells, so the operation is
/// idempotent.  Throws ConfigError when the mesh tag set and the boundary
/// condition tag set differ (the message lists both).
void fill_ghosts(const ModelDef& m, const Mesh& mesh, double t,
                 std::vector<double>& q, const std::vector<double>& qaux,
                 std::span<const double> params);

/// Samples every inner cell's depth-averaged state on nz uniform vertical
/// levels spanning [0, 1.2 * max h].  Requires the model to carry a lift
/// recipe (UnsupportedError otherwise) and nz >= 2.  `params` supplies the
/// gravity/density values; when empty, the layout defaults are used.
std::vector<LiftedColumn> lift_to_3d(const ModelDef& m, const Mesh& mesh,
                                     const std::vector<double>& q,
                                     const std::vector<double>& qaux, int nz,
                                     std::span<const double> params = {});

}  // namespace stratus
