// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#include "stratus/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "stratus/basis.hpp"
#include "stratus/eig.hpp"

namespace stratus {

namespace {

bool is_exact_zero(const Expr& e) { return e.is_exact_constant(0); }

// c * f0 * f1 * ... with zero coefficients collapsing the product and
// exact-one coefficients elided, so generated trees stay minimal.
Expr coef_mul(const Rational& c, std::vector<Expr> factors) {
  if (c == 0) return Expr::integer(0);
  if (c == 1) return Expr::mul(std::move(factors));
  std::vector<Expr> kids;
  kids.reserve(factors.size() + 1);
  kids.push_back(Expr::rational(c));
  for (Expr& f : factors) kids.push_back(std::move(f));
  return Expr::mul(std::move(kids));
}

Expr sum_of(std::vector<Expr> terms) {
  std::erase_if(terms, [](const Expr& e) { return is_exact_zero(e); });
  return Expr::add(std::move(terms));
}

// g h^2 / 2 over the (h = state 0, g = param 0) convention shared by the
// depth-averaged builders, so order-0 moment rows match the
// shallow-water flux tree for tree.
Expr hydrostatic_pressure() {
  return Expr::rational(1, 2) * param_var(0) * Expr::pow(state_var(0), 2);
}

void collect_variables(const Expr& e,
                       std::set<std::pair<Slot, int>>& out) {
  if (e.kind() == ExprKind::variable) {
    out.emplace(e.node().slot, e.node().index);
    return;
  }
  for (const Expr& k : e.node().kids) collect_variables(k, out);
}

// Spatial x-derivative of an expression over per-cell fields, using a map
// from each variable to the variable holding its x-derivative.  Parameters
// are spatially constant.  Used to build the pressure-correction residual.
using SpatialDxMap = std::map<std::pair<Slot, int>, Expr>;

Expr field_dx(const Expr& e, const SpatialDxMap& dx) {
  std::set<std::pair<Slot, int>> vars;
  collect_variables(e, vars);
  std::vector<Expr> terms;
  for (const auto& v : vars) {
    if (v.first == Slot::param) continue;
    const Expr partial = simplify(differentiate(e, v.first, v.second));
    if (is_exact_zero(partial)) continue;
    const auto it = dx.find(v);
    if (it == dx.end())
      throw ConfigError("field_dx: no spatial-derivative field registered "
                        "for a variable of the expression");
    terms.push_back(partial * it->second);
  }
  return simplify(Expr::add(std::move(terms)));
}

AuxRule algebraic_rule(int aux_index, Expr value) {
  AuxRule r;
  r.aux_index = aux_index;
  r.is_derivative = false;
  r.value = std::move(value);
  return r;
}

AuxRule derivative_rule(int aux_index, Expr field, int dx_order, int dy_order) {
  AuxRule r;
  r.aux_index = aux_index;
  r.is_derivative = true;
  r.value = std::move(field);
  r.multi_index = {dx_order, dy_order};
  return r;
}

std::string join_tags(const std::set<std::string>& tags) {
  std::string out = "{";
  bool first = true;
  for (const std::string& t : tags) {
    if (!first) out += ", ";
    out += t;
    first = false;
  }
  return out + "}";
}

}  // namespace

const ModelKernels& ModelDef::compiled() const {
  if (!kernels)
    throw ConfigError("model '" + name +
                      "' has no compiled kernels; call finalize_model first");
  return *kernels;
}

void finalize_model(ModelDef& m) {
  if (m.dimension != 1 && m.dimension != 2)
    throw ConfigError("model '" + m.name + "': dimension must be 1 or 2");
  const int n = m.layout.n_state();
  if (n == 0)
    throw ConfigError("model '" + m.name + "' has no state fields");
  m.n_fields = n;
  m.layout.dimension = m.dimension;
  const std::size_t d = static_cast<std::size_t>(m.dimension);
  const std::size_t nn = static_cast<std::size_t>(n);

  if (m.flux.empty()) m.flux.assign(d, std::vector<Expr>(nn, Expr()));
  if (m.nonconservative.empty())
    m.nonconservative.assign(
        d, std::vector<std::vector<Expr>>(nn, std::vector<Expr>(nn, Expr())));
  if (m.source.empty()) m.source.assign(nn, Expr());

  if (m.flux.size() != d || m.nonconservative.size() != d)
    throw ConfigError("model '" + m.name +
                      "': flux/nonconservative must have one block per "
                      "spatial dimension");
  for (const auto& f : m.flux)
    if (f.size() != nn)
      throw ConfigError("model '" + m.name + "': flux row count mismatch");
  for (const auto& mat : m.nonconservative) {
    if (mat.size() != nn)
      throw ConfigError("model '" + m.name + "': NC row count mismatch");
    for (const auto& row : mat)
      if (row.size() != nn)
        throw ConfigError("model '" + m.name + "': NC column count mismatch");
  }
  if (m.source.size() != nn)
    throw ConfigError("model '" + m.name + "': source length mismatch");
  if (!m.residual.empty() && m.residual.size() != nn)
    throw ConfigError("model '" + m.name + "': residual length mismatch");
  if (!m.eigenvalues.empty() && m.eigenvalues.size() != nn)
    throw ConfigError("model '" + m.name + "': eigenvalue list must have "
                      "one entry per state field");
  if (!m.initial_condition.empty() && m.initial_condition.size() != nn)
    throw ConfigError("model '" + m.name +
                      "': initial condition length mismatch");

  std::set<int> rule_targets;
  for (const AuxRule& r : m.aux_rules) {
    if (r.aux_index < 0 || r.aux_index >= m.layout.n_aux())
      throw ConfigError("model '" + m.name + "': aux rule index out of range");
    if (!rule_targets.insert(r.aux_index).second)
      throw ConfigError("model '" + m.name +
                        "': two aux rules target the same field");
    if (r.is_derivative) {
      if (r.multi_index[0] < 0 || r.multi_index[1] < 0 ||
          r.multi_index[0] + r.multi_index[1] < 1)
        throw ConfigError("model '" + m.name +
                          "': derivative rule needs a positive order");
      if (m.dimension == 1 && r.multi_index[1] != 0)
        throw ConfigError("model '" + m.name +
                          "': y-derivative rule on a 1D model");
    }
  }
  for (const BoundaryCondition& bc : m.boundary_conditions)
    for (const auto& [field, expr] : bc.prescribe)
      if (field < 0 || field >= n)
        throw ConfigError("model '" + m.name + "': boundary condition for '" +
                          bc.tag + "' prescribes field index " +
                          std::to_string(field) + " outside the state vector");

  auto kern = std::make_shared<ModelKernels>();
  for (std::size_t k = 0; k < d; ++k) {
    kern->flux.push_back(compile_kernel(m.flux[k], m.layout));
    const auto jac = jacobian(m.flux[k], n);
    std::vector<Expr> flat;
    flat.reserve(nn * nn);
    for (const auto& row : jac)
      for (const Expr& e : row) flat.push_back(e);
    kern->flux_jacobian.push_back(compile_kernel(flat, m.layout));

    std::vector<Expr> nc_flat;
    nc_flat.reserve(nn * nn);
    for (const auto& row : m.nonconservative[k])
      for (const Expr& e : row) nc_flat.push_back(e);
    kern->nonconservative.push_back(compile_kernel(nc_flat, m.layout));
  }
  kern->source = compile_kernel(m.source, m.layout);
  {
    const auto jac = jacobian(m.source, n);
    std::vector<Expr> flat;
    flat.reserve(nn * nn);
    for (const auto& row : jac)
      for (const Expr& e : row) flat.push_back(e);
    kern->source_jacobian = compile_kernel(flat, m.layout);
  }
  if (!m.residual.empty())
    kern->residual = compile_kernel(m.residual, m.layout);
  if (!m.eigenvalues.empty())
    kern->eigenvalues = compile_kernel(m.eigenvalues, m.layout);
  for (const AuxRule& r : m.aux_rules)
    kern->aux_rules.push_back(compile_kernel({r.value}, m.layout));
  m.kernels = std::move(kern);
}

// ---------------------------------------------------------------------------
// Shallow-water equations.

ModelDef swe_model(int dimension) {
  if (dimension != 1 && dimension != 2)
    throw ConfigError("swe_model: dimension must be 1 or 2");
  ModelDef m;
  m.name = "swe";
  m.dimension = dimension;

  std::vector<std::string> state = {"h", "hu"};
  std::vector<std::string> aux = {"dudx"};
  if (dimension == 2) {
    state.push_back("hv");
    aux.push_back("dvdy");
  }
  m.layout = VariableLayout(state, aux, {"g", "rho"}, {9.81, 1000.0},
                            dimension);

  const Expr h = state_var(0);
  const Expr hu = state_var(1);
  const Expr pressure = hydrostatic_pressure();

  if (dimension == 1) {
    m.flux = {{hu, hu * hu / h + pressure}};
  } else {
    const Expr hv = state_var(2);
    m.flux = {{hu, hu * hu / h + pressure, hu * hv / h},
              {hv, hu * hv / h, hv * hv / h + pressure}};
  }

  // Closed-form characteristic speeds along the face normal.
  const Expr g = param_var(0);
  Expr un = (hu / h) * normal_x();
  if (dimension == 2) un = un + (state_var(2) / h) * normal_y();
  const Expr c = Expr::sqrt(g * h);
  if (dimension == 1)
    m.eigenvalues = {un - c, un + c};
  else
    m.eigenvalues = {un - c, un, un + c};

  m.aux_rules.push_back(derivative_rule(0, state_var(1) / state_var(0), 1, 0));
  if (dimension == 2)
    m.aux_rules.push_back(
        derivative_rule(1, state_var(2) / state_var(0), 0, 1));

  Lift3d lift;
  lift.h_state = 0;
  lift.u_moments = {1};
  lift.dudx_aux = 0;
  if (dimension == 2) {
    lift.v_moments = {2};
    lift.dvdy_aux = 1;
  }
  lift.g_param = 0;
  lift.rho_param = 1;
  m.lift = lift;

  finalize_model(m);
  return m;
}

// ---------------------------------------------------------------------------
// Shallow-moment hierarchy.

ModelDef sme_model(int dimension, int order) {
  if (dimension != 1 && dimension != 2)
    throw ConfigError("sme_model: dimension must be 1 or 2");
  if (order < 0 || order > kMaxBasisOrder)
    throw ConfigError("sme_model: order must be in [0, " +
                      std::to_string(kMaxBasisOrder) + "]");
  const int N = order;
  const MomentTensors& T = moment_tensors(N);

  ModelDef m;
  m.name = "sme";
  m.dimension = dimension;

  std::vector<std::string> state = {"h"};
  for (int i = 0; i <= N; ++i) state.push_back("ha" + std::to_string(i));
  if (dimension == 2)
    for (int i = 0; i <= N; ++i) state.push_back("hb" + std::to_string(i));
  std::vector<std::string> aux = {"um"};
  if (dimension == 2) aux.push_back("vm");
  aux.push_back("dudx");
  if (dimension == 2) aux.push_back("dvdy");
  m.layout = VariableLayout(state, aux, {"g", "rho", "nu", "C"},
                            {9.81, 1000.0, 0.0, 0.0}, dimension);

  const Expr h = state_var(0);
  const auto sa = [&](int i) { return state_var(1 + i); };              // h a_i
  const auto sb = [&](int j) { return state_var(1 + (N + 1) + j); };    // h b_j
  const int um_aux = 0;
  const int vm_aux = dimension == 2 ? 1 : -1;

  // One moment-flux row: sum_ij A_ijk / M_k * left_i * right_j / h.  For
  // the self-coupled (left == right) rows the symmetric pairs merge.
  const auto moment_row = [&](int k, const auto& left, const auto& right,
                              bool symmetric) -> Expr {
    std::vector<Expr> terms;
    for (int i = 0; i <= N; ++i) {
      for (int j = symmetric ? i : 0; j <= N; ++j) {
        Rational c = T.a(i, j, k) / T.m(k);
        if (symmetric && j > i) c *= 2;
        if (c == 0) continue;
        terms.push_back(coef_mul(c, {left(i), right(j)}));
      }
    }
    return Expr::div(sum_of(std::move(terms)), state_var(0));
  };

  std::vector<Expr> fx;
  fx.push_back(sa(0));
  for (int k = 0; k <= N; ++k) {
    Expr row = moment_row(k, sa, sa, true);
    if (k == 0) row = row + hydrostatic_pressure();
    fx.push_back(row);
  }
  if (dimension == 2) {
    for (int k = 0; k <= N; ++k) fx.push_back(moment_row(k, sa, sb, false));
    std::vector<Expr> fy;
    fy.push_back(sb(0));
    for (int k = 0; k <= N; ++k) fy.push_back(moment_row(k, sa, sb, false));
    for (int k = 0; k <= N; ++k) {
      Expr row = moment_row(k, sb, sb, true);
      if (k == 0) row = row + hydrostatic_pressure();
      fy.push_back(row);
    }
    m.flux = {std::move(fx), std::move(fy)};
  } else {
    m.flux = {std::move(fx)};
  }

  // Nonconservative coupling: for the moment row k and moment column
  // l >= 1, the entry is  -mean_velocity * delta_kl  +  sum_{i>=1}
  // (velocity coefficient)_i * B_kil / M_k, where the velocity
  // coefficients come from the same horizontal component as the row.
  const int n_fields = static_cast<int>(state.size());
  const auto nc_entry = [&](int k, int l, const auto& coeffs,
                            int mean_aux) -> Expr {
    std::vector<Expr> terms;
    if (k == l) terms.push_back(coef_mul(-1, {aux_var(mean_aux)}));
    for (int i = 1; i <= N; ++i) {
      const Rational c = T.b(k, i, l) / T.m(k);
      if (c == 0) continue;
      terms.push_back(coef_mul(c, {Expr::div(coeffs(i), state_var(0))}));
    }
    return sum_of(std::move(terms));
  };

  std::vector<std::vector<std::vector<Expr>>> nc(
      static_cast<std::size_t>(dimension),
      std::vector<std::vector<Expr>>(
          static_cast<std::size_t>(n_fields),
          std::vector<Expr>(static_cast<std::size_t>(n_fields), Expr())));
  for (int k = 0; k <= N; ++k) {
    for (int l = 1; l <= N; ++l) {
      nc[0][1 + k][1 + l] = nc_entry(k, l, sa, um_aux);
      if (dimension == 2) {
        nc[0][1 + (N + 1) + k][1 + l] = nc_entry(k, l, sb, vm_aux);
        nc[1][1 + k][1 + (N + 1) + l] = nc_entry(k, l, sa, um_aux);
        nc[1][1 + (N + 1) + k][1 + (N + 1) + l] = nc_entry(k, l, sb, vm_aux);
      }
    }
  }
  m.nonconservative = std::move(nc);

  // Source: linear bottom slip + Newtonian bulk friction, per moment row.
  const Expr nu = param_var(2);
  const Expr slip_factor = Expr::div(param_var(3), param_var(1));  // C / rho
  const auto bottom_trace = [&](const auto& s) {
    std::vector<Expr> parts;
    for (int i = 0; i <= N; ++i)
      parts.push_back(coef_mul(legendre_shifted(i).eval(Rational(0)), {s(i)}));
    return Expr::div(sum_of(std::move(parts)), state_var(0));
  };
  const auto source_row = [&](int k, const auto& s) -> Expr {
    std::vector<Expr> terms;
    const Rational slip_coef =
        -legendre_shifted(k).eval(Rational(0)) / T.m(k);
    if (slip_coef != 0)
      terms.push_back(coef_mul(slip_coef, {slip_factor, bottom_trace(s)}));
    std::vector<Expr> bulk;
    for (int i = 0; i <= N; ++i) {
      const Rational c = -T.d(i, k) / T.m(k);
      if (c == 0) continue;
      bulk.push_back(coef_mul(c, {s(i)}));
    }
    if (!bulk.empty())
      terms.push_back(Expr::div(Expr::mul({nu, sum_of(std::move(bulk))}),
                                Expr::pow(state_var(0), 2)));
    return sum_of(std::move(terms));
  };

  std::vector<Expr> source(static_cast<std::size_t>(n_fields), Expr());
  for (int k = 0; k <= N; ++k) {
    source[static_cast<std::size_t>(1 + k)] = source_row(k, sa);
    if (dimension == 2)
      source[static_cast<std::size_t>(1 + (N + 1) + k)] = source_row(k, sb);
  }
  m.source = std::move(source);

  // Order 0 specializes to the shallow-water system, whose characteristic
  // speeds are known in closed form; higher orders use the QR route.
  if (N == 0) {
    const Expr g = param_var(0);
    Expr un = (sa(0) / h) * normal_x();
    if (dimension == 2) un = un + (sb(0) / h) * normal_y();
    const Expr c = Expr::sqrt(g * h);
    if (dimension == 1)
      m.eigenvalues = {un - c, un + c};
    else
      m.eigenvalues = {un - c, un, un + c};
  }

  m.aux_rules.push_back(algebraic_rule(um_aux, Expr::div(sa(0), h)));
  if (dimension == 2)
    m.aux_rules.push_back(algebraic_rule(vm_aux, Expr::div(sb(0), h)));
  m.aux_rules.push_back(
      derivative_rule(m.layout.aux_index("dudx"), aux_var(um_aux), 1, 0));
  if (dimension == 2)
    m.aux_rules.push_back(
        derivative_rule(m.layout.aux_index("dvdy"), aux_var(vm_aux), 0, 1));

  Lift3d lift;
  lift.h_state = 0;
  for (int i = 0; i <= N; ++i) lift.u_moments.push_back(1 + i);
  if (dimension == 2)
    for (int j = 0; j <= N; ++j) lift.v_moments.push_back(1 + (N + 1) + j);
  lift.dudx_aux = m.layout.aux_index("dudx");
  if (dimension == 2) lift.dvdy_aux = m.layout.aux_index("dvdy");
  lift.g_param = 0;
  lift.rho_param = 1;
  m.lift = lift;

  finalize_model(m);
  return m;
}

// ---------------------------------------------------------------------------
// Non-hydrostatic predictor / pressure corrector pair.

std::pair<ModelDef, ModelDef> vam_models() {
  // --- Predictor: hyperbolic transport of (h, hu0, hu1, hw0, hw1). ---
  ModelDef pred;
  pred.name = "vam_predictor";
  pred.dimension = 1;
  pred.layout = VariableLayout(
      {"h", "hu0", "hu1", "hw0", "hw1"},
      {"w2", "p0", "p1", "dhp0dx", "dhdx", "dbdx", "b"}, {"g"}, {9.81}, 1);

  const Expr h = state_var(0);
  const Expr hu0 = state_var(1);
  const Expr hu1 = state_var(2);
  const Expr hw0 = state_var(3);
  const Expr hw1 = state_var(4);
  const Expr w2 = aux_var(0);
  const Expr p0 = aux_var(1);
  const Expr p1 = aux_var(2);
  const Expr dhp0dx = aux_var(3);
  const Expr dhdx = aux_var(4);
  const Expr dbdx = aux_var(5);

  pred.flux = {{hu0,
                hu0 * hu0 / h + Expr::rational(1, 3) * (hu1 * hu1 / h),
                Expr::integer(2) * (hu0 * hu1 / h),
                hu0 * hw0 / h + Expr::rational(1, 3) * (hu1 * hw1 / h),
                hu0 * hw1 / h + hu1 * hw0 / h +
                    Expr::rational(2, 5) * (hu1 * w2)}};

  std::vector<std::vector<Expr>> nc(5, std::vector<Expr>(5, Expr()));
  nc[1][0] = param_var(0) * h;
  nc[2][2] = coef_mul(-1, {Expr::div(hu0, h)});
  nc[4][2] = Expr::rational(1, 5) * w2 - hw0 / h;
  pred.nonconservative = {std::move(nc)};

  pred.source = {Expr(),
                 dhp0dx + Expr::integer(2) * (p1 * dbdx),
                 (p1 - Expr::integer(3) * p0) * dhdx +
                     Expr::integer(6) * ((p1 - p0) * dbdx),
                 Expr::integer(2) * p1,
                 Expr::integer(6) * (p0 - p1)};

  pred.aux_rules.push_back(derivative_rule(4, state_var(0), 1, 0));  // dhdx
  pred.aux_rules.push_back(derivative_rule(5, aux_var(6), 1, 0));    // dbdx
  pred.aux_rules.push_back(
      derivative_rule(3, Expr::mul({state_var(0), aux_var(1)}), 1, 0));
  pred.aux_rules.push_back(algebraic_rule(
      0, Expr::div(coef_mul(-1, {Expr::add({hw0, hw1})}), h) +
             Expr::div(Expr::add({hu0, hu1}), h) * dbdx));
  finalize_model(pred);

  // --- Corrector: steady residual in the pressure coefficients. ---
  ModelDef corr;
  corr.name = "vam_corrector";
  corr.dimension = 1;
  corr.layout = VariableLayout(
      {"p0", "p1"},
      {"h", "hu0", "hu1", "hw0", "hw1", "dhu0dx", "dhu1dx", "dhdx", "ddhdxx",
       "b", "dbdx", "ddbdxx", "dp0dx", "dp1dx", "dhp0dx", "ddhp0dxx"},
      {"dt"}, {0.0}, 1);

  const Expr cp0 = state_var(0);
  const Expr cp1 = state_var(1);
  const Expr ch = aux_var(0);
  const Expr chu0 = aux_var(1);
  const Expr chu1 = aux_var(2);
  const Expr chw0 = aux_var(3);
  const Expr chw1 = aux_var(4);
  const Expr cdhdx = aux_var(7);
  const Expr cb_dx = aux_var(10);
  const Expr cdhp0dx = aux_var(14);
  const Expr cdt = param_var(0);

  // Semi-implicit pressure update of the predictor state.
  const Expr s_hu0 = cdhp0dx + Expr::integer(2) * (cp1 * cb_dx);
  const Expr s_hu1 = (cp1 - Expr::integer(3) * cp0) * cdhdx +
                     Expr::integer(6) * ((cp1 - cp0) * cb_dx);
  const Expr s_hw0 = Expr::integer(2) * cp1;
  const Expr s_hw1 = Expr::integer(6) * (cp0 - cp1);

  const Expr hu0_new = chu0 + cdt * s_hu0;
  const Expr hu1_new = chu1 + cdt * s_hu1;
  const Expr hw0_new = chw0 + cdt * s_hw0;
  const Expr hw1_new = chw1 + cdt * s_hw1;

  const Expr u0_new = hu0_new / ch;
  const Expr u1_new = hu1_new / ch;
  const Expr w0_new = hw0_new / ch;
  const Expr w1_new = hw1_new / ch;

  SpatialDxMap dx;
  dx[{Slot::state, 0}] = aux_var(12);  // p0   -> dp0dx
  dx[{Slot::state, 1}] = aux_var(13);  // p1   -> dp1dx
  dx[{Slot::aux, 0}] = aux_var(7);     // h    -> dhdx
  dx[{Slot::aux, 1}] = aux_var(5);     // hu0  -> dhu0dx
  dx[{Slot::aux, 2}] = aux_var(6);     // hu1  -> dhu1dx
  dx[{Slot::aux, 7}] = aux_var(8);     // dhdx -> ddhdxx
  dx[{Slot::aux, 9}] = aux_var(10);    // b    -> dbdx
  dx[{Slot::aux, 10}] = aux_var(11);   // dbdx -> ddbdxx
  dx[{Slot::aux, 14}] = aux_var(15);   // dhp0dx -> ddhp0dxx

  const Expr du0dx_new = field_dx(u0_new, dx);
  const Expr dhu1dx_new = field_dx(hu1_new, dx);

  // Divergence constraints written over placeholder unknowns, then closed
  // by substituting the updated state.  The placeholder layout shares the
  // aux/param spaces with the corrector, so only its states are replaced.
  const Expr v_u0 = state_var(0);
  const Expr v_u1 = state_var(1);
  const Expr v_w0 = state_var(2);
  const Expr v_w1 = state_var(3);
  const Expr v_du0dx = state_var(4);
  const Expr v_dhu1dx = state_var(5);

  const Expr r0_display =
      ch * v_du0dx + Expr::rational(1, 3) * v_dhu1dx +
      Expr::rational(1, 3) * (v_u1 * cdhdx) +
      Expr::integer(2) * (v_w0 - v_u0 * cb_dx);
  const Expr r1_display = ch * v_du0dx + v_u1 * cdhdx +
                          Expr::integer(2) * (v_u1 * cb_dx - v_w1);

  SubstitutionMap close;
  close[{Slot::state, 0}] = u0_new;
  close[{Slot::state, 1}] = u1_new;
  close[{Slot::state, 2}] = w0_new;
  close[{Slot::state, 3}] = w1_new;
  close[{Slot::state, 4}] = du0dx_new;
  close[{Slot::state, 5}] = dhu1dx_new;

  corr.residual = {simplify(substitute(r0_display, close)),
                   simplify(substitute(r1_display, close))};

  corr.aux_rules.push_back(derivative_rule(5, aux_var(1), 1, 0));
  corr.aux_rules.push_back(derivative_rule(6, aux_var(2), 1, 0));
  corr.aux_rules.push_back(derivative_rule(7, aux_var(0), 1, 0));
  corr.aux_rules.push_back(derivative_rule(8, aux_var(0), 2, 0));
  corr.aux_rules.push_back(derivative_rule(10, aux_var(9), 1, 0));
  corr.aux_rules.push_back(derivative_rule(11, aux_var(9), 2, 0));
  corr.aux_rules.push_back(derivative_rule(12, state_var(0), 1, 0));
  corr.aux_rules.push_back(derivative_rule(13, state_var(1), 1, 0));
  corr.aux_rules.push_back(
      derivative_rule(14, Expr::mul({aux_var(0), state_var(0)}), 1, 0));
  corr.aux_rules.push_back(
      derivative_rule(15, Expr::mul({aux_var(0), state_var(0)}), 2, 0));
  finalize_model(corr);

  return {std::move(pred), std::move(corr)};
}

// ---------------------------------------------------------------------------
// Steady Poisson problem.

ModelDef poisson_model() {
  ModelDef m;
  m.name = "poisson";
  m.dimension = 1;
  m.layout = VariableLayout({"T"}, {"ddTdxx"}, {}, {}, 1);
  m.residual = {Expr::integer(2) - aux_var(0)};
  m.aux_rules.push_back(derivative_rule(0, state_var(0), 2, 0));

  BoundaryCondition left;
  left.kind = BcKind::prescribe;
  left.tag = "left";
  left.prescribe[0] = Expr::integer(1);
  BoundaryCondition right;
  right.kind = BcKind::prescribe;
  right.tag = "right";
  right.prescribe[0] = Expr::integer(2);
  m.boundary_conditions = {std::move(left), std::move(right)};

  finalize_model(m);
  return m;
}

// ---------------------------------------------------------------------------
// Characteristic speeds.

std::vector<double> quasilinear_eigenvalues(const ModelDef& m,
                                            std::span<const double> q,
                                            std::span<const double> qaux,
                                            std::span<const double> params,
                                            std::array<double, 2> n) {
  const ModelKernels& kern = m.compiled();
  const int nf = m.n_fields;
  PointInputs in;
  in.state = q.data();
  in.aux = qaux.data();
  in.params = params.data();
  in.normal = n.data();

  if (!kern.eigenvalues.empty()) {
    std::vector<double> out(static_cast<std::size_t>(nf));
    kern.eigenvalues.eval_point(in, out.data());
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::size_t nsq = static_cast<std::size_t>(nf) * nf;
  std::vector<double> a(nsq, 0.0);
  std::vector<double> block(nsq);
  for (int d = 0; d < m.dimension; ++d) {
    if (n[static_cast<std::size_t>(d)] == 0.0) continue;
    const double nd = n[static_cast<std::size_t>(d)];
    kern.flux_jacobian[static_cast<std::size_t>(d)].eval_point(in,
                                                               block.data());
    for (std::size_t i = 0; i < nsq; ++i) a[i] += nd * block[i];
    kern.nonconservative[static_cast<std::size_t>(d)].eval_point(in,
                                                                 block.data());
    for (std::size_t i = 0; i < nsq; ++i) a[i] += nd * block[i];
  }
  return real_eigenvalues(std::move(a), nf);
}

// ---------------------------------------------------------------------------
// Ghost-cell boundary filling.

void fill_ghosts(const ModelDef& m, const Mesh& mesh, double t,
                 std::vector<double>& q, const std::vector<double>& qaux,
                 std::span<const double> params) {
  const std::size_t stride = mesh.n_total();
  const std::size_t nf = static_cast<std::size_t>(m.n_fields);
  const std::size_t na = static_cast<std::size_t>(m.layout.n_aux());
  if (q.size() != nf * stride)
    throw ConfigError("fill_ghosts: state array size does not match mesh");
  if (qaux.size() != na * stride)
    throw ConfigError("fill_ghosts: aux array size does not match mesh");

  std::set<std::string> mesh_tags(mesh.tag_names.begin(),
                                  mesh.tag_names.end());
  std::set<std::string> bc_tags;
  for (const BoundaryCondition& bc : m.boundary_conditions)
    if (!bc_tags.insert(bc.tag).second)
      throw ConfigError("fill_ghosts: duplicate boundary condition for tag '" +
                        bc.tag + "'");
  if (mesh_tags != bc_tags)
    throw ConfigError("fill_ghosts: mesh boundary tags " +
                      join_tags(mesh_tags) +
                      " do not match boundary-condition tags " +
                      join_tags(bc_tags));

  // Validate periodic pairs and precompute partner inner cells.
  std::map<std::string, const BoundaryCondition*> by_tag;
  for (const BoundaryCondition& bc : m.boundary_conditions)
    by_tag[bc.tag] = &bc;
  std::map<std::size_t, std::int32_t> periodic_partner;  // face -> inner cell
  for (const BoundaryCondition& bc : m.boundary_conditions) {
    if (bc.kind != BcKind::periodic) continue;
    const auto pit = by_tag.find(bc.pair_tag);
    if (pit == by_tag.end() || pit->second->kind != BcKind::periodic ||
        pit->second->pair_tag != bc.tag)
      throw ConfigError(
          "fill_ghosts: periodic tag '" + bc.tag +
          "' must pair with a periodic condition on '" + bc.pair_tag +
          "' that pairs back");
    const std::vector<std::size_t>& mine = mesh.tag_faces.at(bc.tag);
    const std::vector<std::size_t>& theirs = mesh.tag_faces.at(bc.pair_tag);
    if (mine.size() != theirs.size())
      throw ConfigError("fill_ghosts: periodic tags '" + bc.tag + "' and '" +
                        bc.pair_tag + "' have different face counts");
    std::array<double, 2> shift = {0.0, 0.0};
    for (std::size_t f : theirs) {
      shift[0] += mesh.faces[f].midpoint[0];
      shift[1] += mesh.faces[f].midpoint[1];
    }
    for (std::size_t f : mine) {
      shift[0] -= mesh.faces[f].midpoint[0];
      shift[1] -= mesh.faces[f].midpoint[1];
    }
    const double inv = 1.0 / static_cast<double>(mine.size());
    shift[0] *= inv;
    shift[1] *= inv;
    const double tol =
        1e-8 * (1.0 + std::hypot(shift[0], shift[1]));
    for (std::size_t f : mine) {
      const double tx = mesh.faces[f].midpoint[0] + shift[0];
      const double ty = mesh.faces[f].midpoint[1] + shift[1];
      double best = std::numeric_limits<double>::infinity();
      std::int32_t partner = -1;
      for (std::size_t g : theirs) {
        const double d = std::hypot(mesh.faces[g].midpoint[0] - tx,
                                    mesh.faces[g].midpoint[1] - ty);
        if (d < best) {
          best = d;
          partner = mesh.faces[g].left;
        }
      }
      if (partner < 0 || best > tol)
        throw ConfigError("fill_ghosts: periodic tags '" + bc.tag + "' and '" +
                          bc.pair_tag +
                          "' have faces with no translated counterpart");
      periodic_partner[f] = partner;
    }
  }

  std::vector<double> inner_state(nf);
  std::vector<double> inner_aux(na);
  for (const BoundaryCondition& bc : m.boundary_conditions) {
    for (std::size_t fid : mesh.tag_faces.at(bc.tag)) {
      const Face& f = mesh.faces[fid];
      const std::size_t inner = static_cast<std::size_t>(f.left);
      const std::size_t ghost = static_cast<std::size_t>(f.right);
      const std::size_t source =
          bc.kind == BcKind::periodic
              ? static_cast<std::size_t>(periodic_partner.at(fid))
              : inner;
      for (std::size_t k = 0; k < nf; ++k)
        q[k * stride + ghost] = q[k * stride + source];
      if (bc.kind != BcKind::prescribe) continue;

      for (std::size_t k = 0; k < nf; ++k)
        inner_state[k] = q[k * stride + inner];
      for (std::size_t k = 0; k < na; ++k)
        inner_aux[k] = qaux[k * stride + inner];
      EvalBindings b;
      b.state = inner_state;
      b.aux = inner_aux;
      b.params = params;
      b.normal = std::span<const double>(f.normal.data(), 2);
      b.x = f.midpoint[0];
      b.y = f.midpoint[1];
      b.dist = std::hypot(mesh.centroid[ghost][0] - f.midpoint[0],
                          mesh.centroid[ghost][1] - f.midpoint[1]);
      b.t = t;
      for (const auto& [field, expr] : bc.prescribe)
        q[static_cast<std::size_t>(field) * stride + ghost] =
            eval_expr(expr, b);
    }
  }
}

// ---------------------------------------------------------------------------
// Vertical lifting.

std::vector<LiftedColumn> lift_to_3d(const ModelDef& m, const Mesh& mesh,
                                     const std::vector<double>& q,
                                     const std::vector<double>& qaux, int nz,
                                     std::span<const double> params) {
  if (!m.lift)
    throw UnsupportedError("model '" + m.name +
                           "' does not define a vertical lift");
  if (nz < 2) throw ConfigError("lift_to_3d: nz must be at least 2");
  const Lift3d& lift = *m.lift;
  const std::size_t stride = mesh.n_total();
  if (q.size() != static_cast<std::size_t>(m.n_fields) * stride)
    throw ConfigError("lift_to_3d: state array size does not match mesh");
  if (qaux.size() != static_cast<std::size_t>(m.layout.n_aux()) * stride)
    throw ConfigError("lift_to_3d: aux array size does not match mesh");

  std::vector<double> par(params.begin(), params.end());
  if (par.empty()) par = m.layout.param_defaults;
  const double g = par.at(static_cast<std::size_t>(lift.g_param));
  const double rho_w = par.at(static_cast<std::size_t>(lift.rho_param));

  const std::size_t h_off = static_cast<std::size_t>(lift.h_state) * stride;
  double h_max = 0.0;
  for (std::size_t c = 0; c < mesh.n_inner; ++c)
    h_max = std::max(h_max, q[h_off + c]);
  const double z_max = 1.2 * h_max;

  const int order = static_cast<int>(lift.u_moments.size()) - 1;
  std::vector<LiftedColumn> columns;
  columns.reserve(mesh.n_inner);
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    LiftedColumn col;
    col.cell = c;
    col.z.resize(static_cast<std::size_t>(nz));
    col.rho.resize(static_cast<std::size_t>(nz));
    col.u.resize(static_cast<std::size_t>(nz));
    col.v.resize(static_cast<std::size_t>(nz));
    col.w.resize(static_cast<std::size_t>(nz));
    col.p.resize(static_cast<std::size_t>(nz));

    const double h = q[h_off + c];
    const bool wet = h > 0.0;
    double div_xy = qaux[static_cast<std::size_t>(lift.dudx_aux) * stride + c];
    if (lift.dvdy_aux >= 0)
      div_xy += qaux[static_cast<std::size_t>(lift.dvdy_aux) * stride + c];
    const double w_vert = wet ? -h * div_xy : 0.0;

    for (int j = 0; j < nz; ++j) {
      const double z =
          z_max * static_cast<double>(j) / static_cast<double>(nz - 1);
      const double zeta = wet ? std::min(z / h, 1.0) : 0.0;
      const std::vector<double> phi = eval_basis_all(order, zeta);
      double u = 0.0;
      double v = 0.0;
      if (wet) {
        for (std::size_t i = 0; i < lift.u_moments.size(); ++i)
          u += q[static_cast<std::size_t>(lift.u_moments[i]) * stride + c] /
               h * phi[i];
        for (std::size_t i = 0; i < lift.v_moments.size(); ++i)
          v += q[static_cast<std::size_t>(lift.v_moments[i]) * stride + c] /
               h * phi[i];
      }
      const std::size_t sj = static_cast<std::size_t>(j);
      col.z[sj] = z;
      col.rho[sj] = (h - z >= 0.0 && wet) ? rho_w : 0.0;
      col.u[sj] = wet ? u : 0.0;
      col.v[sj] = wet ? v : 0.0;
      col.w[sj] = w_vert;
      col.p[sj] = rho_w * g * std::max(h - z, 0.0);
    }
    columns.push_back(std::move(col));
  }
  return columns;
}

}  // namespace stratus
