// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#include "stratus/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "stratus/common.hpp"

namespace stratus {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::abs(x));
  return m;
}

double two_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void gather_column(std::span<const double> src, std::size_t stride,
                   std::size_t cell, std::size_t n, double* out) {
  for (std::size_t f = 0; f < n; ++f) out[f] = src[f * stride + cell];
}

// Field-major copies of the cell centroids for batched kernel evaluation.
struct CentroidSoA {
  std::vector<double> cx, cy;
};

CentroidSoA centroid_soa(const Mesh& mesh) {
  const std::size_t n = mesh.n_total();
  CentroidSoA soa;
  soa.cx.resize(n);
  soa.cy.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    soa.cx[c] = mesh.centroid[c][0];
    soa.cy[c] = mesh.centroid[c][1];
  }
  return soa;
}

double max_wave_speed(const ModelDef& model, std::span<const double> q,
                      std::span<const double> qaux,
                      std::span<const double> params,
                      const std::array<double, 2>& n) {
  const auto ev = quasilinear_eigenvalues(model, q, qaux, params, n);
  double s = 0.0;
  for (const double v : ev) {
    if (!std::isfinite(v))
      throw NumericsError("non-finite characteristic speed");
    s = std::max(s, std::abs(v));
  }
  return s;
}

void check_sizes(const Mesh& mesh, const ModelDef& model,
                 const StateArrays& state, const char* where) {
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  if (state.q.size() != nf * stride || state.qaux.size() != na * stride)
    throw ConfigError(std::string(where) +
                      ": state arrays do not match mesh and model");
}

// Scratch buffers for one fluctuation evaluation.
struct FluctScratch {
  std::vector<double> fl, fr, tmp, qm, qauxm, ncm, ncd;
  explicit FluctScratch(std::size_t nf, std::size_t na)
      : fl(nf), fr(nf), tmp(std::max(nf * nf, nf)), qm(nf), qauxm(na),
        ncm(nf * nf), ncd(nf * nf) {}
};

// Rusanov-type path fluctuations; dl/dr receive n_fields values each.
void fluctuations_impl(const ModelDef& model, const double* ql,
                       const double* qr, const double* qauxl,
                       const double* qauxr, std::span<const double> params,
                       const std::array<double, 2>& n, double* dl, double* dr,
                       FluctScratch& s) {
  const auto& kern = model.compiled();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  const int dim = model.dimension;

  const double smax =
      std::max(max_wave_speed(model, {ql, nf}, {qauxl, na}, params, n),
               max_wave_speed(model, {qr, nf}, {qauxr, na}, params, n));

  PointInputs inl;
  inl.state = ql;
  inl.aux = qauxl;
  inl.params = params.data();
  inl.normal = n.data();
  PointInputs inr = inl;
  inr.state = qr;
  inr.aux = qauxr;

  std::fill(s.fl.begin(), s.fl.end(), 0.0);
  std::fill(s.fr.begin(), s.fr.end(), 0.0);
  for (int d = 0; d < dim; ++d) {
    if (n[static_cast<std::size_t>(d)] == 0.0) continue;
    const double nd = n[static_cast<std::size_t>(d)];
    kern.flux[static_cast<std::size_t>(d)].eval_point(inl, s.tmp.data());
    for (std::size_t i = 0; i < nf; ++i) s.fl[i] += nd * s.tmp[i];
    kern.flux[static_cast<std::size_t>(d)].eval_point(inr, s.tmp.data());
    for (std::size_t i = 0; i < nf; ++i) s.fr[i] += nd * s.tmp[i];
  }

  // Nonconservative block at the segment-path midpoint state.
  for (std::size_t i = 0; i < nf; ++i) s.qm[i] = 0.5 * (ql[i] + qr[i]);
  for (std::size_t a = 0; a < na; ++a) s.qauxm[a] = 0.5 * (qauxl[a] + qauxr[a]);
  PointInputs inm = inl;
  inm.state = s.qm.data();
  inm.aux = s.qauxm.data();
  std::fill(s.ncm.begin(), s.ncm.end(), 0.0);
  for (int d = 0; d < dim; ++d) {
    if (n[static_cast<std::size_t>(d)] == 0.0) continue;
    const double nd = n[static_cast<std::size_t>(d)];
    kern.nonconservative[static_cast<std::size_t>(d)].eval_point(inm,
                                                                 s.ncd.data());
    for (std::size_t i = 0; i < nf * nf; ++i) s.ncm[i] += nd * s.ncd[i];
  }

  for (std::size_t i = 0; i < nf; ++i) {
    const double fhat =
        0.5 * (s.fl[i] + s.fr[i]) - 0.5 * smax * (qr[i] - ql[i]);
    double jump = 0.0;
    for (std::size_t j = 0; j < nf; ++j)
      jump += s.ncm[i * nf + j] * (qr[j] - ql[j]);
    dl[i] = fhat - s.fl[i] + 0.5 * jump;
    dr[i] = fhat - s.fr[i] - 0.5 * jump;
  }
}

// Row-major dense solve with partial pivoting; b becomes the solution.
void solve_dense(std::size_t n, std::vector<double>& a,
                 std::vector<double>& b) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r * n + k]) > std::abs(a[piv * n + k])) piv = r;
    if (std::abs(a[piv * n + k]) < 1e-300)
      throw NumericsError("singular linear system in implicit source update");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j)
        std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double m = a[r * n + k] / a[k * n + k];
      if (m == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a[r * n + j] -= m * a[k * n + j];
      b[r] -= m * b[k];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
    b[i] = s / a[i * n + i];
  }
}

bool all_exact_zero(const std::vector<Expr>& exprs) {
  return std::all_of(exprs.begin(), exprs.end(),
                     [](const Expr& e) { return e.is_exact_constant(0); });
}

}  // namespace

double compute_dt(const Mesh& mesh, const ModelDef& model,
                  const StateArrays& state, std::span<const double> params,
                  double cfl) {
  if (!(cfl > 0.0) || cfl > 1.0)
    throw ConfigError("compute_dt: cfl must lie in (0, 1]");
  check_sizes(mesh, model, state, "compute_dt");
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();

  std::vector<double> q(nf), qaux(na);
  double min_ratio = kInf;
  double min_len = kInf;
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    gather_column(state.q, stride, c, nf, q.data());
    gather_column(state.qaux, stride, c, na, qaux.data());
    double speed = 0.0;
    double area_sum = 0.0;
    for (const auto fid : mesh.cell_faces[c]) {
      const Face& face = mesh.faces[fid];
      area_sum += face.area;
      speed = std::max(speed,
                       max_wave_speed(model, q, qaux, params, face.normal));
    }
    const double len =
        mesh.dimension == 1 ? mesh.volume[c] : mesh.volume[c] / area_sum;
    min_len = std::min(min_len, len);
    if (speed >= 1e-12) min_ratio = std::min(min_ratio, len / speed);
  }
  const double dt = std::isfinite(min_ratio) ? cfl * min_ratio : cfl * min_len;
  if (!std::isfinite(dt) || dt <= 0.0)
    throw NumericsError("compute_dt: non-finite time step");
  return dt;
}

void face_fluctuations(const ModelDef& model, std::span<const double> ql,
                       std::span<const double> qr,
                       std::span<const double> qauxl,
                       std::span<const double> qauxr,
                       std::span<const double> params,
                       std::array<double, 2> n, std::span<double> dl,
                       std::span<double> dr) {
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  if (ql.size() != nf || qr.size() != nf || qauxl.size() != na ||
      qauxr.size() != na || dl.size() != nf || dr.size() != nf)
    throw ConfigError("face_fluctuations: span sizes do not match the model");
  FluctScratch scratch(nf, na);
  fluctuations_impl(model, ql.data(), qr.data(), qauxl.data(), qauxr.data(),
                    params, n, dl.data(), dr.data(), scratch);
}

void hyperbolic_step(const Mesh& mesh, const ModelDef& model,
                     StateArrays& state, std::span<const double> params,
                     double dt) {
  check_sizes(mesh, model, state, "hyperbolic_step");
  const std::size_t stride = mesh.n_total();
  const std::size_t ni = mesh.n_inner;
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();

  std::vector<double> rate(nf * ni, 0.0);
  std::vector<double> ql(nf), qr(nf), qauxl(na), qauxr(na), dl(nf), dr(nf);
  FluctScratch scratch(nf, na);
  for (const Face& face : mesh.faces) {
    const auto left = static_cast<std::size_t>(face.left);
    const auto right = static_cast<std::size_t>(face.right);
    gather_column(state.q, stride, left, nf, ql.data());
    gather_column(state.q, stride, right, nf, qr.data());
    gather_column(state.qaux, stride, left, na, qauxl.data());
    gather_column(state.qaux, stride, right, na, qauxr.data());
    fluctuations_impl(model, ql.data(), qr.data(), qauxl.data(), qauxr.data(),
                      params, face.normal, dl.data(), dr.data(), scratch);
    if (left < ni) {
      const double w = face.area / mesh.volume[left];
      for (std::size_t k = 0; k < nf; ++k) rate[k * ni + left] -= w * dl[k];
    }
    if (right < ni) {
      const double w = face.area / mesh.volume[right];
      for (std::size_t k = 0; k < nf; ++k) rate[k * ni + right] += w * dr[k];
    }
  }
  for (std::size_t k = 0; k < nf; ++k)
    for (std::size_t c = 0; c < ni; ++c) {
      double& v = state.q[k * stride + c];
      v += dt * rate[k * ni + c];
      if (!std::isfinite(v))
        throw NumericsError("hyperbolic_step: non-finite update in cell " +
                            std::to_string(c));
    }
}

void step_source(const Mesh& mesh, const ModelDef& model, StateArrays& state,
                 std::span<const double> params, double dt, double t) {
  check_sizes(mesh, model, state, "step_source");
  if (all_exact_zero(model.source)) return;
  const std::size_t stride = mesh.n_total();
  const std::size_t ni = mesh.n_inner;
  const auto nf = static_cast<std::size_t>(model.n_fields);

  const CentroidSoA soa = centroid_soa(mesh);
  CellBatch batch;
  batch.state = state.q.data();
  batch.aux = state.qaux.data();
  batch.stride = stride;
  batch.cx = soa.cx.data();
  batch.cy = soa.cy.data();
  batch.params = params.data();
  batch.t = t;
  std::vector<double> src(nf * ni);
  model.compiled().source.eval_cells(batch, 0, ni, src.data(), ni);
  for (std::size_t k = 0; k < nf; ++k)
    for (std::size_t c = 0; c < ni; ++c) {
      double& v = state.q[k * stride + c];
      v += dt * src[k * ni + c];
      if (!std::isfinite(v))
        throw NumericsError("step_source: non-finite update in cell " +
                            std::to_string(c));
    }
}

void step_source_implicit(const Mesh& mesh, const ModelDef& model,
                          StateArrays& state, std::span<const double> params,
                          double dt, double t, const NewtonSettings& ns) {
  check_sizes(mesh, model, state, "step_source_implicit");
  if (all_exact_zero(model.source)) return;
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  const auto& kern = model.compiled();

  std::vector<double> q0(nf), x(nf), qaux(na), src(nf), r(nf), jac(nf * nf),
      a(nf * nf);
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    gather_column(state.q, stride, c, nf, q0.data());
    gather_column(state.qaux, stride, c, na, qaux.data());
    x = q0;
    PointInputs in;
    in.state = x.data();
    in.aux = qaux.data();
    in.params = params.data();
    in.x = mesh.centroid[c][0];
    if (mesh.dimension == 2) in.y = mesh.centroid[c][1];
    in.t = t;

    bool converged = false;
    for (int it = 0; it <= ns.max_iter; ++it) {
      kern.source.eval_point(in, src.data());
      double norm = 0.0;
      for (std::size_t i = 0; i < nf; ++i) {
        r[i] = x[i] - q0[i] - dt * src[i];
        norm = std::max(norm, std::abs(r[i]));
      }
      if (!std::isfinite(norm))
        throw NumericsError("step_source_implicit: non-finite residual in "
                            "cell " +
                            std::to_string(c));
      if (norm <= ns.tol_abs) {
        converged = true;
        break;
      }
      if (it == ns.max_iter) break;
      kern.source_jacobian.eval_point(in, jac.data());
      for (std::size_t i = 0; i < nf * nf; ++i) a[i] = -dt * jac[i];
      for (std::size_t i = 0; i < nf; ++i) a[i * nf + i] += 1.0;
      solve_dense(nf, a, r);
      for (std::size_t i = 0; i < nf; ++i) x[i] -= r[i];
    }
    if (!converged)
      throw NumericsError(
          "step_source_implicit: no convergence in cell " + std::to_string(c));
    for (std::size_t f = 0; f < nf; ++f) state.q[f * stride + c] = x[f];
  }
}

void update_qaux(const Mesh& mesh, const LsqStencils& stencils,
                 const ModelDef& model, StateArrays& state,
                 std::span<const double> params, double t) {
  check_sizes(mesh, model, state, "update_qaux");
  if (model.aux_rules.empty()) return;
  const std::size_t stride = mesh.n_total();
  const CentroidSoA soa = centroid_soa(mesh);
  std::vector<double> scratch(stride);
  for (std::size_t ri = 0; ri < model.aux_rules.size(); ++ri) {
    const AuxRule& rule = model.aux_rules[ri];
    const Kernel& kern = model.compiled().aux_rules[ri];
    CellBatch batch;
    batch.state = state.q.data();
    batch.aux = state.qaux.data();
    batch.stride = stride;
    batch.cx = soa.cx.data();
    batch.cy = soa.cy.data();
    batch.params = params.data();
    batch.t = t;
    kern.eval_cells(batch, 0, stride, scratch.data(), stride);
    double* row =
        state.qaux.data() + static_cast<std::size_t>(rule.aux_index) * stride;
    if (!rule.is_derivative) {
      std::copy(scratch.begin(), scratch.end(), row);
    } else {
      const auto der =
          compute_derivatives(mesh, stencils, scratch, {rule.multi_index});
      std::copy(der.begin(), der.end(), row);
    }
  }
}

int required_stencil_degree(const ModelDef& model) {
  int degree = 1;
  for (const AuxRule& rule : model.aux_rules)
    if (rule.is_derivative)
      degree = std::max(degree, rule.multi_index[0] + rule.multi_index[1]);
  return degree;
}

std::vector<double> gmres(
    const std::function<void(const std::vector<double>&,
                             std::vector<double>&)>& apply_a,
    const std::vector<double>& b, const std::vector<double>& x0,
    const GmresSettings& gs) {
  const std::size_t n = b.size();
  if (x0.size() != n) throw ConfigError("gmres: x0 and b sizes differ");
  if (gs.restart < 1 || gs.max_restarts < 1 || !(gs.tol > 0.0))
    throw ConfigError("gmres: invalid settings");

  const double normb = two_norm(b);
  if (normb == 0.0) return std::vector<double>(n, 0.0);
  const double target = gs.tol * normb;

  std::vector<double> x = x0;
  std::vector<double> r(n), w(n);
  auto refresh_residual = [&]() {
    apply_a(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    return two_norm(r);
  };
  double beta = refresh_residual();

  const auto m = static_cast<std::size_t>(gs.restart);
  std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
  std::vector<double> hess((m + 1) * m), cs(m), sn(m), g(m + 1), y(m);

  if (beta <= target) return x;
  for (int cycle = 0; cycle < gs.max_restarts; ++cycle) {
    std::fill(hess.begin(), hess.end(), 0.0);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    g[0] = beta;

    std::size_t cols = 0;
    bool converged = false;
    bool breakdown = false;
    for (std::size_t j = 0; j < m; ++j) {
      apply_a(v[j], w);
      for (std::size_t i = 0; i <= j; ++i) {
        const double h = dot(w, v[i]);
        hess[i * m + j] = h;
        for (std::size_t k = 0; k < n; ++k) w[k] -= h * v[i][k];
      }
      const double hnext = two_norm(w);
      if (!std::isfinite(hnext))
        throw NumericsError("gmres: non-finite Krylov vector");
      hess[(j + 1) * m + j] = hnext;
      if (hnext > 0.0)
        for (std::size_t k = 0; k < n; ++k) v[j + 1][k] = w[k] / hnext;

      for (std::size_t i = 0; i + 1 <= j; ++i) {
        const double t0 = cs[i] * hess[i * m + j] + sn[i] * hess[(i + 1) * m + j];
        hess[(i + 1) * m + j] =
            -sn[i] * hess[i * m + j] + cs[i] * hess[(i + 1) * m + j];
        hess[i * m + j] = t0;
      }
      const double denom = std::hypot(hess[j * m + j], hess[(j + 1) * m + j]);
      if (denom == 0.0)
        throw NumericsError("gmres: breakdown (singular subspace problem)");
      cs[j] = hess[j * m + j] / denom;
      sn[j] = hess[(j + 1) * m + j] / denom;
      hess[j * m + j] = denom;
      hess[(j + 1) * m + j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      cols = j + 1;
      // The rotated-norm estimate |g[j+1]| equals the subspace residual;
      // it is the convergence quantity (a recomputed residual would be
      // polluted by the operator's own evaluation noise, e.g. from
      // finite-difference Jacobian products).
      if (std::abs(g[j + 1]) <= target || hnext == 0.0) {
        converged = std::abs(g[j + 1]) <= target;
        breakdown = hnext == 0.0;
        break;
      }
    }
    for (std::size_t i = cols; i-- > 0;) {
      double s = g[i];
      for (std::size_t k = i + 1; k < cols; ++k) s -= hess[i * m + k] * y[k];
      y[i] = s / hess[i * m + i];
    }
    for (std::size_t k = 0; k < cols; ++k)
      for (std::size_t i = 0; i < n; ++i) x[i] += y[k] * v[k][i];
    if (converged) return x;
    beta = refresh_residual();
    if (beta <= target) return x;
    if (breakdown)
      throw NumericsError("gmres: stagnation after exact subspace breakdown");
  }
  throw NumericsError("gmres: no convergence after " +
                      std::to_string(gs.max_restarts) +
                      " restarts (residual " + std::to_string(beta) + ")");
}

NewtonResult newton_solve(
    const std::function<std::vector<double>(const std::vector<double>&)>&
        residual,
    std::vector<double> x0, const NewtonSettings& ns, const GmresSettings& gs) {
  std::vector<double> x = std::move(x0);
  std::vector<double> res = residual(x);
  if (res.size() != x.size())
    throw ConfigError("newton_solve: residual size does not match the state");
  double norm = inf_norm(res);
  if (!std::isfinite(norm))
    throw NumericsError("newton_solve: non-finite initial residual");
  const double norm0 = norm;
  if (norm <= ns.tol_abs) return {std::move(x), 0, norm};

  const std::size_t n = x.size();
  constexpr double sqrt_eps = 1.4901161193847656e-08;  // sqrt(2^-52)
  for (int it = 1; it <= ns.max_iter; ++it) {
    auto apply_jacobian = [&](const std::vector<double>& vec,
                              std::vector<double>& out) {
      const double eps =
          sqrt_eps * (1.0 + inf_norm(x)) / std::max(inf_norm(vec), 1e-30);
      std::vector<double> xp(n);
      for (std::size_t i = 0; i < n; ++i) xp[i] = x[i] + eps * vec[i];
      const std::vector<double> rp = residual(xp);
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = (rp[i] - res[i]) / eps;
    };
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -res[i];
    const std::vector<double> dx =
        gmres(apply_jacobian, rhs, std::vector<double>(n, 0.0), gs);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    res = residual(x);
    norm = inf_norm(res);
    if (!std::isfinite(norm))
      throw NumericsError("newton_solve: non-finite residual at iteration " +
                          std::to_string(it));
    if (norm <= ns.tol_abs || norm <= ns.tol_rel * norm0)
      return {std::move(x), it, norm};
  }
  throw NumericsError("newton_solve: no convergence in " +
                      std::to_string(ns.max_iter) + " iterations (residual " +
                      std::to_string(norm) + ")");
}

StateArrays initial_state(const Mesh& mesh, const ModelDef& model) {
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  StateArrays state;
  state.q.assign(nf * stride, 0.0);
  state.qaux.assign(na * stride, 0.0);
  if (model.initial_condition.empty()) return state;
  if (model.initial_condition.size() != nf)
    throw ConfigError("initial_state: expected one expression per field");

  const Kernel kern = compile_kernel(model.initial_condition, model.layout);
  const CentroidSoA soa = centroid_soa(mesh);
  CellBatch batch;
  batch.stride = stride;
  batch.cx = soa.cx.data();
  batch.cy = soa.cy.data();
  batch.params = model.layout.param_defaults.data();
  batch.t = 0.0;
  std::vector<double> values(nf * mesh.n_inner);
  kern.eval_cells(batch, 0, mesh.n_inner, values.data(), mesh.n_inner);
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      state.q[f * stride + c] = values[f * mesh.n_inner + c];
  return state;
}

namespace {

// Shared snapshot/stop-time bookkeeping for the transient drivers.
struct TimeLoop {
  const SolverSettings& settings;
  double next_out;
  double teps;
  double last_emit = -kInf;

  explicit TimeLoop(const SolverSettings& s, double t0) : settings(s) {
    next_out = s.output_interval > 0.0 ? t0 + s.output_interval : kInf;
    teps = 1e-12 * std::max(1.0, std::abs(s.t_end));
  }
  bool running(const RunState& rs, long steps_taken) const {
    if (settings.max_steps >= 0 && steps_taken >= settings.max_steps)
      return false;
    return rs.t < settings.t_end - teps;
  }
  // Clips dt to the next stop; returns the exact landing time (or NaN).
  double clip(double t, double& dt) const {
    const double stop = std::min(settings.t_end, next_out);
    if (t + dt >= stop - teps) {
      dt = stop - t;
      return stop;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
  bool due(double t) const { return t >= next_out - teps; }
  void advance_output(double t) {
    while (next_out <= t + teps) next_out += settings.output_interval;
  }
};

void validate_transient_settings(const SolverSettings& s) {
  if (!(s.cfl > 0.0) || s.cfl > 1.0)
    throw ConfigError("solver: cfl must lie in (0, 1]");
  if (!(s.t_end >= 0.0)) throw ConfigError("solver: t_end must be >= 0");
  if (s.output_interval > 0.0 && !std::isfinite(s.output_interval))
    throw ConfigError("solver: output interval must be finite");
}

}  // namespace

RunState transient_hyperbolic_solve(const Mesh& mesh, const ModelDef& model,
                                    const SolverSettings& settings,
                                    const SnapshotSink& sink,
                                    std::optional<RunState> resume) {
  if (model.dimension != mesh.dimension)
    throw ConfigError("transient solve: model and mesh dimensions differ");
  validate_transient_settings(settings);
  const LsqStencils stencils =
      build_lsq_stencils(mesh, required_stencil_degree(model));
  RunState rs = resume ? std::move(*resume)
                       : RunState{initial_state(mesh, model), 0.0, 0};
  check_sizes(mesh, model, rs.state, "transient solve");
  const std::span<const double> params(model.layout.param_defaults);

  auto prepare = [&]() {
    fill_ghosts(model, mesh, rs.t, rs.state.q, rs.state.qaux, params);
    update_qaux(mesh, stencils, model, rs.state, params, rs.t);
  };
  TimeLoop loop(settings, rs.t);
  auto emit = [&]() {
    if (sink) sink(make_snapshot(mesh, model, rs.t, rs.step, rs.state.q,
                                 rs.state.qaux));
    loop.last_emit = rs.t;
  };

  prepare();
  emit();
  long steps_taken = 0;
  while (loop.running(rs, steps_taken)) {
    prepare();
    double dt = compute_dt(mesh, model, rs.state, params, settings.cfl);
    const double landing = loop.clip(rs.t, dt);
    if (!(dt > 0.0))
      throw NumericsError("transient solve: nonpositive time step at t = " +
                          std::to_string(rs.t));
    hyperbolic_step(mesh, model, rs.state, params, dt);
    step_source(mesh, model, rs.state, params, dt, rs.t);
    rs.t = std::isnan(landing) ? rs.t + dt : landing;
    rs.step += 1;
    steps_taken += 1;
    if (settings.step_monitor) settings.step_monitor(rs.step, rs.t, dt);
    if (loop.due(rs.t)) {
      prepare();
      emit();
      loop.advance_output(rs.t);
    }
  }
  prepare();
  if (loop.last_emit != rs.t) emit();
  return rs;
}

StateArrays steady_residual_solve(const Mesh& mesh, const ModelDef& model,
                                  const SolverSettings& settings,
                                  const StateArrays* initial,
                                  int* iterations) {
  if (model.residual.empty())
    throw ConfigError("steady solve: the model has no residual block");
  if (model.dimension != mesh.dimension)
    throw ConfigError("steady solve: model and mesh dimensions differ");
  const LsqStencils stencils =
      build_lsq_stencils(mesh, required_stencil_degree(model));
  StateArrays work = initial ? *initial : initial_state(mesh, model);
  check_sizes(mesh, model, work, "steady solve");
  const std::span<const double> params(model.layout.param_defaults);
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const CentroidSoA soa = centroid_soa(mesh);

  auto residual_fn = [&](const std::vector<double>& xq) {
    work.q = xq;
    fill_ghosts(model, mesh, 0.0, work.q, work.qaux, params);
    update_qaux(mesh, stencils, model, work, params, 0.0);
    std::vector<double> out(nf * stride, 0.0);
    CellBatch batch;
    batch.state = work.q.data();
    batch.aux = work.qaux.data();
    batch.stride = stride;
    batch.cx = soa.cx.data();
    batch.cy = soa.cy.data();
    batch.params = params.data();
    batch.t = 0.0;
    model.compiled().residual.eval_cells(batch, 0, mesh.n_inner, out.data(),
                                         stride);
    return out;  // ghost rows stay zero: ghosts follow the inner unknowns
  };

  NewtonResult res =
      newton_solve(residual_fn, work.q, settings.newton, settings.gmres);
  work.q = std::move(res.x);
  fill_ghosts(model, mesh, 0.0, work.q, work.qaux, params);
  update_qaux(mesh, stencils, model, work, params, 0.0);
  if (iterations) *iterations = res.iterations;
  return work;
}

RunState vam_solve(const Mesh& mesh, const ModelDef& predictor,
                   const ModelDef& corrector, const SolverSettings& settings,
                   const SnapshotSink& sink, std::optional<RunState> resume) {
  if (mesh.dimension != 1 || predictor.dimension != 1)
    throw ConfigError("vam_solve: the predictor-corrector pair is 1D");
  if (predictor.n_fields != 5 || predictor.layout.aux.size() != 7 ||
      corrector.n_fields != 2 || corrector.layout.aux.size() != 16)
    throw ConfigError("vam_solve: expected the built-in vam model pair");
  validate_transient_settings(settings);
  const int degree = std::max(required_stencil_degree(predictor),
                              required_stencil_degree(corrector));
  const LsqStencils stencils = build_lsq_stencils(mesh, degree);

  ModelDef corr = corrector;
  if (corr.boundary_conditions.empty())
    for (const auto& tag : mesh.tag_names) {
      BoundaryCondition bc;
      bc.kind = BcKind::extrapolate;
      bc.tag = tag;
      corr.boundary_conditions.push_back(std::move(bc));
    }

  RunState rs = resume ? std::move(*resume)
                       : RunState{initial_state(mesh, predictor), 0.0, 0};
  check_sizes(mesh, predictor, rs.state, "vam_solve");
  const std::span<const double> pparams(predictor.layout.param_defaults);
  const std::size_t stride = mesh.n_total();

  // Corrector working arrays; the pressure unknowns warm-start from the
  // predictor's stored pressure columns.
  StateArrays cstate;
  cstate.q.assign(2 * stride, 0.0);
  cstate.qaux.assign(16 * stride, 0.0);
  std::copy_n(rs.state.qaux.data() + 1 * stride, stride, cstate.q.data());
  std::copy_n(rs.state.qaux.data() + 2 * stride, stride,
              cstate.q.data() + stride);

  const CentroidSoA soa = centroid_soa(mesh);
  auto prepare = [&]() {
    fill_ghosts(predictor, mesh, rs.t, rs.state.q, rs.state.qaux, pparams);
    update_qaux(mesh, stencils, predictor, rs.state, pparams, rs.t);
  };
  TimeLoop loop(settings, rs.t);
  auto emit = [&]() {
    if (sink) sink(make_snapshot(mesh, predictor, rs.t, rs.step, rs.state.q,
                                 rs.state.qaux));
    loop.last_emit = rs.t;
  };

  prepare();
  emit();
  long steps_taken = 0;
  while (loop.running(rs, steps_taken)) {
    prepare();
    double dt = compute_dt(mesh, predictor, rs.state, pparams, settings.cfl);
    const double landing = loop.clip(rs.t, dt);
    if (!(dt > 0.0))
      throw NumericsError("vam_solve: nonpositive time step at t = " +
                          std::to_string(rs.t));
    const double t_new = std::isnan(landing) ? rs.t + dt : landing;

    hyperbolic_step(mesh, predictor, rs.state, pparams, dt);
    fill_ghosts(predictor, mesh, t_new, rs.state.q, rs.state.qaux, pparams);

    // Freeze the provisional state into the corrector's parameter fields:
    // aux 0..4 <- (h, hu0, hu1, hw0, hw1), aux 9 <- bottom elevation.
    for (std::size_t f = 0; f < 5; ++f)
      std::copy_n(rs.state.q.data() + f * stride, stride,
                  cstate.qaux.data() + f * stride);
    std::copy_n(rs.state.qaux.data() + 6 * stride, stride,
                cstate.qaux.data() + 9 * stride);

    const std::vector<double> cparams = {dt};
    if (settings.vam_skip_corrector) {
      std::fill(cstate.q.begin(), cstate.q.end(), 0.0);
    } else {
      auto residual_fn = [&](const std::vector<double>& xq) {
        cstate.q = xq;
        fill_ghosts(corr, mesh, t_new, cstate.q, cstate.qaux, cparams);
        update_qaux(mesh, stencils, corr, cstate, cparams, t_new);
        std::vector<double> out(2 * stride, 0.0);
        CellBatch batch;
        batch.state = cstate.q.data();
        batch.aux = cstate.qaux.data();
        batch.stride = stride;
        batch.cx = soa.cx.data();
        batch.cy = soa.cy.data();
        batch.params = cparams.data();
        batch.t = t_new;
        corr.compiled().residual.eval_cells(batch, 0, mesh.n_inner, out.data(),
                                            stride);
        return out;
      };
      try {
        NewtonResult res = newton_solve(residual_fn, cstate.q, settings.newton,
                                        settings.gmres);
        cstate.q = std::move(res.x);
      } catch (const NumericsError& e) {
        throw NumericsError(std::string(e.what()) +
                            " (pressure corrector, step " +
                            std::to_string(rs.step + 1) + ", t = " +
                            std::to_string(t_new) + ")");
      }
      fill_ghosts(corr, mesh, t_new, cstate.q, cstate.qaux, cparams);
    }

    // Publish the pressures and apply the pressure source update.
    std::copy_n(cstate.q.data(), stride, rs.state.qaux.data() + 1 * stride);
    std::copy_n(cstate.q.data() + stride, stride,
                rs.state.qaux.data() + 2 * stride);
    fill_ghosts(predictor, mesh, t_new, rs.state.q, rs.state.qaux, pparams);
    update_qaux(mesh, stencils, predictor, rs.state, pparams, t_new);
    step_source(mesh, predictor, rs.state, pparams, dt, t_new);

    rs.t = t_new;
    rs.step += 1;
    steps_taken += 1;
    if (settings.step_monitor) settings.step_monitor(rs.step, rs.t, dt);
    if (loop.due(rs.t)) {
      prepare();
      emit();
      loop.advance_output(rs.t);
    }
  }
  prepare();
  if (loop.last_emit != rs.t) emit();
  return rs;
}

}  // namespace stratus
