// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Solver engine tests: pinned time-step examples, fluctuation identities
// checked against hand-derived upwind formulas, conservation, the linear
// and nonlinear convergence contracts of GMRES/Newton, source-update
// integration laws, and the composed drivers.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mesh_fixtures.hpp"
#include "stratus/solver.hpp"

using namespace stratus;

namespace {

ModelDef with_extrapolation(ModelDef m, std::vector<std::string> tags) {
  for (auto& tag : tags) {
    BoundaryCondition bc;
    bc.kind = BcKind::extrapolate;
    bc.tag = std::move(tag);
    m.boundary_conditions.push_back(std::move(bc));
  }
  return m;
}

ModelDef with_periodic_pair(ModelDef m, std::string a, std::string b) {
  BoundaryCondition left;
  left.kind = BcKind::periodic;
  left.tag = a;
  left.pair_tag = b;
  BoundaryCondition right;
  right.kind = BcKind::periodic;
  right.tag = b;
  right.pair_tag = a;
  m.boundary_conditions.push_back(std::move(left));
  m.boundary_conditions.push_back(std::move(right));
  return m;
}

// One conserved quantity advected at constant speed `a`.
ModelDef advection_model(double a) {
  ModelDef m;
  m.name = "advect";
  m.dimension = 1;
  m.layout = VariableLayout({"q"}, {}, {}, {}, 1);
  m.flux = {{Expr::real(a) * state_var(0)}};
  finalize_model(m);
  return m;
}

// dq/dt = -q.
ModelDef decay_model() {
  ModelDef m;
  m.name = "decay";
  m.dimension = 1;
  m.layout = VariableLayout({"q"}, {}, {}, {}, 1);
  m.source = {Expr::integer(-1) * state_var(0)};
  finalize_model(m);
  return m;
}

ModelDef inert_model() {
  ModelDef m;
  m.name = "inert";
  m.dimension = 1;
  m.layout = VariableLayout({"a", "b"}, {}, {}, {}, 1);
  finalize_model(m);
  return m;
}

void set_field(StateArrays& s, std::size_t field, std::size_t stride,
               std::size_t cell, double v) {
  s.q[field * stride + cell] = v;
}

double total_of_field(const Mesh& mesh, const StateArrays& s,
                      std::size_t field) {
  const std::size_t stride = mesh.n_total();
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.n_inner; ++c)
    total += s.q[field * stride + c] * mesh.volume[c];
  return total;
}

StateArrays sized_state(const Mesh& mesh, const ModelDef& m) {
  StateArrays s;
  s.q.assign(static_cast<std::size_t>(m.n_fields) * mesh.n_total(), 0.0);
  s.qaux.assign(m.layout.aux.size() * mesh.n_total(), 0.0);
  return s;
}

}  // namespace

TEST_CASE("time-step bound matches the hand example") {
  const Mesh mesh = uniform_interval(0.0, 10.0, 100, "left", "right");
  ModelDef m = swe_model(1);

  SUBCASE("unit gravity and unit depth pin dt = 0.045") {
    StateArrays s = sized_state(mesh, m);
    const std::size_t stride = mesh.n_total();
    for (std::size_t c = 0; c < mesh.n_total(); ++c) set_field(s, 0, stride, c, 1.0);
    const std::vector<double> params = {1.0, 1000.0};  // g = 1
    const double dt = compute_dt(mesh, m, s, params, 0.45);
    CHECK(dt == doctest::Approx(0.045).epsilon(1e-14));

    // dt is linear in the CFL number.
    const double dt2 = compute_dt(mesh, m, s, params, 0.9);
    CHECK(dt2 == doctest::Approx(2.0 * dt).epsilon(1e-15));
  }

  SUBCASE("the fastest cell sets the step") {
    StateArrays s = sized_state(mesh, m);
    const std::size_t stride = mesh.n_total();
    for (std::size_t c = 0; c < mesh.n_total(); ++c) set_field(s, 0, stride, c, 1.0);
    set_field(s, 0, stride, 7, 4.0);  // doubles the local wave speed
    const std::vector<double> params = {1.0, 1000.0};
    const double dt = compute_dt(mesh, m, s, params, 0.45);
    CHECK(dt == doctest::Approx(0.0225).epsilon(1e-14));
  }

  SUBCASE("quiescent models fall back to the cell-size bound") {
    ModelDef idle = inert_model();
    StateArrays s = sized_state(mesh, idle);
    const double dt = compute_dt(mesh, idle, s, {}, 0.45);
    CHECK(dt == doctest::Approx(0.45 * 0.1).epsilon(1e-14));
  }

  SUBCASE("invalid cfl is rejected") {
    StateArrays s = sized_state(mesh, m);
    CHECK_THROWS_AS(compute_dt(mesh, m, s, m.layout.param_defaults, 0.0),
                    ConfigError);
    CHECK_THROWS_AS(compute_dt(mesh, m, s, m.layout.param_defaults, 1.5),
                    ConfigError);
  }
}

TEST_CASE("face fluctuations vanish on a uniform state") {
  ModelDef m = swe_model(1);
  const std::vector<double> q = {2.0, 0.6};
  const std::vector<double> qaux = {0.3};
  std::vector<double> dl(2), dr(2);
  face_fluctuations(m, q, q, qaux, qaux, m.layout.param_defaults, {1.0, 0.0},
                    dl, dr);
  CHECK(dl[0] == 0.0);
  CHECK(dl[1] == 0.0);
  CHECK(dr[0] == 0.0);
  CHECK(dr[1] == 0.0);
}

TEST_CASE("face fluctuations upwind a linear advection flux") {
  ModelDef m = advection_model(2.5);
  std::vector<double> dl(1), dr(1);

  // Wave moving left -> right: the left cell sees no fluctuation, the
  // right cell absorbs the full jump a * (qL - qR).
  face_fluctuations(m, std::vector<double>{1.0}, std::vector<double>{0.0}, {},
                    {}, {}, {1.0, 0.0}, dl, dr);
  CHECK(dl[0] == 0.0);
  CHECK(dr[0] == 2.5);

  // Reversing the face normal swaps the roles.
  face_fluctuations(m, std::vector<double>{1.0}, std::vector<double>{0.0}, {},
                    {}, {}, {-1.0, 0.0}, dl, dr);
  CHECK(dl[0] == 2.5);
  CHECK(dr[0] == 0.0);
}

TEST_CASE("a hyperbolic step is an exact upwind update for advection") {
  const int n = 16;
  const Mesh mesh = uniform_interval(0.0, 1.0, n, "left", "right");
  ModelDef m = with_periodic_pair(advection_model(2.5), "left", "right");
  const LsqStencils stencils = build_lsq_stencils(mesh, 1);
  StateArrays s = sized_state(mesh, m);
  const std::size_t stride = mesh.n_total();

  std::mt19937 rng(91);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> before(mesh.n_inner);
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    before[c] = dist(rng);
    set_field(s, 0, stride, c, before[c]);
  }
  fill_ghosts(m, mesh, 0.0, s.q, s.qaux, {});
  const double dt = 0.01;
  hyperbolic_step(mesh, m, s, {}, dt);

  // Rusanov with |a| = a reduces to first-order upwinding:
  // q_i' = q_i - (a dt/dx) (q_i - q_{i-1}), periodic in i.
  const double dx = 1.0 / n;
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    // Cells of uniform_interval are ordered left to right.
    const double left = before[(c + mesh.n_inner - 1) % mesh.n_inner];
    const double expected = before[c] - 2.5 * dt / dx * (before[c] - left);
    CHECK(s.q[c] == doctest::Approx(expected).epsilon(1e-14));
  }
  (void)stencils;
}

TEST_CASE("a hyperbolic step preserves uniform flow and total mass") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 20, "left", "right");
  ModelDef m = with_periodic_pair(swe_model(1), "left", "right");
  const LsqStencils stencils = build_lsq_stencils(mesh, 1);
  const std::size_t stride = mesh.n_total();

  SUBCASE("uniform states are fixed points") {
    StateArrays s = sized_state(mesh, m);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      set_field(s, 0, stride, c, 2.0);
      set_field(s, 1, stride, c, 0.6);
    }
    fill_ghosts(m, mesh, 0.0, s.q, s.qaux, m.layout.param_defaults);
    update_qaux(mesh, stencils, m, s, m.layout.param_defaults, 0.0);
    StateArrays before = s;
    hyperbolic_step(mesh, m, s, m.layout.param_defaults, 1e-3);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      CHECK(s.q[c] == before.q[c]);
      CHECK(s.q[stride + c] == before.q[stride + c]);
    }
  }

  SUBCASE("smooth periodic data conserves mass and momentum") {
    StateArrays s = sized_state(mesh, m);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double x = mesh.centroid[c][0];
      set_field(s, 0, stride, c, 1.0 + 0.3 * x * (1.0 - x));
      set_field(s, 1, stride, c, 0.1 * x * x * (1.0 - x));
    }
    fill_ghosts(m, mesh, 0.0, s.q, s.qaux, m.layout.param_defaults);
    update_qaux(mesh, stencils, m, s, m.layout.param_defaults, 0.0);
    const double mass0 = total_of_field(mesh, s, 0);
    const double mom0 = total_of_field(mesh, s, 1);
    hyperbolic_step(mesh, m, s, m.layout.param_defaults, 5e-4);
    CHECK(total_of_field(mesh, s, 0) ==
          doctest::Approx(mass0).epsilon(1e-13));
    CHECK(total_of_field(mesh, s, 1) == doctest::Approx(mom0).epsilon(1e-13));
  }
}

TEST_CASE("moment-hierarchy steps conserve depth and mean momentum") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 24, "left", "right");
  ModelDef m = with_periodic_pair(sme_model(1, 2), "left", "right");
  const LsqStencils stencils =
      build_lsq_stencils(mesh, required_stencil_degree(m));
  const std::size_t stride = mesh.n_total();
  StateArrays s = sized_state(mesh, m);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    set_field(s, 0, stride, c, 1.0 + dist(rng));
    for (std::size_t f = 1; f < 4; ++f) set_field(s, f, stride, c, dist(rng));
  }
  fill_ghosts(m, mesh, 0.0, s.q, s.qaux, m.layout.param_defaults);
  update_qaux(mesh, stencils, m, s, m.layout.param_defaults, 0.0);
  const double mass0 = total_of_field(mesh, s, 0);
  const double mom0 = total_of_field(mesh, s, 1);
  hyperbolic_step(mesh, m, s, m.layout.param_defaults, 2e-4);
  CHECK(total_of_field(mesh, s, 0) == doctest::Approx(mass0).epsilon(1e-13));
  CHECK(total_of_field(mesh, s, 1) == doctest::Approx(mom0).epsilon(1e-13));
}

TEST_CASE("aux updates reconstruct linear and quadratic derivatives") {
  SUBCASE("linear velocity profile") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 12, "left", "right");
    ModelDef m = swe_model(1);
    const LsqStencils stencils = build_lsq_stencils(mesh, 1);
    const std::size_t stride = mesh.n_total();
    StateArrays s = sized_state(mesh, m);
    auto u_of = [](double x) { return 2.0 * x + 1.0; };
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      set_field(s, 0, stride, c, 1.0);
      set_field(s, 1, stride, c, u_of(mesh.centroid[c][0]));
    }
    // Ghost samples live at the boundary face midpoints.
    for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
      const double xm = mesh.faces[mesh.ghost_face[g]].midpoint[0];
      set_field(s, 0, stride, mesh.n_inner + g, 1.0);
      set_field(s, 1, stride, mesh.n_inner + g, u_of(xm));
    }
    update_qaux(mesh, stencils, m, s, m.layout.param_defaults, 0.0);
    for (std::size_t c = 0; c < mesh.n_total(); ++c)
      CHECK(s.qaux[c] == doctest::Approx(2.0).epsilon(1e-11));
  }

  SUBCASE("quadratic second derivative") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 10, "left", "right");
    ModelDef m = poisson_model();
    REQUIRE(required_stencil_degree(m) == 2);
    const LsqStencils stencils = build_lsq_stencils(mesh, 2);
    const std::size_t stride = mesh.n_total();
    StateArrays s = sized_state(mesh, m);
    auto t_of = [](double x) { return 3.0 * x * x - x + 0.5; };
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      set_field(s, 0, stride, c, t_of(mesh.centroid[c][0]));
    for (std::size_t g = 0; g < mesh.n_ghost; ++g)
      set_field(s, 0, stride, mesh.n_inner + g,
                t_of(mesh.faces[mesh.ghost_face[g]].midpoint[0]));
    update_qaux(mesh, stencils, m, s, m.layout.param_defaults, 0.0);
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      CHECK(s.qaux[c] == doctest::Approx(6.0).epsilon(1e-9));
  }
}

TEST_CASE("gmres solves small systems to specification") {
  GmresSettings gs;

  SUBCASE("identity operator converges immediately") {
    const std::vector<double> b = {0.5, -1.25, 3.0, 0.0, 2.0};
    auto apply = [](const std::vector<double>& v, std::vector<double>& out) {
      out = v;
    };
    const auto x = gmres(apply, b, std::vector<double>(b.size(), 0.0), gs);
    for (std::size_t i = 0; i < b.size(); ++i)
      CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-14));
  }

  SUBCASE("pinned 2x2 system") {
    // [[4, 1], [1, 3]] x = (1, 2)  =>  x = (1/11, 7/11).
    auto apply = [](const std::vector<double>& v, std::vector<double>& out) {
      out = {4.0 * v[0] + 1.0 * v[1], 1.0 * v[0] + 3.0 * v[1]};
    };
    const auto x = gmres(apply, {1.0, 2.0}, {0.0, 0.0}, gs);
    CHECK(std::abs(x[0] - 1.0 / 11.0) <= 1e-12);
    CHECK(std::abs(x[1] - 7.0 / 11.0) <= 1e-12);
  }

  SUBCASE("zero right-hand side returns zero without applying A") {
    auto apply = [](const std::vector<double>&, std::vector<double>&) {
      FAIL("operator must not be applied for b = 0");
    };
    const auto x = gmres(apply, std::vector<double>(3, 0.0),
                         std::vector<double>{1.0, 2.0, 3.0}, gs);
    for (const double v : x) CHECK(v == 0.0);
  }

  SUBCASE("restarting still converges on a random well-conditioned system") {
    const std::size_t n = 6;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    std::vector<double> a(n * n);
    for (auto& v : a) v = 0.2 * dist(rng);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] += 2.0;
    std::vector<double> xs(n), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) xs[i] = dist(rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b[i] += a[i * n + j] * xs[j];
    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
      out.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a[i * n + j] * v[j];
    };
    GmresSettings tight = gs;
    tight.restart = 2;  // force several restart cycles
    const auto x = gmres(apply, b, std::vector<double>(n, 0.0), tight);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(x[i] == doctest::Approx(xs[i]).epsilon(1e-9));
  }
}

TEST_CASE("newton_solve honors its convergence contracts") {
  NewtonSettings ns;
  GmresSettings gs;

  SUBCASE("a shift residual converges in one iteration") {
    // R(x) = x - b has an identity Jacobian, so one correction lands on b.
    // Forward-difference Jacobian products carry relative noise of order
    // sqrt(machine epsilon); keeping the starting residual below ~1e-2
    // keeps that noise under the 1e-10 tolerance after the single step.
    auto residual = [](const std::vector<double>& x) {
      return std::vector<double>{x[0] - 0.25, x[1] + 1.75, x[2] - 3.0};
    };
    const auto res =
        newton_solve(residual, {0.252, -1.748, 3.002}, ns, gs);
    CHECK(res.iterations == 1);
    CHECK(std::abs(res.x[0] - 0.25) <= 1e-10);
    CHECK(std::abs(res.x[1] + 1.75) <= 1e-10);
    CHECK(std::abs(res.x[2] - 3.0) <= 1e-10);
  }

  SUBCASE("general affine residuals reach fd accuracy in one iteration") {
    auto residual = [](const std::vector<double>& x) {
      return std::vector<double>{4.0 * x[0] + x[1] - 1.0,
                                 x[0] + 3.0 * x[1] - 2.0};
    };
    NewtonSettings loose = ns;
    loose.tol_abs = 1e-7;
    const auto res = newton_solve(residual, {0.0, 0.0}, loose, gs);
    CHECK(res.iterations == 1);
    CHECK(std::abs(res.x[0] - 1.0 / 11.0) <= 1e-7);
    CHECK(std::abs(res.x[1] - 7.0 / 11.0) <= 1e-7);

    // At the default tight tolerance the same problem still converges, and
    // the answer matches the direct solve far below the fd noise level.
    const auto tight = newton_solve(residual, {5.0, 5.0}, ns, gs);
    CHECK(tight.iterations <= 3);
    CHECK(std::abs(tight.x[0] - 1.0 / 11.0) <= 1e-10);
    CHECK(std::abs(tight.x[1] - 7.0 / 11.0) <= 1e-10);
  }

  SUBCASE("a zero residual returns the initial guess untouched") {
    auto residual = [](const std::vector<double>& x) {
      return std::vector<double>(x.size(), 0.0);
    };
    const auto res = newton_solve(residual, {3.5, -2.0}, ns, gs);
    CHECK(res.iterations == 0);
    CHECK(res.x[0] == 3.5);
    CHECK(res.x[1] == -2.0);
  }

  SUBCASE("scalar quadratic converges quickly") {
    auto residual = [](const std::vector<double>& x) {
      return std::vector<double>{x[0] * x[0] - 4.0};
    };
    const auto res = newton_solve(residual, {3.0}, ns, gs);
    CHECK(res.iterations <= 8);
    CHECK(std::abs(res.x[0] - 2.0) <= 1e-9);
  }
}

TEST_CASE("explicit and implicit source updates integrate a decay law") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 4, "left", "right");
  ModelDef m = decay_model();
  const std::size_t stride = mesh.n_total();
  NewtonSettings ns;

  SUBCASE("one explicit step") {
    StateArrays s = sized_state(mesh, m);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) set_field(s, 0, stride, c, 1.0);
    step_source(mesh, m, s, {}, 0.1, 0.0);
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      CHECK(s.q[c] == doctest::Approx(0.9).epsilon(1e-15));
  }

  SUBCASE("one implicit step") {
    StateArrays s = sized_state(mesh, m);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) set_field(s, 0, stride, c, 1.0);
    step_source_implicit(mesh, m, s, {}, 0.1, 0.0, ns);
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      CHECK(s.q[c] == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
  }

  SUBCASE("both schemes agree to first order in dt") {
    const double dt = 1e-3;
    StateArrays se = sized_state(mesh, m), si = sized_state(mesh, m);
    set_field(se, 0, stride, 0, 1.0);
    set_field(si, 0, stride, 0, 1.0);
    step_source(mesh, m, se, {}, dt, 0.0);
    step_source_implicit(mesh, m, si, {}, dt, 0.0, ns);
    CHECK(std::abs(se.q[0] - si.q[0]) <= 1.1 * dt * dt);
    const double exact = std::exp(-dt);
    CHECK(std::abs(se.q[0] - exact) <= dt * dt);
    CHECK(std::abs(si.q[0] - exact) <= dt * dt);
  }

  SUBCASE("zero sources leave the state untouched") {
    ModelDef idle = inert_model();
    StateArrays s = sized_state(mesh, idle);
    set_field(s, 0, stride, 1, 7.0);
    StateArrays before = s;
    step_source(mesh, idle, s, {}, 0.5, 0.0);
    step_source_implicit(mesh, idle, s, {}, 0.5, 0.0, ns);
    CHECK(s.q == before.q);
  }
}

TEST_CASE("transient driver: contracts of the time loop") {
  const Mesh mesh = uniform_interval(0.0, 10.0, 50, "left", "right");
  ModelDef m = with_extrapolation(swe_model(1), {"left", "right"});
  m.initial_condition = {parse_expr("x < 5 ? 1 : 0.5", m.layout),
                         parse_expr("0", m.layout)};

  SUBCASE("zero horizon returns the initial condition with one snapshot") {
    SolverSettings settings;
    settings.t_end = 0.0;
    std::vector<Snapshot> snaps;
    const RunState rs = transient_hyperbolic_solve(
        mesh, m, settings, [&](const Snapshot& s) { snaps.push_back(s); });
    CHECK(rs.step == 0);
    CHECK(rs.t == 0.0);
    REQUIRE(snaps.size() == 1);
    const std::size_t ni = mesh.n_inner;
    for (std::size_t c = 0; c < ni; ++c) {
      const double want = mesh.centroid[c][0] < 5.0 ? 1.0 : 0.5;
      CHECK(snaps[0].q[c] == want);
      CHECK(snaps[0].q[ni + c] == 0.0);
    }
  }

  SUBCASE("snapshots appear at every output interval") {
    SolverSettings settings;
    settings.t_end = 0.2;
    settings.output_interval = 0.05;
    std::vector<double> times;
    transient_hyperbolic_solve(mesh, m, settings, [&](const Snapshot& s) {
      times.push_back(s.time);
    });
    REQUIRE(times.size() == 5);
    for (std::size_t i = 0; i < times.size(); ++i)
      CHECK(times[i] == doctest::Approx(0.05 * static_cast<double>(i))
                            .epsilon(1e-12));
  }

  SUBCASE("a split run resumes bit-exactly") {
    SolverSettings full;
    full.t_end = 1e9;
    full.max_steps = 20;
    const RunState a = transient_hyperbolic_solve(mesh, m, full, {});

    SolverSettings half = full;
    half.max_steps = 10;
    RunState b1 = transient_hyperbolic_solve(mesh, m, half, {});
    const RunState b2 =
        transient_hyperbolic_solve(mesh, m, half, {}, std::move(b1));
    CHECK(b2.step == a.step);
    CHECK(b2.t == a.t);
    CHECK(b2.state.q == a.state.q);
    CHECK(b2.state.qaux == a.state.qaux);
  }

  SUBCASE("mirrored initial data stays mirrored") {
    ModelDef mr = with_extrapolation(swe_model(1), {"left", "right"});
    mr.initial_condition = {parse_expr("x > 5 ? 1 : 0.5", mr.layout),
                            parse_expr("0", mr.layout)};
    SolverSettings settings;
    settings.t_end = 1e9;
    settings.max_steps = 30;
    const RunState fwd = transient_hyperbolic_solve(mesh, m, settings, {});
    const RunState rev = transient_hyperbolic_solve(mesh, mr, settings, {});
    const std::size_t stride = mesh.n_total();
    const std::size_t n = mesh.n_inner;
    for (std::size_t c = 0; c < n; ++c) {
      CHECK(fwd.state.q[c] ==
            doctest::Approx(rev.state.q[n - 1 - c]).epsilon(1e-11));
      CHECK(fwd.state.q[stride + c] ==
            doctest::Approx(-rev.state.q[stride + n - 1 - c]).epsilon(1e-11));
    }
  }
}

TEST_CASE("transient driver holds a uniform periodic state") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 20, "left", "right");
  ModelDef m = with_periodic_pair(swe_model(1), "left", "right");
  m.initial_condition = {parse_expr("2", m.layout),
                         parse_expr("0.5", m.layout)};
  SolverSettings settings;
  settings.t_end = 1e9;
  settings.max_steps = 100;
  std::vector<Snapshot> snaps;
  const RunState rs = transient_hyperbolic_solve(
      mesh, m, settings, [&](const Snapshot& s) { snaps.push_back(s); });
  CHECK(rs.step == 100);
  CHECK(snaps.size() == 2);  // initial + final
  const std::size_t stride = mesh.n_total();
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    CHECK(rs.state.q[c] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(rs.state.q[stride + c] == doctest::Approx(0.5).epsilon(1e-14));
  }
}

TEST_CASE("order zero of the moment hierarchy tracks shallow water in time") {
  const Mesh mesh = uniform_interval(0.0, 10.0, 40, "left", "right");
  ModelDef swe = with_extrapolation(swe_model(1), {"left", "right"});
  ModelDef sme0 = with_extrapolation(sme_model(1, 0), {"left", "right"});
  for (ModelDef* m : {&swe, &sme0})
    m->initial_condition = {parse_expr("x < 5 ? 1 : 0.5", m->layout),
                            parse_expr("0", m->layout)};
  SolverSettings settings;
  settings.t_end = 1e9;
  settings.max_steps = 50;
  const RunState a = transient_hyperbolic_solve(mesh, swe, settings, {});
  const RunState b = transient_hyperbolic_solve(mesh, sme0, settings, {});
  CHECK(a.t == doctest::Approx(b.t).epsilon(1e-14));
  const std::size_t stride = mesh.n_total();
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      CHECK(a.state.q[f * stride + c] ==
            doctest::Approx(b.state.q[f * stride + c]).epsilon(1e-12));
}

TEST_CASE("steady solver reproduces quadratic and linear exact solutions") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 100, "left", "right");
  SolverSettings settings;
  // Jacobian products come from finite differences, so the Krylov solve
  // cannot reach much past their noise floor; Newton still contracts the
  // outer residual by that factor every iteration.
  settings.gmres.tol = 1e-8;

  SUBCASE("curvature-source problem, quadratic solution") {
    ModelDef m = poisson_model();
    int iterations = -1;
    const StateArrays sol =
        steady_residual_solve(mesh, m, settings, nullptr, &iterations);
    CHECK(iterations <= 3);
    double max_err = 0.0;
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double x = mesh.centroid[c][0];
      max_err = std::max(max_err, std::abs(sol.q[c] - (1.0 + x * x)));
    }
    CHECK(max_err <= 1e-8);
  }

  SUBCASE("an exact initial guess converges without Newton steps") {
    ModelDef m = poisson_model();
    StateArrays guess;
    guess.q.assign(mesh.n_total(), 0.0);
    guess.qaux.assign(mesh.n_total(), 0.0);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double x = mesh.centroid[c][0];
      guess.q[c] = 1.0 + x * x;
    }
    int iterations = -1;
    const StateArrays sol =
        steady_residual_solve(mesh, m, settings, &guess, &iterations);
    CHECK(iterations <= 1);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double x = mesh.centroid[c][0];
      CHECK(std::abs(sol.q[c] - (1.0 + x * x)) <= 1e-9);
    }
  }

  SUBCASE("source-free problem, linear solution") {
    ModelDef m = poisson_model();
    m.residual = {Expr::integer(-1) * aux_var(0)};
    finalize_model(m);
    const StateArrays sol = steady_residual_solve(mesh, m, settings);
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double x = mesh.centroid[c][0];
      CHECK(std::abs(sol.q[c] - (1.0 + x)) <= 1e-8);
    }
  }

  SUBCASE("models without a residual are rejected") {
    ModelDef m = swe_model(1);
    CHECK_THROWS_AS(steady_residual_solve(mesh, m, settings), ConfigError);
  }
}

TEST_CASE("the predictor-corrector pair preserves still water") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 30, "left", "right");
  auto [pred, corr] = vam_models();
  pred = with_extrapolation(std::move(pred), {"left", "right"});
  pred.initial_condition = {
      parse_expr("1", pred.layout), parse_expr("0", pred.layout),
      parse_expr("0", pred.layout), parse_expr("0", pred.layout),
      parse_expr("0", pred.layout)};
  SolverSettings settings;
  settings.t_end = 1e9;
  settings.max_steps = 100;
  const RunState rs = vam_solve(mesh, pred, corr, settings, {});
  CHECK(rs.step == 100);
  const std::size_t stride = mesh.n_total();
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    CHECK(std::abs(rs.state.q[c] - 1.0) <= 1e-10);
    for (std::size_t f = 1; f < 5; ++f)
      CHECK(std::abs(rs.state.q[f * stride + c]) <= 1e-10);
    CHECK(std::abs(rs.state.qaux[1 * stride + c]) <= 1e-10);  // p0
    CHECK(std::abs(rs.state.qaux[2 * stride + c]) <= 1e-10);  // p1
  }
}

TEST_CASE("skipping the pressure corrector reduces to the pure predictor") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 25, "left", "right");
  auto [pred, corr] = vam_models();
  pred = with_extrapolation(std::move(pred), {"left", "right"});
  pred.initial_condition = {
      parse_expr("x > 0.4 ? (x < 0.6 ? 1.05 : 1) : 1", pred.layout),
      parse_expr("0", pred.layout), parse_expr("0", pred.layout),
      parse_expr("0", pred.layout), parse_expr("0", pred.layout)};
  SolverSettings settings;
  settings.t_end = 1e9;
  settings.max_steps = 25;
  settings.vam_skip_corrector = true;
  const RunState skip = vam_solve(mesh, pred, corr, settings, {});

  SolverSettings plain = settings;
  plain.vam_skip_corrector = false;
  const RunState hyp = transient_hyperbolic_solve(mesh, pred, plain, {});
  CHECK(skip.t == doctest::Approx(hyp.t).epsilon(1e-15));
  const std::size_t stride = mesh.n_total();
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const double a = skip.state.q[f * stride + c];
      const double b = hyp.state.q[f * stride + c];
      CHECK(std::abs(a - b) <= 1e-13 * (1.0 + std::abs(b)));
    }
}

TEST_CASE("the full predictor-corrector loop conserves depth") {
  const Mesh mesh = uniform_interval(0.0, 1.0, 25, "left", "right");
  auto [pred, corr] = vam_models();
  pred = with_periodic_pair(std::move(pred), "left", "right");
  pred.initial_condition = {
      parse_expr("1 + 0.02 * x * (1 - x)", pred.layout),
      parse_expr("0.01", pred.layout), parse_expr("0", pred.layout),
      parse_expr("0", pred.layout), parse_expr("0", pred.layout)};
  SolverSettings settings;
  settings.t_end = 1e9;
  settings.max_steps = 25;
  settings.gmres.tol = 1e-8;  // fd-Jacobian noise floor
  std::vector<Snapshot> snaps;
  const RunState rs = vam_solve(mesh, pred, corr, settings,
                                [&](const Snapshot& s) { snaps.push_back(s); });
  REQUIRE(snaps.size() == 2);
  const std::size_t ni = mesh.n_inner;
  double mass0 = 0.0, mass1 = 0.0;
  for (std::size_t c = 0; c < ni; ++c) {
    mass0 += snaps.front().q[c] * mesh.volume[c];
    mass1 += snaps.back().q[c] * mesh.volume[c];
  }
  CHECK(mass1 == doctest::Approx(mass0).epsilon(1e-12));
  CHECK(rs.step == 25);
}
