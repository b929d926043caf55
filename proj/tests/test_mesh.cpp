// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mesh_fixtures.hpp"
#include "stratus/mesh.hpp"

using namespace stratus;

namespace {

// Outward-oriented normal-times-area sum over one inner cell; a closed
// cell surface makes this vanish.
std::array<double, 2> surface_sum(const Mesh& mesh, std::size_t cell) {
  std::array<double, 2> s{0.0, 0.0};
  for (const std::int32_t fid : mesh.cell_faces[cell]) {
    const Face& f = mesh.faces[static_cast<std::size_t>(fid)];
    const double sign = f.left == static_cast<std::int32_t>(cell) ? 1.0 : -1.0;
    s[0] += sign * f.normal[0] * f.area;
    s[1] += sign * f.normal[1] * f.area;
  }
  return s;
}

double total_face_area(const Mesh& mesh, std::size_t cell) {
  double a = 0.0;
  for (const std::int32_t fid : mesh.cell_faces[cell])
    a += mesh.faces[static_cast<std::size_t>(fid)].area;
  return a;
}

void check_geometric_invariants(const Mesh& mesh) {
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    CHECK(mesh.volume[c] > 0.0);
    const auto s = surface_sum(mesh, c);
    const double rel = std::hypot(s[0], s[1]) / total_face_area(mesh, c);
    CHECK(rel <= 1e-12);
  }
  for (const Face& f : mesh.faces) {
    CHECK(std::abs(std::hypot(f.normal[0], f.normal[1]) - 1.0) <= 1e-14);
    CHECK(f.area > 0.0);
  }
  // Reflecting a ghost centroid back across its face recovers the inner
  // centroid.
  for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
    const Face& f = mesh.faces[static_cast<std::size_t>(mesh.ghost_face[g])];
    const auto& cg = mesh.centroid[mesh.n_inner + g];
    const double along = (f.midpoint[0] - cg[0]) * f.normal[0] +
                         (f.midpoint[1] - cg[1]) * f.normal[1];
    const double rx = cg[0] + 2.0 * along * f.normal[0];
    const double ry = cg[1] + 2.0 * along * f.normal[1];
    const auto& ci = mesh.centroid[static_cast<std::size_t>(mesh.ghost_owner[g])];
    CHECK(std::abs(rx - ci[0]) <= 1e-12);
    CHECK(std::abs(ry - ci[1]) <= 1e-12);
    CHECK(mesh.volume[mesh.n_inner + g] ==
          mesh.volume[static_cast<std::size_t>(mesh.ghost_owner[g])]);
  }
}

double inner_volume_sum(const Mesh& mesh) {
  double v = 0.0;
  for (std::size_t c = 0; c < mesh.n_inner; ++c) v += mesh.volume[c];
  return v;
}

bool stencil_is_fully_interior(const Mesh& mesh, const CellStencil& cs) {
  return std::all_of(cs.neighbors.begin(), cs.neighbors.end(),
                     [&](std::int32_t n) {
                       return static_cast<std::size_t>(n) < mesh.n_inner;
                     });
}

}  // namespace

TEST_CASE("uniform interval mesh") {
  SUBCASE("four cells on [0,1]") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 4, "left", "right");
    REQUIRE(mesh.dimension == 1);
    REQUIRE(mesh.n_inner == 4);
    REQUIRE(mesh.n_ghost == 2);
    const double expect_c[] = {0.125, 0.375, 0.625, 0.875};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(mesh.volume[i] == doctest::Approx(0.25).epsilon(1e-15));
      CHECK(mesh.centroid[i][0] == doctest::Approx(expect_c[i]).epsilon(1e-15));
    }
    CHECK(mesh.faces.size() == 5);
    CHECK(inner_volume_sum(mesh) == doctest::Approx(1.0).epsilon(1e-13));
    check_geometric_invariants(mesh);

    // Tag registry: one face per end.
    REQUIRE(mesh.tag_faces.count("left") == 1);
    REQUIRE(mesh.tag_faces.count("right") == 1);
    const Face& lf = mesh.faces[mesh.tag_faces.at("left")[0]];
    const Face& rf = mesh.faces[mesh.tag_faces.at("right")[0]];
    CHECK(lf.normal[0] == -1.0);
    CHECK(rf.normal[0] == 1.0);
    CHECK(lf.left == 0);
    CHECK(rf.left == 3);
    CHECK(static_cast<std::size_t>(lf.right) >= mesh.n_inner);
    CHECK(static_cast<std::size_t>(rf.right) >= mesh.n_inner);

    // Ghost centroids mirror across the boundary points.
    const auto& gl = mesh.centroid[static_cast<std::size_t>(lf.right)];
    const auto& gr = mesh.centroid[static_cast<std::size_t>(rf.right)];
    CHECK(gl[0] == doctest::Approx(-0.125).epsilon(1e-15));
    CHECK(gr[0] == doctest::Approx(1.125).epsilon(1e-15));

    // Interior faces point from cell i into cell i+1 along +x.
    for (const Face& f : mesh.faces) {
      if (f.tag >= 0) continue;
      CHECK(f.normal[0] == 1.0);
      CHECK(f.right == f.left + 1);
    }
  }
  SUBCASE("single cell") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 1, "left", "right");
    CHECK(mesh.n_inner == 1);
    CHECK(mesh.n_ghost == 2);
    CHECK(mesh.faces.size() == 2);
    check_geometric_invariants(mesh);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(uniform_interval(1.0, 0.0, 4, "l", "r"), ConfigError);
    CHECK_THROWS_AS(uniform_interval(0.0, 1.0, 0, "l", "r"), ConfigError);
  }
}

TEST_CASE("msh parsing") {
  SUBCASE("square split into two triangles") {
    const auto path = testutil::write_temp_file(
        "fixture_two_tri.msh", testutil::two_triangle_square_msh());
    const Mesh mesh = parse_msh(path);
    REQUIRE(mesh.dimension == 2);
    CHECK(mesh.n_inner == 2);
    CHECK(mesh.n_ghost == 4);
    std::size_t interior = 0, boundary = 0;
    for (const Face& f : mesh.faces) (f.tag < 0 ? interior : boundary) += 1;
    CHECK(interior == 1);
    CHECK(boundary == 4);
    CHECK(inner_volume_sum(mesh) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(mesh.tag_names.size() == 4);
    for (const char* name : {"bottom", "right", "top", "left"}) {
      REQUIRE(mesh.tag_faces.count(name) == 1);
      CHECK(mesh.tag_faces.at(name).size() == 1);
    }
    check_geometric_invariants(mesh);

    // The bottom face points straight down and out of the domain.
    const Face& bf = mesh.faces[mesh.tag_faces.at("bottom")[0]];
    CHECK(bf.normal[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bf.normal[1] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(bf.midpoint[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bf.midpoint[1] == doctest::Approx(0.0).epsilon(1e-15));

    // Triangle centroids.
    CHECK(mesh.centroid[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(mesh.centroid[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(mesh.volume[0] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("three-cell line mesh with tagged end points") {
    const auto path =
        testutil::write_temp_file("fixture_line3.msh", testutil::line_msh(3));
    const Mesh mesh = parse_msh(path);
    CHECK(mesh.dimension == 1);
    CHECK(mesh.n_inner == 3);
    CHECK(mesh.n_ghost == 2);
    CHECK(mesh.tag_faces.at("left").size() == 1);
    CHECK(mesh.tag_faces.at("right").size() == 1);
    CHECK(inner_volume_sum(mesh) == doctest::Approx(1.0).epsilon(1e-14));
    check_geometric_invariants(mesh);
  }
  SUBCASE("jittered triangulation invariants") {
    const auto path = testutil::write_temp_file(
        "fixture_jitter.msh", testutil::jittered_square_msh(8, 6, 0.25));
    const Mesh mesh = parse_msh(path);
    CHECK(mesh.n_inner == 2 * 8 * 6);
    CHECK(mesh.n_ghost == 2 * (8 + 6));
    CHECK(inner_volume_sum(mesh) == doctest::Approx(1.0).epsilon(1e-12));
    check_geometric_invariants(mesh);
    std::size_t tagged = 0;
    for (const auto& [name, faces] : mesh.tag_faces) tagged += faces.size();
    CHECK(tagged == mesh.n_ghost);
  }
  SUBCASE("unsupported version") {
    const auto path = testutil::write_temp_file(
        "fixture_v41.msh", "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    CHECK_THROWS_WITH_AS(parse_msh(path),
                         doctest::Contains("unsupported MSH version"),
                         ConfigError);
  }
  SUBCASE("binary flag") {
    const auto path = testutil::write_temp_file(
        "fixture_bin.msh", "$MeshFormat\n2.2 1 8\n$EndMeshFormat\n");
    CHECK_THROWS_WITH_AS(parse_msh(path), doctest::Contains("binary"),
                         ConfigError);
  }
  SUBCASE("unsupported element type") {
    std::string text = testutil::two_triangle_square_msh();
    // Replace the first triangle with a 4-node tetrahedron (type 4).
    const auto pos = text.find("5 2 2 10 1 1 2 3");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 16, "5 4 2 10 1 1 2 3 4");
    const auto path = testutil::write_temp_file("fixture_tet.msh", text);
    CHECK_THROWS_WITH_AS(parse_msh(path),
                         doctest::Contains("unsupported element type"),
                         ConfigError);
  }
  SUBCASE("untagged boundary face") {
    std::string text = testutil::two_triangle_square_msh();
    // Drop the "top" boundary line element entirely.
    const auto pos = text.find("3 1 2 3 3 3 4\n");
    REQUIRE(pos != std::string::npos);
    text.erase(pos, 14);
    text.replace(text.find("$Elements\n6\n"), 12, "$Elements\n5\n");
    const auto path = testutil::write_temp_file("fixture_untagged.msh", text);
    CHECK_THROWS_WITH_AS(parse_msh(path),
                         doctest::Contains("without a physical name"),
                         ConfigError);
  }
  SUBCASE("non-manifold edge") {
    const std::string text =
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
        "$PhysicalNames\n1\n1 1 \"wall\"\n$EndPhysicalNames\n"
        "$Nodes\n5\n1 0 0 0\n2 1 0 0\n3 0.5 1 0\n4 0.5 -1 0\n5 0.5 2 0\n"
        "$EndNodes\n"
        "$Elements\n3\n"
        "1 2 2 10 1 1 2 3\n"
        "2 2 2 10 1 1 2 4\n"
        "3 2 2 10 1 1 2 5\n"
        "$EndElements\n";
    const auto path = testutil::write_temp_file("fixture_nonmanifold.msh", text);
    CHECK_THROWS_WITH_AS(parse_msh(path), doctest::Contains("non-manifold"),
                         ConfigError);
  }
}

TEST_CASE("least-squares stencils") {
  SUBCASE("degree 1 on a uniform interval gives central differences") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 10, "left", "right");
    const LsqStencils st = build_lsq_stencils(mesh, 1);
    REQUIRE(st.indices.size() == 1);
    const double dx = 0.1;
    for (std::size_t i = 1; i + 1 < mesh.n_inner; ++i) {
      const CellStencil& cs = st.cells[i];
      REQUIRE(cs.neighbors.size() == 2);
      CHECK(cs.neighbors[0] == static_cast<std::int32_t>(i - 1));
      CHECK(cs.neighbors[1] == static_cast<std::int32_t>(i + 1));
      CHECK(cs.pinv[0] == doctest::Approx(-1.0 / (2.0 * dx)).epsilon(1e-12));
      CHECK(cs.pinv[1] == doctest::Approx(1.0 / (2.0 * dx)).epsilon(1e-12));
    }
  }
  SUBCASE("constant field has zero derivatives") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 10, "left", "right");
    const LsqStencils st = build_lsq_stencils(mesh, 1);
    const std::vector<double> f(mesh.n_total(), 3.75);
    const auto d = compute_derivatives(mesh, st, f, {{1, 0}});
    for (const double v : d) CHECK(std::abs(v) <= 1e-14);
  }
  SUBCASE("degree 2 reproduces the second derivative of x^2") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 16, "left", "right");
    const LsqStencils st = build_lsq_stencils(mesh, 2);
    std::vector<double> f(mesh.n_total());
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      f[c] = mesh.centroid[c][0] * mesh.centroid[c][0];
    // Ghost values sampled where the stencil samples them: at the
    // boundary face midpoint.
    for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
      const Face& fc = mesh.faces[static_cast<std::size_t>(mesh.ghost_face[g])];
      f[mesh.n_inner + g] = fc.midpoint[0] * fc.midpoint[0];
    }
    const auto d = compute_derivatives(mesh, st, f, {{1, 0}, {2, 0}});
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      CHECK(d[c * 2 + 0] ==
            doctest::Approx(2.0 * mesh.centroid[c][0]).epsilon(1e-10));
      CHECK(d[c * 2 + 1] == doctest::Approx(2.0).epsilon(1e-10));
    }
    // Ghost rows copy their owner.
    for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
      const auto owner = static_cast<std::size_t>(mesh.ghost_owner[g]);
      CHECK(d[(mesh.n_inner + g) * 2 + 1] == d[owner * 2 + 1]);
    }
  }
  SUBCASE("linear field on a jittered triangulation") {
    const auto path = testutil::write_temp_file(
        "fixture_jitter_lsq.msh", testutil::jittered_square_msh(8, 6, 0.25));
    const Mesh mesh = parse_msh(path);
    REQUIRE(mesh.n_inner >= 50);
    const LsqStencils st = build_lsq_stencils(mesh, 1);
    std::vector<double> f(mesh.n_total());
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      f[c] = 2.0 * mesh.centroid[c][0] + 3.0 * mesh.centroid[c][1];
    for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
      const Face& fc = mesh.faces[static_cast<std::size_t>(mesh.ghost_face[g])];
      f[mesh.n_inner + g] = 2.0 * fc.midpoint[0] + 3.0 * fc.midpoint[1];
    }
    const auto d = compute_derivatives(mesh, st, f, {{1, 0}, {0, 1}});
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      CHECK(d[c * 2 + 0] == doctest::Approx(2.0).epsilon(1e-11));
      CHECK(d[c * 2 + 1] == doctest::Approx(3.0).epsilon(1e-11));
    }
  }
  SUBCASE("quadratic reproduction at fully interior stencils") {
    const auto path = testutil::write_temp_file(
        "fixture_jitter_q.msh", testutil::jittered_square_msh(8, 6, 0.25));
    const Mesh mesh = parse_msh(path);
    const LsqStencils st = build_lsq_stencils(mesh, 2);
    REQUIRE(st.indices.size() == 5);
    std::vector<double> f(mesh.n_total());
    const auto poly = [](double x, double y) {
      return x * x + x * y + y * y + 0.5 * x - 0.25 * y + 2.0;
    };
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      f[c] = poly(mesh.centroid[c][0], mesh.centroid[c][1]);
    for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
      const Face& fc = mesh.faces[static_cast<std::size_t>(mesh.ghost_face[g])];
      f[mesh.n_inner + g] = poly(fc.midpoint[0], fc.midpoint[1]);
    }
    const auto d = compute_derivatives(
        mesh, st, f, {{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}});
    std::size_t checked = 0;
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      if (!stencil_is_fully_interior(mesh, st.cells[c])) continue;
      const double x = mesh.centroid[c][0];
      const double y = mesh.centroid[c][1];
      CHECK(d[c * 5 + 0] == doctest::Approx(2.0 * x + y + 0.5).epsilon(1e-10));
      CHECK(d[c * 5 + 1] == doctest::Approx(x + 2.0 * y - 0.25).epsilon(1e-10));
      CHECK(d[c * 5 + 2] == doctest::Approx(2.0).epsilon(1e-10));
      CHECK(d[c * 5 + 3] == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(d[c * 5 + 4] == doctest::Approx(2.0).epsilon(1e-10));
      ++checked;
    }
    CHECK(checked > 20);
  }
  SUBCASE("validation") {
    const Mesh mesh = uniform_interval(0.0, 1.0, 10, "left", "right");
    CHECK_THROWS_AS(build_lsq_stencils(mesh, 0), ConfigError);
    const Mesh tiny = uniform_interval(0.0, 1.0, 1, "left", "right");
    CHECK_THROWS_WITH_AS(build_lsq_stencils(tiny, 2),
                         doctest::Contains("too small"), ConfigError);
    const LsqStencils st = build_lsq_stencils(mesh, 1);
    const std::vector<double> f(mesh.n_total(), 0.0);
    CHECK_THROWS_AS(compute_derivatives(mesh, st, f, {{2, 0}}), ConfigError);
    const std::vector<double> wrong(3, 0.0);
    CHECK_THROWS_AS(compute_derivatives(mesh, st, wrong, {{1, 0}}),
                    ConfigError);
  }
}
