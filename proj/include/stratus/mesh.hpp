// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Unstructured 1D/2D meshes with a single mirrored ghost layer, tagged
// boundary faces, and weighted least-squares derivative reconstruction.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stratus/common.hpp"

namespace stratus {

// A face between two cells.  `normal` is the unit normal pointing from
// `left` into `right`; for boundary faces `left` is always the inner cell,
// `right` is the ghost cell owned by this face, and the normal points out
// of the domain.  In 1D a face is a point with area 1 and normal (+-1, 0).
struct Face {
  double area = 0.0;
  std::array<double, 2> normal{0.0, 0.0};
  std::array<double, 2> midpoint{0.0, 0.0};
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t tag = -1;  // index into Mesh::tag_names, -1 for interior faces
};

// Cells are indexed [0, n_inner) for inner cells and
// [n_inner, n_inner + n_ghost) for ghost cells.  Each boundary face owns
// exactly one ghost cell whose centroid is the inner centroid mirrored
// across the face; ghost volume equals the inner volume.
struct Mesh {
  int dimension = 1;
  std::size_t n_inner = 0;
  std::size_t n_ghost = 0;

  std::vector<std::array<double, 2>> centroid;  // n_inner + n_ghost entries
  std::vector<double> volume;                   // n_inner + n_ghost entries
  std::vector<Face> faces;

  // Per inner cell: indices into `faces` (every face of the cell).
  std::vector<std::vector<std::int32_t>> cell_faces;

  // Per ghost cell (index - n_inner): the owning inner cell and face.
  std::vector<std::int32_t> ghost_owner;
  std::vector<std::int32_t> ghost_face;

  // Physical boundary tags: name registry plus name -> face id list.
  std::vector<std::string> tag_names;
  std::map<std::string, std::vector<std::size_t>> tag_faces;

  // Node coordinates and per-inner-cell node loops (counter-clockwise),
  // retained for file output.  1D cells list their two end nodes.
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::vector<std::int32_t>> cell_nodes;

  std::size_t n_total() const { return n_inner + n_ghost; }
};

// Reads a GMSH MSH 2.2 ASCII file.  Cell elements: 3-node triangles and
// 4-node quadrilaterals (2D) or 2-node lines (1D).  Boundary elements
// (lines in 2D, points in 1D) must carry a physical name.  Throws
// ConfigError for unsupported versions, binary files, unsupported element
// types, untagged boundary faces, or non-manifold connectivity.
Mesh parse_msh(const std::string& path);

// Builds a uniform 1D mesh of n cells on [a, b] with tagged end points.
Mesh uniform_interval(double a, double b, std::size_t n,
                      const std::string& left_tag,
                      const std::string& right_tag);

// Least-squares reconstruction stencils.  For each inner cell the stencil
// stores neighbor cell ids and a pseudo-inverse mapping neighbor value
// differences to the derivatives of a Taylor polynomial fitted about the
// cell centroid.  Neighborhoods grow by face-neighbor rings over inner
// cells until they hold (#monomials of the degree) + 1 members; a boundary
// cell additionally includes its own face ghosts, whose sample points are
// the boundary face midpoints.
struct CellStencil {
  std::vector<std::int32_t> neighbors;
  // Row-major (#multi-indices) x (#neighbors): derivative = pinv * (f_nbr - f_c).
  std::vector<double> pinv;
};

struct LsqStencils {
  int degree = 1;
  // Multi-indices (kx, ky), 1 <= kx + ky <= degree, in graded order.
  std::vector<std::array<int, 2>> indices;
  std::vector<CellStencil> cells;  // one per inner cell
};

LsqStencils build_lsq_stencils(const Mesh& mesh, int degree);

// Applies the stencils to a field of length n_total and returns the
// requested derivatives, row-major (n_total x indices.size()).  Ghost rows
// are copied from their owning inner cell.  Throws ConfigError when a
// requested multi-index exceeds the stencil degree.
std::vector<double> compute_derivatives(
    const Mesh& mesh, const LsqStencils& stencils,
    const std::vector<double>& field,
    const std::vector<std::array<int, 2>>& indices);

}  // namespace stratus
