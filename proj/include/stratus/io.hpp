// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors
//
// Result serialization: legacy VTK for 2D fields, CSV for 1D runs, 3D
// lifted VTK, and a restartable two-file checkpoint format.  Every writer
// is deterministic: identical inputs produce byte-identical files.
#pragma once

#include <span>
#include <string>
#include <vector>

#include "stratus/mesh.hpp"
#include "stratus/model.hpp"

namespace stratus {

/// Inner-cell copy of the solution at one output time, field-major with
/// stride n_inner.
struct Snapshot {
  double time = 0.0;
  long step = 0;
  std::size_t n_inner = 0;
  std::vector<std::string> state_names;
  std::vector<std::string> aux_names;
  std::vector<double> q;
  std::vector<double> qaux;
};

/// Trims full (ghost-padded, stride n_total) arrays to a snapshot.
Snapshot make_snapshot(const Mesh& mesh, const ModelDef& model, double t,
                       long step, std::span<const double> q_full,
                       std::span<const double> qaux_full);

/// Legacy VTK 3.0 ASCII, DATASET UNSTRUCTURED_GRID, one CELL_DATA SCALARS
/// block per state/aux field.  2D meshes only.
void write_vtk(const Mesh& mesh, const Snapshot& snap,
               const std::string& path);

/// CSV with header "x,<fields...>", one row per inner cell in ascending
/// centroid order, 17 significant digits.  1D meshes only.
void write_csv_1d(const Mesh& mesh, const Snapshot& snap,
                  const std::string& path);

/// Extrudes the lifted columns of lift_to_3d to a 3D VTK file with point
/// data rho, p, and the velocity vector.  Requires a model lift recipe.
void write_lifted_vtk(const Mesh& mesh, const ModelDef& model,
                      const Snapshot& snap, int nz, const std::string& path);

/// A restored checkpoint: full arrays including ghost columns.
struct Checkpoint {
  std::string model_name;
  int n_fields = 0;
  int n_aux = 0;
  std::size_t n_inner = 0;
  std::size_t n_ghost = 0;
  double time = 0.0;
  long step = 0;
  std::vector<std::string> state_names;
  std::vector<std::string> aux_names;
  std::vector<double> q;
  std::vector<double> qaux;
};

/// Writes `base`.meta (text metadata, format version, layout, time, step,
/// endianness tag) and `base`.bin (raw little-endian float64: Q then
/// Qaux, field-major).  The round trip is bit-exact.
void checkpoint_write(const Mesh& mesh, const ModelDef& model,
                      std::span<const double> q_full,
                      std::span<const double> qaux_full, double t, long step,
                      const std::string& base);

/// Reads a checkpoint pair; throws ConfigError on version or size
/// mismatches.
Checkpoint checkpoint_read(const std::string& base);

}  // namespace stratus
