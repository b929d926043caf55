// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#include "stratus/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "stratus/common.hpp"

namespace stratus {

namespace {

// Shortest round-trippable decimal form of a double.
std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline mangling
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  return out;
}

// Geometry + point-data layout shared by the extruded writers: each inner
// cell owns its own column of points so fields may jump between cells.
struct ExtrudedGrid {
  std::vector<std::array<double, 3>> points;
  std::vector<std::vector<std::size_t>> cells;
  std::vector<int> cell_types;
};

}  // namespace

Snapshot make_snapshot(const Mesh& mesh, const ModelDef& model, double t,
                       long step, std::span<const double> q_full,
                       std::span<const double> qaux_full) {
  const std::size_t stride = mesh.n_total();
  const std::size_t ni = mesh.n_inner;
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  if (q_full.size() != nf * stride || qaux_full.size() != na * stride)
    throw ConfigError("make_snapshot: array sizes do not match the mesh");
  Snapshot s;
  s.time = t;
  s.step = step;
  s.n_inner = ni;
  s.state_names = model.layout.state;
  s.aux_names = model.layout.aux;
  s.q.resize(nf * ni);
  s.qaux.resize(na * ni);
  for (std::size_t f = 0; f < nf; ++f)
    std::copy_n(q_full.data() + f * stride, ni, s.q.data() + f * ni);
  for (std::size_t a = 0; a < na; ++a)
    std::copy_n(qaux_full.data() + a * stride, ni, s.qaux.data() + a * ni);
  return s;
}

void write_vtk(const Mesh& mesh, const Snapshot& snap,
               const std::string& path) {
  if (mesh.dimension != 2)
    throw ConfigError("write_vtk: planar output needs a 2D mesh");
  if (snap.n_inner != mesh.n_inner)
    throw ConfigError("write_vtk: snapshot does not match the mesh");
  auto out = open_text(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "stratus cell fields, t = " << g17(snap.time) << "\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.nodes.size() << " double\n";
  for (const auto& nd : mesh.nodes)
    out << g17(nd[0]) << " " << g17(nd[1]) << " 0\n";
  std::size_t list_len = 0;
  for (std::size_t c = 0; c < mesh.n_inner; ++c)
    list_len += 1 + mesh.cell_nodes[c].size();
  out << "CELLS " << mesh.n_inner << " " << list_len << "\n";
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    const auto& cn = mesh.cell_nodes[c];
    out << cn.size();
    for (const auto n : cn) out << " " << n;
    out << "\n";
  }
  out << "CELL_TYPES " << mesh.n_inner << "\n";
  for (std::size_t c = 0; c < mesh.n_inner; ++c) {
    const std::size_t k = mesh.cell_nodes[c].size();
    if (k != 3 && k != 4)
      throw ConfigError("write_vtk: only triangle and quad cells supported");
    out << (k == 3 ? 5 : 9) << "\n";
  }
  out << "CELL_DATA " << snap.n_inner << "\n";
  auto scalars = [&](const std::string& name, const double* row) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < snap.n_inner; ++c) out << g17(row[c]) << "\n";
  };
  for (std::size_t f = 0; f < snap.state_names.size(); ++f)
    scalars(snap.state_names[f], snap.q.data() + f * snap.n_inner);
  for (std::size_t a = 0; a < snap.aux_names.size(); ++a)
    scalars(snap.aux_names[a], snap.qaux.data() + a * snap.n_inner);
}

void write_csv_1d(const Mesh& mesh, const Snapshot& snap,
                  const std::string& path) {
  if (mesh.dimension != 1)
    throw ConfigError("write_csv_1d: profile output needs a 1D mesh");
  if (snap.n_inner != mesh.n_inner)
    throw ConfigError("write_csv_1d: snapshot does not match the mesh");
  std::vector<std::size_t> order(mesh.n_inner);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return mesh.centroid[a][0] < mesh.centroid[b][0];
  });
  auto out = open_text(path);
  out << "x";
  for (const auto& n : snap.state_names) out << "," << n;
  for (const auto& n : snap.aux_names) out << "," << n;
  out << "\n";
  for (const auto c : order) {
    out << g17(mesh.centroid[c][0]);
    for (std::size_t f = 0; f < snap.state_names.size(); ++f)
      out << "," << g17(snap.q[f * snap.n_inner + c]);
    for (std::size_t a = 0; a < snap.aux_names.size(); ++a)
      out << "," << g17(snap.qaux[a * snap.n_inner + c]);
    out << "\n";
  }
}

void write_lifted_vtk(const Mesh& mesh, const ModelDef& model,
                      const Snapshot& snap, int nz, const std::string& path) {
  if (snap.n_inner != mesh.n_inner)
    throw ConfigError("write_lifted_vtk: snapshot does not match the mesh");
  // Pad the inner-only snapshot back to ghost-padded arrays (the lift only
  // samples inner columns, so the padding value is irrelevant).
  const std::size_t stride = mesh.n_total();
  const std::size_t ni = mesh.n_inner;
  const std::size_t nf = snap.state_names.size();
  const std::size_t na = snap.aux_names.size();
  std::vector<double> q(nf * stride, 0.0), qaux(na * stride, 0.0);
  for (std::size_t f = 0; f < nf; ++f)
    std::copy_n(snap.q.data() + f * ni, ni, q.data() + f * stride);
  for (std::size_t a = 0; a < na; ++a)
    std::copy_n(snap.qaux.data() + a * ni, ni, qaux.data() + a * stride);
  const auto columns = lift_to_3d(model, mesh, q, qaux, nz);

  const auto levels = static_cast<std::size_t>(nz);
  ExtrudedGrid grid;
  for (const auto& col : columns) {
    const auto& cn = mesh.cell_nodes[col.cell];
    const std::size_t base = grid.points.size();
    if (mesh.dimension == 1) {
      // Segment * z levels -> quads in the (x, z) plane.
      const double xl = mesh.nodes[cn[0]][0];
      const double xr = mesh.nodes[cn[1]][0];
      for (std::size_t j = 0; j < levels; ++j) {
        grid.points.push_back({xl, col.z[j], 0.0});
        grid.points.push_back({xr, col.z[j], 0.0});
      }
      for (std::size_t j = 0; j + 1 < levels; ++j) {
        const std::size_t b = base + 2 * j;
        grid.cells.push_back({b, b + 1, b + 3, b + 2});
        grid.cell_types.push_back(9);
      }
    } else {
      const std::size_t k = cn.size();
      if (k != 3 && k != 4)
        throw ConfigError(
            "write_lifted_vtk: only triangle and quad cells supported");
      for (std::size_t j = 0; j < levels; ++j)
        for (std::size_t v = 0; v < k; ++v)
          grid.points.push_back(
              {mesh.nodes[cn[v]][0], mesh.nodes[cn[v]][1], col.z[j]});
      for (std::size_t j = 0; j + 1 < levels; ++j) {
        const std::size_t b = base + k * j;
        std::vector<std::size_t> ids;
        for (std::size_t v = 0; v < k; ++v) ids.push_back(b + v);
        for (std::size_t v = 0; v < k; ++v) ids.push_back(b + k + v);
        grid.cells.push_back(std::move(ids));
        grid.cell_types.push_back(k == 3 ? 13 : 12);  // wedge : hexahedron
      }
    }
  }

  auto out = open_text(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "stratus lifted fields, t = " << g17(snap.time) << "\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << grid.points.size() << " double\n";
  for (const auto& p : grid.points)
    out << g17(p[0]) << " " << g17(p[1]) << " " << g17(p[2]) << "\n";
  std::size_t list_len = 0;
  for (const auto& c : grid.cells) list_len += 1 + c.size();
  out << "CELLS " << grid.cells.size() << " " << list_len << "\n";
  for (const auto& c : grid.cells) {
    out << c.size();
    for (const auto id : c) out << " " << id;
    out << "\n";
  }
  out << "CELL_TYPES " << grid.cells.size() << "\n";
  for (const auto t : grid.cell_types) out << t << "\n";

  // Point samples: each column's level value is shared by that level's
  // footprint points.
  const std::size_t pts_per_level = mesh.dimension == 1 ? 2 : 0;
  out << "POINT_DATA " << grid.points.size() << "\n";
  auto point_scalar = [&](const std::string& name, auto&& value) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (const auto& col : columns) {
      const std::size_t k =
          mesh.dimension == 1 ? pts_per_level : mesh.cell_nodes[col.cell].size();
      for (std::size_t j = 0; j < levels; ++j)
        for (std::size_t v = 0; v < k; ++v) out << g17(value(col, j)) << "\n";
    }
  };
  point_scalar("rho", [](const LiftedColumn& c, std::size_t j) {
    return c.rho[j];
  });
  point_scalar("p", [](const LiftedColumn& c, std::size_t j) {
    return c.p[j];
  });
  out << "VECTORS velocity double\n";
  for (const auto& col : columns) {
    const std::size_t k =
        mesh.dimension == 1 ? pts_per_level : mesh.cell_nodes[col.cell].size();
    for (std::size_t j = 0; j < levels; ++j) {
      const std::string line =
          mesh.dimension == 1
              ? g17(col.u[j]) + " " + g17(col.w[j]) + " 0"
              : g17(col.u[j]) + " " + g17(col.v[j]) + " " + g17(col.w[j]);
      for (std::size_t v = 0; v < k; ++v) out << line << "\n";
    }
  }
}

void checkpoint_write(const Mesh& mesh, const ModelDef& model,
                      std::span<const double> q_full,
                      std::span<const double> qaux_full, double t, long step,
                      const std::string& base) {
  const std::size_t stride = mesh.n_total();
  const auto nf = static_cast<std::size_t>(model.n_fields);
  const std::size_t na = model.layout.aux.size();
  if (q_full.size() != nf * stride || qaux_full.size() != na * stride)
    throw ConfigError("checkpoint_write: array sizes do not match the mesh");

  auto meta = open_text(base + ".meta");
  meta << "stratus-checkpoint 1\n";
  meta << "model " << model.name << "\n";
  meta << "n_fields " << nf << "\n";
  meta << "n_aux " << na << "\n";
  meta << "n_inner " << mesh.n_inner << "\n";
  meta << "n_ghost " << mesh.n_ghost << "\n";
  meta << "time " << g17(t) << "\n";
  meta << "step " << step << "\n";
  meta << "state";
  for (const auto& n : model.layout.state) meta << " " << n;
  meta << "\n";
  meta << "aux";
  for (const auto& n : model.layout.aux) meta << " " << n;
  meta << "\n";
  meta << "endianness LE\n";

  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin)
    throw ConfigError("cannot open '" + base + ".bin' for writing");
  bin.write(reinterpret_cast<const char*>(q_full.data()),
            static_cast<std::streamsize>(q_full.size() * sizeof(double)));
  bin.write(reinterpret_cast<const char*>(qaux_full.data()),
            static_cast<std::streamsize>(qaux_full.size() * sizeof(double)));
  if (!bin) throw ConfigError("short write to '" + base + ".bin'");
}

Checkpoint checkpoint_read(const std::string& base) {
  std::ifstream meta(base + ".meta");
  if (!meta) throw ConfigError("cannot open '" + base + ".meta'");
  Checkpoint cp;
  std::string line;
  bool saw_magic = false;
  while (std::getline(meta, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "stratus-checkpoint") {
      int version = 0;
      ls >> version;
      if (version != 1)
        throw ConfigError("checkpoint '" + base +
                          "': unsupported format version");
      saw_magic = true;
    } else if (key == "model") {
      ls >> cp.model_name;
    } else if (key == "n_fields") {
      ls >> cp.n_fields;
    } else if (key == "n_aux") {
      ls >> cp.n_aux;
    } else if (key == "n_inner") {
      ls >> cp.n_inner;
    } else if (key == "n_ghost") {
      ls >> cp.n_ghost;
    } else if (key == "time") {
      ls >> cp.time;
    } else if (key == "step") {
      ls >> cp.step;
    } else if (key == "state") {
      std::string n;
      while (ls >> n) cp.state_names.push_back(n);
    } else if (key == "aux") {
      std::string n;
      while (ls >> n) cp.aux_names.push_back(n);
    } else if (key == "endianness") {
      std::string e;
      ls >> e;
      if (e != "LE")
        throw ConfigError("checkpoint '" + base +
                          "': unsupported byte order '" + e + "'");
    } else {
      throw ConfigError("checkpoint '" + base + "': unknown metadata key '" +
                        key + "'");
    }
  }
  if (!saw_magic)
    throw ConfigError("checkpoint '" + base + "': missing format header");
  if (cp.n_fields <= 0 ||
      static_cast<std::size_t>(cp.n_fields) != cp.state_names.size() ||
      static_cast<std::size_t>(cp.n_aux) != cp.aux_names.size())
    throw ConfigError("checkpoint '" + base + "': inconsistent metadata");

  std::ifstream bin(base + ".bin", std::ios::binary | std::ios::ate);
  if (!bin) throw ConfigError("cannot open '" + base + ".bin'");
  const auto size = static_cast<std::size_t>(bin.tellg());
  const std::size_t stride = cp.n_inner + cp.n_ghost;
  const std::size_t nq = static_cast<std::size_t>(cp.n_fields) * stride;
  const std::size_t naux = static_cast<std::size_t>(cp.n_aux) * stride;
  if (size != (nq + naux) * sizeof(double))
    throw ConfigError("checkpoint '" + base + "': data size mismatch (got " +
                      std::to_string(size) + " bytes, expected " +
                      std::to_string((nq + naux) * sizeof(double)) + ")");
  bin.seekg(0);
  cp.q.resize(nq);
  cp.qaux.resize(naux);
  bin.read(reinterpret_cast<char*>(cp.q.data()),
           static_cast<std::streamsize>(nq * sizeof(double)));
  bin.read(reinterpret_cast<char*>(cp.qaux.data()),
           static_cast<std::streamsize>(naux * sizeof(double)));
  if (!bin) throw ConfigError("short read from '" + base + ".bin'");
  return cp;
}

}  // namespace stratus
