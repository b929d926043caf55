// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The Stratus Authors

#include "stratus/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace stratus {

namespace {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

// Signed area of a polygon (positive for counter-clockwise node order).
double polygon_signed_area(const std::vector<std::int32_t>& loop,
                           const std::vector<std::array<double, 2>>& nodes) {
  double twice = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = nodes[static_cast<std::size_t>(loop[i])];
    const auto& b = nodes[static_cast<std::size_t>(loop[(i + 1) % n])];
    twice += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * twice;
}

std::array<double, 2> polygon_centroid(
    const std::vector<std::int32_t>& loop,
    const std::vector<std::array<double, 2>>& nodes, double signed_area) {
  double cx = 0.0, cy = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = nodes[static_cast<std::size_t>(loop[i])];
    const auto& b = nodes[static_cast<std::size_t>(loop[(i + 1) % n])];
    const double w = a[0] * b[1] - b[0] * a[1];
    cx += (a[0] + b[0]) * w;
    cy += (a[1] + b[1]) * w;
  }
  const double s = 1.0 / (6.0 * signed_area);
  return {cx * s, cy * s};
}

// Appends the ghost cell owned by `face_id`; the ghost centroid is the
// inner centroid mirrored across the face and the volume is copied.
void add_ghost(Mesh& mesh, std::size_t face_id) {
  Face& f = mesh.faces[face_id];
  const std::int32_t inner = f.left;
  const auto& c = mesh.centroid[static_cast<std::size_t>(inner)];
  const auto& m = f.midpoint;
  const double along =
      (m[0] - c[0]) * f.normal[0] + (m[1] - c[1]) * f.normal[1];
  const std::int32_t ghost = static_cast<std::int32_t>(mesh.n_total());
  mesh.centroid.push_back({c[0] + 2.0 * along * f.normal[0],
                           c[1] + 2.0 * along * f.normal[1]});
  mesh.volume.push_back(mesh.volume[static_cast<std::size_t>(inner)]);
  mesh.ghost_owner.push_back(inner);
  mesh.ghost_face.push_back(static_cast<std::int32_t>(face_id));
  f.right = ghost;
  ++mesh.n_ghost;
}

int tag_index(Mesh& mesh, const std::string& name) {
  for (std::size_t i = 0; i < mesh.tag_names.size(); ++i)
    if (mesh.tag_names[i] == name) return static_cast<int>(i);
  mesh.tag_names.push_back(name);
  return static_cast<int>(mesh.tag_names.size() - 1);
}

struct MshElement {
  int type = 0;
  int physical = 0;
  std::vector<std::int32_t> nodes;  // indices into the node array
};

[[noreturn]] void msh_error(const std::string& what) {
  throw ConfigError("msh: " + what);
}

long parse_count(const std::string& line) {
  std::istringstream ls(line);
  long count = 0;
  if (!(ls >> count) || count < 0) msh_error("malformed section count");
  return count;
}

}  // namespace

Mesh uniform_interval(double a, double b, std::size_t n,
                      const std::string& left_tag,
                      const std::string& right_tag) {
  if (!(a < b)) throw ConfigError("interval mesh: requires a < b");
  if (n < 1) throw ConfigError("interval mesh: requires n >= 1");

  Mesh mesh;
  mesh.dimension = 1;
  mesh.n_inner = n;
  const double dx = (b - a) / static_cast<double>(n);

  mesh.nodes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    mesh.nodes[i] = {a + static_cast<double>(i) * dx, 0.0};
  mesh.centroid.resize(n);
  mesh.volume.assign(n, dx);
  mesh.cell_nodes.resize(n);
  mesh.cell_faces.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mesh.centroid[i] = {a + (static_cast<double>(i) + 0.5) * dx, 0.0};
    mesh.cell_nodes[i] = {static_cast<std::int32_t>(i),
                          static_cast<std::int32_t>(i + 1)};
  }

  // Interior faces between cells i and i+1, normal +x (left to right).
  for (std::size_t i = 0; i + 1 < n; ++i) {
    Face f;
    f.area = 1.0;
    f.normal = {1.0, 0.0};
    f.midpoint = mesh.nodes[i + 1];
    f.left = static_cast<std::int32_t>(i);
    f.right = static_cast<std::int32_t>(i + 1);
    mesh.faces.push_back(f);
    mesh.cell_faces[i].push_back(static_cast<std::int32_t>(mesh.faces.size() - 1));
    mesh.cell_faces[i + 1].push_back(
        static_cast<std::int32_t>(mesh.faces.size() - 1));
  }

  // Boundary faces with outward normals and mirrored ghosts.
  const auto add_boundary = [&](std::size_t cell, std::size_t node,
                                double nx, const std::string& tag) {
    Face f;
    f.area = 1.0;
    f.normal = {nx, 0.0};
    f.midpoint = mesh.nodes[node];
    f.left = static_cast<std::int32_t>(cell);
    f.tag = tag_index(mesh, tag);
    mesh.faces.push_back(f);
    const std::size_t id = mesh.faces.size() - 1;
    mesh.cell_faces[cell].push_back(static_cast<std::int32_t>(id));
    mesh.tag_faces[tag].push_back(id);
    add_ghost(mesh, id);
  };
  add_boundary(0, 0, -1.0, left_tag);
  add_boundary(n - 1, n, 1.0, right_tag);
  return mesh;
}

Mesh parse_msh(const std::string& path) {
  std::ifstream in(path);
  if (!in) msh_error("cannot open file: " + path);

  std::string line;
  std::map<int, std::pair<int, std::string>> physical;  // id -> (dim, name)
  std::map<long long, std::int32_t> node_index;
  std::vector<std::array<double, 2>> nodes;
  std::vector<MshElement> elements;
  bool saw_format = false;

  const auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      while (!out.empty() && (out.back() == '\r' || out.back() == '\n'))
        out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  };

  while (next_line(line)) {
    if (line == "$MeshFormat") {
      if (!next_line(line)) msh_error("truncated $MeshFormat section");
      std::istringstream ls(line);
      std::string version;
      int file_type = 0, data_size = 0;
      if (!(ls >> version >> file_type >> data_size))
        msh_error("malformed $MeshFormat header");
      if (version != "2.2")
        msh_error("unsupported MSH version " + version +
                  " (only 2.2 ASCII is supported)");
      if (file_type != 0) msh_error("binary MSH files are not supported");
      if (!next_line(line) || line != "$EndMeshFormat")
        msh_error("missing $EndMeshFormat");
      saw_format = true;
    } else if (line == "$PhysicalNames") {
      if (!next_line(line)) msh_error("truncated $PhysicalNames section");
      const long count = parse_count(line);
      for (long i = 0; i < count; ++i) {
        if (!next_line(line)) msh_error("truncated $PhysicalNames section");
        std::istringstream ls(line);
        int dim = 0, id = 0;
        if (!(ls >> dim >> id)) msh_error("malformed physical name entry");
        const auto first = line.find('"');
        const auto last = line.rfind('"');
        if (first == std::string::npos || last <= first)
          msh_error("physical name must be quoted");
        physical[id] = {dim, line.substr(first + 1, last - first - 1)};
      }
      if (!next_line(line) || line != "$EndPhysicalNames")
        msh_error("missing $EndPhysicalNames");
    } else if (line == "$Nodes") {
      if (!next_line(line)) msh_error("truncated $Nodes section");
      const long count = parse_count(line);
      nodes.reserve(static_cast<std::size_t>(count));
      for (long i = 0; i < count; ++i) {
        if (!next_line(line)) msh_error("truncated $Nodes section");
        std::istringstream ls(line);
        long long id = 0;
        double x = 0.0, y = 0.0, z = 0.0;
        if (!(ls >> id >> x >> y >> z)) msh_error("malformed node entry");
        node_index[id] = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({x, y});
      }
      if (!next_line(line) || line != "$EndNodes")
        msh_error("missing $EndNodes");
    } else if (line == "$Elements") {
      if (!next_line(line)) msh_error("truncated $Elements section");
      const long count = parse_count(line);
      elements.reserve(static_cast<std::size_t>(count));
      for (long i = 0; i < count; ++i) {
        if (!next_line(line)) msh_error("truncated $Elements section");
        std::istringstream ls(line);
        long long id = 0;
        int type = 0, ntags = 0;
        if (!(ls >> id >> type >> ntags)) msh_error("malformed element entry");
        MshElement el;
        el.type = type;
        for (int t = 0; t < ntags; ++t) {
          int tag = 0;
          if (!(ls >> tag)) msh_error("malformed element tags");
          if (t == 0) el.physical = tag;
        }
        int n_nodes = 0;
        switch (type) {
          case 1: n_nodes = 2; break;   // line
          case 2: n_nodes = 3; break;   // triangle
          case 3: n_nodes = 4; break;   // quadrilateral
          case 15: n_nodes = 1; break;  // point
          default:
            msh_error("unsupported element type " + std::to_string(type));
        }
        for (int k = 0; k < n_nodes; ++k) {
          long long nid = 0;
          if (!(ls >> nid)) msh_error("element with missing node ids");
          const auto it = node_index.find(nid);
          if (it == node_index.end())
            msh_error("element references unknown node " + std::to_string(nid));
          el.nodes.push_back(it->second);
        }
        elements.push_back(std::move(el));
      }
      if (!next_line(line) || line != "$EndElements")
        msh_error("missing $EndElements");
    } else if (!line.empty() && line[0] == '$') {
      // Skip unknown sections (e.g. $Comments) up to their end marker.
      const std::string end = "$End" + line.substr(1);
      while (next_line(line) && line != end) {
      }
    }
  }
  if (!saw_format) msh_error("missing $MeshFormat section");
  if (nodes.empty()) msh_error("missing $Nodes section");
  if (elements.empty()) msh_error("missing $Elements section");

  bool any_2d = false, any_line = false;
  for (const MshElement& el : elements) {
    any_2d = any_2d || el.type == 2 || el.type == 3;
    any_line = any_line || el.type == 1;
  }

  Mesh mesh;
  mesh.nodes = nodes;

  const auto physical_name = [&](int id, int want_dim) -> std::string {
    const auto it = physical.find(id);
    if (it == physical.end())
      msh_error("boundary element references physical id " +
                std::to_string(id) + " with no $PhysicalNames entry");
    if (it->second.first != want_dim)
      msh_error("physical name \"" + it->second.second +
                "\" has dimension " + std::to_string(it->second.first) +
                ", expected " + std::to_string(want_dim));
    return it->second.second;
  };

  if (any_2d) {
    mesh.dimension = 2;
    // Boundary edges: sorted node pair -> physical id.
    std::map<std::pair<std::int32_t, std::int32_t>, int> boundary_tag;
    for (const MshElement& el : elements) {
      if (el.type != 1) continue;
      if (el.physical == 0) msh_error("boundary line without a physical tag");
      boundary_tag[{std::min(el.nodes[0], el.nodes[1]),
                    std::max(el.nodes[0], el.nodes[1])}] = el.physical;
    }

    // Cells, oriented counter-clockwise.
    for (const MshElement& el : elements) {
      if (el.type != 2 && el.type != 3) continue;
      std::vector<std::int32_t> loop = el.nodes;
      double s = polygon_signed_area(loop, nodes);
      if (s < 0.0) {
        std::reverse(loop.begin(), loop.end());
        s = -s;
      }
      if (!(s > 0.0)) msh_error("degenerate cell with zero area");
      mesh.centroid.push_back(polygon_centroid(loop, nodes, s));
      mesh.volume.push_back(s);
      mesh.cell_nodes.push_back(std::move(loop));
    }
    mesh.n_inner = mesh.cell_nodes.size();
    mesh.cell_faces.resize(mesh.n_inner);

    // Edge -> owning cells, with the edge orientation of the first owner
    // (counter-clockwise traversal makes (b - a) rotated by -90 degrees the
    // outward normal of that owner).
    struct EdgeUse {
      std::vector<std::int32_t> cells;
      std::int32_t a = 0, b = 0;  // orientation within the first owner
    };
    std::map<std::pair<std::int32_t, std::int32_t>, EdgeUse> edges;
    for (std::size_t c = 0; c < mesh.n_inner; ++c) {
      const auto& loop = mesh.cell_nodes[c];
      for (std::size_t k = 0; k < loop.size(); ++k) {
        const std::int32_t a = loop[k];
        const std::int32_t b = loop[(k + 1) % loop.size()];
        EdgeUse& use = edges[{std::min(a, b), std::max(a, b)}];
        if (use.cells.empty()) {
          use.a = a;
          use.b = b;
        }
        use.cells.push_back(static_cast<std::int32_t>(c));
      }
    }

    for (auto& [key, use] : edges) {
      if (use.cells.size() > 2)
        msh_error("non-manifold edge shared by " +
                  std::to_string(use.cells.size()) + " cells");
      const auto& pa = nodes[static_cast<std::size_t>(use.a)];
      const auto& pb = nodes[static_cast<std::size_t>(use.b)];
      const double ex = pb[0] - pa[0];
      const double ey = pb[1] - pa[1];
      const double len = std::sqrt(ex * ex + ey * ey);
      if (!(len > 0.0)) msh_error("degenerate zero-length edge");
      Face f;
      f.area = len;
      f.normal = {ey / len, -ex / len};  // outward from the first owner
      f.midpoint = {0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])};
      f.left = use.cells[0];
      if (use.cells.size() == 2) {
        f.right = use.cells[1];
        mesh.faces.push_back(f);
      } else {
        const auto bt = boundary_tag.find(key);
        if (bt == boundary_tag.end())
          msh_error("boundary face without a physical name (nodes " +
                    std::to_string(key.first) + "-" +
                    std::to_string(key.second) + ")");
        const std::string name = physical_name(bt->second, 1);
        f.tag = tag_index(mesh, name);
        mesh.faces.push_back(f);
        const std::size_t id = mesh.faces.size() - 1;
        mesh.tag_faces[name].push_back(id);
        add_ghost(mesh, id);
      }
      const std::size_t id = mesh.faces.size() - 1;
      for (const std::int32_t c : use.cells)
        mesh.cell_faces[static_cast<std::size_t>(c)].push_back(
            static_cast<std::int32_t>(id));
    }
  } else if (any_line) {
    mesh.dimension = 1;
    // Point tags: node -> physical id.
    std::map<std::int32_t, int> point_tag;
    for (const MshElement& el : elements) {
      if (el.type != 15) continue;
      if (el.physical == 0) msh_error("boundary point without a physical tag");
      point_tag[el.nodes[0]] = el.physical;
    }

    for (const MshElement& el : elements) {
      if (el.type != 1) continue;
      const auto& pa = nodes[static_cast<std::size_t>(el.nodes[0])];
      const auto& pb = nodes[static_cast<std::size_t>(el.nodes[1])];
      const double len = std::abs(pb[0] - pa[0]);
      if (!(len > 0.0)) msh_error("degenerate zero-length cell");
      mesh.centroid.push_back({0.5 * (pa[0] + pb[0]), 0.0});
      mesh.volume.push_back(len);
      mesh.cell_nodes.push_back({el.nodes[0], el.nodes[1]});
    }
    mesh.n_inner = mesh.cell_nodes.size();
    mesh.cell_faces.resize(mesh.n_inner);

    std::map<std::int32_t, std::vector<std::int32_t>> node_cells;
    for (std::size_t c = 0; c < mesh.n_inner; ++c)
      for (const std::int32_t nd : mesh.cell_nodes[c])
        node_cells[nd].push_back(static_cast<std::int32_t>(c));

    for (const auto& [nd, cells] : node_cells) {
      if (cells.size() > 2)
        msh_error("non-manifold point shared by " +
                  std::to_string(cells.size()) + " cells");
      const double xm = nodes[static_cast<std::size_t>(nd)][0];
      Face f;
      f.area = 1.0;
      f.midpoint = {xm, 0.0};
      if (cells.size() == 2) {
        // Orient left to right along +x.
        std::int32_t lo = cells[0], hi = cells[1];
        if (mesh.centroid[static_cast<std::size_t>(lo)][0] >
            mesh.centroid[static_cast<std::size_t>(hi)][0])
          std::swap(lo, hi);
        f.normal = {1.0, 0.0};
        f.left = lo;
        f.right = hi;
        mesh.faces.push_back(f);
      } else {
        const auto pt = point_tag.find(nd);
        if (pt == point_tag.end())
          msh_error("boundary face without a physical name (node " +
                    std::to_string(nd) + ")");
        const std::int32_t c = cells[0];
        f.left = c;
        f.normal = {
            xm > mesh.centroid[static_cast<std::size_t>(c)][0] ? 1.0 : -1.0,
            0.0};
        const std::string name = physical_name(pt->second, 0);
        f.tag = tag_index(mesh, name);
        mesh.faces.push_back(f);
        const std::size_t id = mesh.faces.size() - 1;
        mesh.tag_faces[name].push_back(id);
        add_ghost(mesh, id);
      }
      const std::size_t id = mesh.faces.size() - 1;
      for (const std::int32_t c : cells)
        mesh.cell_faces[static_cast<std::size_t>(c)].push_back(
            static_cast<std::int32_t>(id));
    }
  } else {
    msh_error("no cell elements (need triangles/quadrilaterals or lines)");
  }
  return mesh;
}

namespace {

// Monomial multi-indices (kx, ky) with 1 <= kx + ky <= degree in graded
// order; 1D meshes only use kx.
std::vector<std::array<int, 2>> taylor_indices(int dimension, int degree) {
  std::vector<std::array<int, 2>> out;
  for (int order = 1; order <= degree; ++order) {
    if (dimension == 1) {
      out.push_back({order, 0});
    } else {
      for (int kx = order; kx >= 0; --kx) out.push_back({kx, order - kx});
    }
  }
  return out;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
  return f;
}

// Solves the square system G x = B for every column of B in place using
// Gaussian elimination with partial pivoting.  G is m x m, B is m x n.
void solve_dense(std::vector<double>& G, std::vector<double>& B,
                 std::size_t m, std::size_t n) {
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::abs(G[r * m + col]) > std::abs(G[piv * m + col])) piv = r;
    if (std::abs(G[piv * m + col]) < 1e-300)
      throw ConfigError(
          "stencil construction: singular least-squares system (mesh too "
          "small or degenerate for the requested degree)");
    if (piv != col) {
      for (std::size_t c = 0; c < m; ++c)
        std::swap(G[piv * m + c], G[col * m + c]);
      for (std::size_t c = 0; c < n; ++c)
        std::swap(B[piv * n + c], B[col * n + c]);
    }
    const double inv = 1.0 / G[col * m + col];
    for (std::size_t r = col + 1; r < m; ++r) {
      const double factor = G[r * m + col] * inv;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < m; ++c) G[r * m + c] -= factor * G[col * m + c];
      for (std::size_t c = 0; c < n; ++c) B[r * n + c] -= factor * B[col * n + c];
    }
  }
  for (std::size_t col = m; col-- > 0;) {
    const double inv = 1.0 / G[col * m + col];
    for (std::size_t c = 0; c < n; ++c) {
      double v = B[col * n + c];
      for (std::size_t k = col + 1; k < m; ++k)
        v -= G[col * m + k] * B[k * n + c];
      B[col * n + c] = v * inv;
    }
  }
}

}  // namespace

LsqStencils build_lsq_stencils(const Mesh& mesh, int degree) {
  if (degree < 1) throw ConfigError("stencil construction: degree must be >= 1");

  LsqStencils st;
  st.degree = degree;
  st.indices = taylor_indices(mesh.dimension, degree);
  const std::size_t n_mono = st.indices.size();
  const std::size_t target = n_mono + 1;
  st.cells.resize(mesh.n_inner);

  for (std::size_t i = 0; i < mesh.n_inner; ++i) {
    // Seed with face neighbors; a boundary cell also takes its own face
    // ghosts.  Ring growth then walks inner cells only.
    std::set<std::int32_t> inner_set;
    std::vector<std::int32_t> ghosts;
    std::vector<std::int32_t> frontier;
    const auto visit_neighbors = [&](std::int32_t cell) {
      for (const std::int32_t fid : mesh.cell_faces[static_cast<std::size_t>(cell)]) {
        const Face& f = mesh.faces[static_cast<std::size_t>(fid)];
        const std::int32_t other =
            f.left == cell ? f.right : f.left;
        if (other < 0) continue;
        if (static_cast<std::size_t>(other) >= mesh.n_inner) continue;
        if (other == static_cast<std::int32_t>(i)) continue;
        if (inner_set.insert(other).second) frontier.push_back(other);
      }
    };
    visit_neighbors(static_cast<std::int32_t>(i));
    for (const std::int32_t fid : mesh.cell_faces[i]) {
      const Face& f = mesh.faces[static_cast<std::size_t>(fid)];
      if (f.tag >= 0) ghosts.push_back(f.right);
    }
    while (inner_set.size() + ghosts.size() < target) {
      const std::vector<std::int32_t> ring = std::move(frontier);
      frontier.clear();
      for (const std::int32_t cell : ring) visit_neighbors(cell);
      if (frontier.empty())
        throw ConfigError(
            "stencil construction: mesh too small for degree " +
            std::to_string(degree) + " (needs " + std::to_string(target) +
            " neighbors)");
    }

    CellStencil& cs = st.cells[i];
    cs.neighbors.assign(inner_set.begin(), inner_set.end());
    std::sort(ghosts.begin(), ghosts.end());
    cs.neighbors.insert(cs.neighbors.end(), ghosts.begin(), ghosts.end());
    const std::size_t n = cs.neighbors.size();

    // Weighted Taylor fit about the cell centroid.  Sample points are
    // neighbor centroids, except ghosts which are sampled at their
    // boundary face midpoint (the location of prescribed boundary data).
    const auto& ci = mesh.centroid[i];
    std::vector<double> A(n * n_mono);
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) {
      const std::int32_t nbr = cs.neighbors[j];
      Vec2 d;
      if (static_cast<std::size_t>(nbr) >= mesh.n_inner) {
        const std::int32_t fid =
            mesh.ghost_face[static_cast<std::size_t>(nbr) - mesh.n_inner];
        const auto& m = mesh.faces[static_cast<std::size_t>(fid)].midpoint;
        d = {m[0] - ci[0], m[1] - ci[1]};
      } else {
        const auto& cn = mesh.centroid[static_cast<std::size_t>(nbr)];
        d = {cn[0] - ci[0], cn[1] - ci[1]};
      }
      w[j] = 1.0 / std::sqrt(dot(d, d));
      for (std::size_t q = 0; q < n_mono; ++q) {
        const int kx = st.indices[q][0];
        const int ky = st.indices[q][1];
        A[j * n_mono + q] = ipow(d.x, kx) * ipow(d.y, ky) /
                            (factorial(kx) * factorial(ky));
      }
    }

    // Normal equations G = A^T W^2 A; pseudo-inverse P = G^{-1} A^T W^2.
    std::vector<double> G(n_mono * n_mono, 0.0);
    std::vector<double> B(n_mono * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w2 = w[j] * w[j];
      for (std::size_t q = 0; q < n_mono; ++q) {
        for (std::size_t r = 0; r < n_mono; ++r)
          G[q * n_mono + r] += w2 * A[j * n_mono + q] * A[j * n_mono + r];
        B[q * n + j] = w2 * A[j * n_mono + q];
      }
    }
    solve_dense(G, B, n_mono, n);
    cs.pinv = std::move(B);
  }
  return st;
}

std::vector<double> compute_derivatives(
    const Mesh& mesh, const LsqStencils& stencils,
    const std::vector<double>& field,
    const std::vector<std::array<int, 2>>& indices) {
  if (field.size() != mesh.n_total())
    throw ConfigError("derivative reconstruction: field length " +
                      std::to_string(field.size()) + " != cell count " +
                      std::to_string(mesh.n_total()));
  std::vector<std::size_t> rows(indices.size());
  for (std::size_t q = 0; q < indices.size(); ++q) {
    const auto it = std::find(stencils.indices.begin(), stencils.indices.end(),
                              indices[q]);
    if (it == stencils.indices.end())
      throw ConfigError("derivative reconstruction: multi-index (" +
                        std::to_string(indices[q][0]) + "," +
                        std::to_string(indices[q][1]) +
                        ") exceeds the stencil degree " +
                        std::to_string(stencils.degree));
    rows[q] = static_cast<std::size_t>(it - stencils.indices.begin());
  }

  const std::size_t nq = indices.size();
  std::vector<double> out(mesh.n_total() * nq, 0.0);
  for (std::size_t i = 0; i < mesh.n_inner; ++i) {
    const CellStencil& cs = stencils.cells[i];
    const std::size_t n = cs.neighbors.size();
    for (std::size_t j = 0; j < n; ++j) {
      const double df =
          field[static_cast<std::size_t>(cs.neighbors[j])] - field[i];
      for (std::size_t q = 0; q < nq; ++q)
        out[i * nq + q] += cs.pinv[rows[q] * n + j] * df;
    }
  }
  for (std::size_t g = 0; g < mesh.n_ghost; ++g) {
    const std::size_t owner =
        static_cast<std::size_t>(mesh.ghost_owner[g]);
    for (std::size_t q = 0; q < nq; ++q)
      out[(mesh.n_inner + g) * nq + q] = out[owner * nq + q];
  }
  return out;
}

}  // namespace stratus
