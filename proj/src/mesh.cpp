#include "waveq/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace waveq {

namespace {

double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
}

/// Orient elements CCW, build the face table with adjacency, classify
/// boundary faces through `rule`, and fill the vertex lookup tables.
void finalize_mesh(Mesh& mesh, const BoundaryRule& rule) {
  const int nv = mesh.n_vertices();
  double coord_scale = 0.0;
  for (const Vec2& p : mesh.vertices) coord_scale = std::max(coord_scale, p.lpNorm<Eigen::Infinity>());
  if (coord_scale == 0.0) coord_scale = 1.0;

  for (int k = 0; k < mesh.n_elements(); ++k) {
    Element& el = mesh.elements[k];
    for (int v : el.v) {
      if (v < 0 || v >= nv) throw std::runtime_error("mesh: element " + std::to_string(k) + " has vertex id out of range");
    }
    if (el.v[0] == el.v[1] || el.v[1] == el.v[2] || el.v[0] == el.v[2]) {
      throw std::runtime_error("mesh: element " + std::to_string(k) + " repeats a vertex");
    }
    double s2 = signed_area2(mesh.vertices[el.v[0]], mesh.vertices[el.v[1]], mesh.vertices[el.v[2]]);
    if (s2 < 0.0) {
      std::swap(el.v[1], el.v[2]);
      s2 = -s2;
    }
    if (s2 <= 1e-14 * coord_scale * coord_scale) {
      throw std::runtime_error("mesh: element " + std::to_string(k) + " is degenerate (zero area)");
    }
  }

  std::map<std::pair<int, int>, int> face_of;
  mesh.faces.clear();
  for (int k = 0; k < mesh.n_elements(); ++k) {
    Element& el = mesh.elements[k];
    for (int e = 0; e < 3; ++e) {
      // Edge e is opposite vertex e.
      int a = el.v[(e + 1) % 3], b = el.v[(e + 2) % 3];
      auto key = std::minmax(a, b);
      auto [it, inserted] = face_of.try_emplace(key, static_cast<int>(mesh.faces.size()));
      if (inserted) {
        Face f;
        f.v0 = key.first;
        f.v1 = key.second;
        f.elem[0] = k;
        mesh.faces.push_back(f);
      } else {
        Face& f = mesh.faces[it->second];
        if (f.elem[1] >= 0) {
          throw std::runtime_error("mesh: edge (" + std::to_string(a) + "," + std::to_string(b) +
                                   ") is shared by more than two elements");
        }
        f.elem[1] = k;
      }
      el.face[e] = it->second;
    }
  }

  mesh.boundary_faces.clear();
  mesh.vertex_on_boundary.assign(nv, 0);
  mesh.vertex_on_dirichlet.assign(nv, 0);
  for (int fi = 0; fi < static_cast<int>(mesh.faces.size()); ++fi) {
    Face& f = mesh.faces[fi];
    if (!f.boundary()) continue;
    Vec2 mid = 0.5 * (mesh.vertices[f.v0] + mesh.vertices[f.v1]);
    f.kind = static_cast<int>(rule(mid));
    mesh.boundary_faces.push_back(fi);
    mesh.vertex_on_boundary[f.v0] = 1;
    mesh.vertex_on_boundary[f.v1] = 1;
    if (f.kind == static_cast<int>(BoundaryKind::Dirichlet)) {
      mesh.vertex_on_dirichlet[f.v0] = 1;
      mesh.vertex_on_dirichlet[f.v1] = 1;
    }
  }

  mesh.vertex_elements.assign(nv, {});
  for (int k = 0; k < mesh.n_elements(); ++k) {
    for (int v : mesh.elements[k].v) mesh.vertex_elements[v].push_back(k);
  }
  for (int v = 0; v < nv; ++v) {
    if (mesh.vertex_elements[v].empty()) {
      throw std::runtime_error("mesh: vertex " + std::to_string(v) + " belongs to no element");
    }
  }
}

}  // namespace

Mesh generate_square(double lo, double hi, int n, GridPattern pattern, const BoundaryRule& rule) {
  if (n < 1) throw std::invalid_argument("generate_square: n must be >= 1");
  if (!(hi > lo)) throw std::invalid_argument("generate_square: need hi > lo");

  Mesh mesh;
  const double dx = (hi - lo) / n;
  auto grid_id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) mesh.vertices.emplace_back(lo + i * dx, lo + j * dx);
  }

  auto add_tri = [&mesh](int a, int b, int c) {
    Element el;
    el.v = {a, b, c};
    mesh.elements.push_back(el);
  };

  if (pattern == GridPattern::Diagonal) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        int a = grid_id(i, j), b = grid_id(i + 1, j), c = grid_id(i + 1, j + 1), d = grid_id(i, j + 1);
        add_tri(a, b, c);
        add_tri(a, c, d);
      }
    }
  } else {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        mesh.vertices.emplace_back(lo + (i + 0.5) * dx, lo + (j + 0.5) * dx);
        int m = static_cast<int>(mesh.vertices.size()) - 1;
        int a = grid_id(i, j), b = grid_id(i + 1, j), c = grid_id(i + 1, j + 1), d = grid_id(i, j + 1);
        add_tri(a, b, m);
        add_tri(b, c, m);
        add_tri(c, d, m);
        add_tri(d, a, m);
      }
    }
  }

  finalize_mesh(mesh, rule);
  return mesh;
}

namespace {

/// Next content line (comments after '#' stripped, blank lines skipped).
bool next_data_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] void parse_fail(const std::string& path, int lineno, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

Mesh read_mesh(const std::string& node_path, const std::string& ele_path, const BoundaryRule& rule) {
  Mesh mesh;

  std::ifstream nodes(node_path);
  if (!nodes) throw std::runtime_error("read_mesh: cannot open " + node_path);
  std::string line;
  int lineno = 0;
  if (!next_data_line(nodes, line, lineno)) parse_fail(node_path, lineno, "missing header");
  long np = 0, dim = 0, zero = 0, nattr = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> np >> dim >> zero >> nattr)) parse_fail(node_path, lineno, "malformed node header");
    if (dim != 2) parse_fail(node_path, lineno, "only 2D meshes are supported");
    if (zero != 0) parse_fail(node_path, lineno, "unexpected third header field (must be 0)");
    if (nattr != 0 && nattr != 1) parse_fail(node_path, lineno, "node attribute count must be 0 or 1");
    if (np < 3) parse_fail(node_path, lineno, "need at least 3 points");
  }
  mesh.vertices.assign(np, Vec2::Zero());
  std::vector<char> seen(np, 0);
  long base = -1;
  for (long r = 0; r < np; ++r) {
    if (!next_data_line(nodes, line, lineno)) parse_fail(node_path, lineno, "unexpected end of file");
    std::istringstream ss(line);
    long id;
    double x, y, attr;
    if (!(ss >> id >> x >> y)) parse_fail(node_path, lineno, "malformed node row");
    if (nattr == 1 && !(ss >> attr)) parse_fail(node_path, lineno, "missing node attribute");
    if (base < 0) {
      if (id != 0 && id != 1) parse_fail(node_path, lineno, "ids must be 0- or 1-based");
      base = id;
    }
    long idx = id - base;
    if (idx < 0 || idx >= np) parse_fail(node_path, lineno, "node id out of range");
    if (seen[idx]) parse_fail(node_path, lineno, "duplicate node id");
    seen[idx] = 1;
    mesh.vertices[idx] = Vec2(x, y);
  }

  std::ifstream eles(ele_path);
  if (!eles) throw std::runtime_error("read_mesh: cannot open " + ele_path);
  lineno = 0;
  if (!next_data_line(eles, line, lineno)) parse_fail(ele_path, lineno, "missing header");
  long ne = 0, npe = 0, eattr = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> ne >> npe >> eattr)) parse_fail(ele_path, lineno, "malformed element header");
    if (npe != 3) parse_fail(ele_path, lineno, "only 3-node triangles are supported");
    if (eattr != 0 && eattr != 1) parse_fail(ele_path, lineno, "element attribute count must be 0 or 1");
    if (ne < 1) parse_fail(ele_path, lineno, "need at least one element");
  }
  mesh.elements.assign(ne, Element{});
  std::vector<char> eseen(ne, 0);
  long ebase = -1;
  for (long r = 0; r < ne; ++r) {
    if (!next_data_line(eles, line, lineno)) parse_fail(ele_path, lineno, "unexpected end of file");
    std::istringstream ss(line);
    long id, a, b, c;
    double attr = 0.0;
    if (!(ss >> id >> a >> b >> c)) parse_fail(ele_path, lineno, "malformed element row");
    if (eattr == 1 && !(ss >> attr)) parse_fail(ele_path, lineno, "missing element attribute");
    if (ebase < 0) {
      if (id != 0 && id != 1) parse_fail(ele_path, lineno, "ids must be 0- or 1-based");
      ebase = id;
    }
    long idx = id - ebase;
    if (idx < 0 || idx >= ne) parse_fail(ele_path, lineno, "element id out of range");
    if (eseen[idx]) parse_fail(ele_path, lineno, "duplicate element id");
    eseen[idx] = 1;
    Element& el = mesh.elements[idx];
    // Vertex ids share the node file's base.
    el.v = {static_cast<int>(a - base), static_cast<int>(b - base), static_cast<int>(c - base)};
    el.region = static_cast<int>(attr);
  }

  finalize_mesh(mesh, rule);
  return mesh;
}

std::vector<Patch> build_patches(const Mesh& mesh) {
  std::vector<Patch> patches(mesh.n_vertices());
  std::vector<int> count(mesh.faces.size(), 0);
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    Patch& p = patches[v];
    p.vertex = v;
    p.elements = mesh.vertex_elements[v];

    for (int k : p.elements) {
      for (int f : mesh.elements[k].face) ++count[f];
    }
    for (int k : p.elements) {
      for (int f : mesh.elements[k].face) {
        if (count[f] == 0) continue;  // already handled via a previous element
        if (count[f] == 2) {
          p.interior_faces.push_back(f);
        } else if (!mesh.faces[f].boundary()) {
          p.rim_faces.push_back(f);
        } else if (mesh.faces[f].kind == static_cast<int>(BoundaryKind::Dirichlet)) {
          p.dirichlet_faces.push_back(f);
        } else {
          p.absorbing_faces.push_back(f);
        }
        count[f] = 0;
      }
    }

    if (!mesh.vertex_on_boundary[v]) {
      p.cls = PatchClass::Interior;
    } else if (mesh.vertex_on_dirichlet[v]) {
      p.cls = PatchClass::TouchesDirichlet;
    } else {
      p.cls = PatchClass::BoundaryNoDirichlet;
    }
  }
  return patches;
}

ElementGeometry element_geometry(const Mesh& mesh, int element) {
  const Element& el = mesh.elements.at(element);
  const Vec2& p0 = mesh.vertices[el.v[0]];
  const Vec2& p1 = mesh.vertices[el.v[1]];
  const Vec2& p2 = mesh.vertices[el.v[2]];

  ElementGeometry g;
  g.B.col(0) = p1 - p0;
  g.B.col(1) = p2 - p0;
  g.b = p0;
  g.det = g.B(0, 0) * g.B(1, 1) - g.B(0, 1) * g.B(1, 0);
  g.Binv = g.B.inverse();
  g.area = 0.5 * g.det;

  const std::array<const Vec2*, 3> p = {&p0, &p1, &p2};
  double perim = 0.0;
  for (int e = 0; e < 3; ++e) {
    const Vec2& a = *p[(e + 1) % 3];
    const Vec2& b = *p[(e + 2) % 3];
    Vec2 t = b - a;
    g.edge_len[e] = t.norm();
    perim += g.edge_len[e];
    g.h = std::max(g.h, g.edge_len[e]);
    Vec2 n(t.y(), -t.x());
    n /= g.edge_len[e];
    // Make the normal point away from the opposite vertex.
    if (n.dot(*p[e] - a) > 0.0) n = -n;
    g.normal[e] = n;
  }
  g.rho = 4.0 * g.area / perim;  // 2 * area / semiperimeter
  return g;
}

}  // namespace waveq
