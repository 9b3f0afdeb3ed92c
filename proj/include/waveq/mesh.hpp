#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace waveq {

using Vec2 = Eigen::Vector2d;

enum class BoundaryKind { Dirichlet, Absorbing };
enum class GridPattern { Diagonal, Crisscross };

/// Mesh edge. Vertices are stored with v0 < v1; the direction v0 -> v1 and
/// the normal n = (t_y, -t_x) obtained by rotating the unit tangent t are
/// shared by both adjacent elements, so degrees of freedom attached to a
/// face need no per-element orientation sign.
struct Face {
  int v0 = -1;
  int v1 = -1;
  std::array<int, 2> elem = {-1, -1};  ///< adjacent elements; elem[1] < 0 on the boundary
  int kind = -1;                       ///< BoundaryKind as int on the boundary, -1 inside

  bool boundary() const { return elem[1] < 0; }
};

struct Element {
  std::array<int, 3> v;     ///< vertex ids, counter-clockwise
  std::array<int, 3> face;  ///< face[k] is the edge opposite vertex k
  int region = 0;           ///< material region tag
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<Element> elements;
  std::vector<Face> faces;
  std::vector<int> boundary_faces;          ///< ids of faces on the domain boundary
  std::vector<std::vector<int>> vertex_elements;  ///< elements containing each vertex
  std::vector<char> vertex_on_boundary;           ///< 1 if the vertex lies on the domain boundary
  std::vector<char> vertex_on_dirichlet;          ///< 1 if the vertex is an endpoint of a Dirichlet face

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
};

/// Per-element geometric quantities for the affine map x = B x_ref + b from
/// the reference triangle (0,0), (1,0), (0,1).
struct ElementGeometry {
  double area = 0.0;
  double h = 0.0;    ///< longest edge
  double rho = 0.0;  ///< diameter of the inscribed circle, 2*area/semiperimeter
  Eigen::Matrix2d B;
  Eigen::Matrix2d Binv;
  Vec2 b;
  double det = 0.0;  ///< det(B) = 2*area, positive for CCW elements
  std::array<Vec2, 3> normal;        ///< outward unit normal of edge k (opposite vertex k)
  std::array<double, 3> edge_len;    ///< length of edge k
};

enum class PatchClass { Interior, TouchesDirichlet, BoundaryNoDirichlet };

/// Vertex patch: the elements sharing one mesh vertex, with the faces of the
/// patch boundary split by role. Interior faces are shared by two patch
/// elements and always contain the patch vertex.
struct Patch {
  int vertex = -1;
  std::vector<int> elements;
  std::vector<int> interior_faces;
  std::vector<int> rim_faces;        ///< patch-boundary faces inside the domain
  std::vector<int> dirichlet_faces;  ///< patch-boundary faces on the Dirichlet boundary
  std::vector<int> absorbing_faces;  ///< patch-boundary faces on the absorbing boundary
  PatchClass cls = PatchClass::Interior;
};

using BoundaryRule = std::function<BoundaryKind(const Vec2&)>;

/// Structured triangulation of the square (lo,hi)^2 with n subdivisions per
/// side. `rule` assigns the boundary kind, evaluated at edge midpoints.
Mesh generate_square(double lo, double hi, int n, GridPattern pattern, const BoundaryRule& rule);

/// Read a Triangle-format .node/.ele pair (ASCII subset: 2D points, optional
/// single attribute column; 0- or 1-based ids detected from the first row).
Mesh read_mesh(const std::string& node_path, const std::string& ele_path, const BoundaryRule& rule);

std::vector<Patch> build_patches(const Mesh& mesh);

ElementGeometry element_geometry(const Mesh& mesh, int element);

}  // namespace waveq
