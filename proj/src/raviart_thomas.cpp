#include "waveq/raviart_thomas.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace waveq {

int rt_dim(int q) {
  if (q < 0 || q > 3) throw std::invalid_argument("rt: only q in 0..3 is supported");
  return (q + 1) * (q + 3);
}

std::vector<std::pair<int, int>> monomial_exponents(int q) {
  std::vector<std::pair<int, int>> e;
  for (int d = 0; d <= q; ++d) {
    for (int a = d; a >= 0; --a) e.emplace_back(a, d - a);
  }
  return e;
}

double legendre01(int l, double s) {
  const double x = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = x;
  if (l == 0) return p0;
  for (int n = 1; n < l; ++n) {
    double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

RTValues rt_monomials(int q, const Vec2& x) {
  const int n = rt_dim(q);
  const auto exps = monomial_exponents(q);
  RTValues out;
  out.value.resize(n, 2);
  out.div.resize(n);

  int row = 0;
  for (auto [a, b] : exps) {
    const double m = ipow(x.x(), a) * ipow(x.y(), b);
    const double dmx = a > 0 ? a * ipow(x.x(), a - 1) * ipow(x.y(), b) : 0.0;
    const double dmy = b > 0 ? b * ipow(x.x(), a) * ipow(x.y(), b - 1) : 0.0;
    out.value.row(row) << m, 0.0;
    out.div[row] = dmx;
    ++row;
    out.value.row(row) << 0.0, m;
    out.div[row] = dmy;
    ++row;
  }
  for (int a = q; a >= 0; --a) {
    const int b = q - a;
    const double m = ipow(x.x(), a) * ipow(x.y(), b);
    out.value.row(row) << x.x() * m, x.y() * m;
    out.div[row] = (q + 2) * m;
    ++row;
  }
  return out;
}

namespace {

struct RefEdge {
  Vec2 from, to, normal;
  double length;
};

/// Reference edges directed from the lower local vertex index to the higher,
/// edge e opposite vertex e; normal is the tangent rotated by -90 degrees.
std::array<RefEdge, 3> reference_edges() {
  const std::array<Vec2, 3> v = {Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)};
  std::array<RefEdge, 3> e;
  const std::array<std::pair<int, int>, 3> ends = {{{1, 2}, {0, 2}, {0, 1}}};
  for (int k = 0; k < 3; ++k) {
    e[k].from = v[ends[k].first];
    e[k].to = v[ends[k].second];
    Vec2 t = e[k].to - e[k].from;
    e[k].length = t.norm();
    t /= e[k].length;
    e[k].normal = Vec2(t.y(), -t.x());
  }
  return e;
}

Eigen::MatrixXd reference_dof_matrix(int q) {
  const int n = rt_dim(q);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  const auto edges = reference_edges();
  const EdgeQuadratureRule er = edge_rule(2 * q + 1);
  int row = 0;
  for (const RefEdge& e : edges) {
    for (int l = 0; l <= q; ++l, ++row) {
      for (int iq = 0; iq < er.size(); ++iq) {
        const double s = er.points[iq];
        const Vec2 x = e.from + s * (e.to - e.from);
        const RTValues mv = rt_monomials(q, x);
        const double w = er.weights[iq] * e.length * legendre01(l, s);
        for (int j = 0; j < n; ++j) D(row, j) += w * mv.value.row(j).dot(e.normal);
      }
    }
  }
  if (q > 0) {
    const QuadratureRule vr = triangle_rule(2 * q);
    const auto exps = monomial_exponents(q - 1);
    for (auto [a, b] : exps) {
      for (int d = 0; d < 2; ++d, ++row) {
        for (int iq = 0; iq < vr.size(); ++iq) {
          const Vec2& x = vr.points[iq];
          const RTValues mv = rt_monomials(q, x);
          const double w = vr.weights[iq] * ipow(x.x(), a) * ipow(x.y(), b);
          for (int j = 0; j < n; ++j) D(row, j) += w * mv.value(j, d);
        }
      }
    }
  }
  return D;
}

const Eigen::MatrixXd& reference_coefficients(int q) {
  static std::map<int, Eigen::MatrixXd> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(q);
  if (it == cache.end()) {
    Eigen::MatrixXd D = reference_dof_matrix(q);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
    if (!lu.isInvertible()) throw std::runtime_error("rt: reference dof matrix is singular");
    it = cache.emplace(q, lu.inverse()).first;
  }
  return it->second;
}

}  // namespace

RTValues rt_eval(int q, const Vec2& x) {
  const Eigen::MatrixXd& C = reference_coefficients(q);
  const RTValues mon = rt_monomials(q, x);
  RTValues out;
  out.value = C.transpose() * mon.value;
  out.div = C.transpose() * mon.div;
  return out;
}

RTValues piola_push(const ElementGeometry& geom, const RTValues& ref) {
  RTValues out;
  out.value = ref.value * geom.B.transpose() / geom.det;
  out.div = ref.div / geom.det;
  return out;
}

RTElementBasis::RTElementBasis(const Mesh& mesh, int element, int q) : q_(q), n_(rt_dim(q)) {
  geom_ = element_geometry(mesh, element);
  const Element& el = mesh.elements[element];
  centroid_ = (mesh.vertices[el.v[0]] + mesh.vertices[el.v[1]] + mesh.vertices[el.v[2]]) / 3.0;
  scale_ = geom_.h;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n_, n_);
  const EdgeQuadratureRule er = edge_rule(2 * q + 1);
  int row = 0;
  for (int e = 0; e < 3; ++e) {
    const Face& f = mesh.faces[el.face[e]];
    const Vec2 p0 = mesh.vertices[f.v0];
    const Vec2 p1 = mesh.vertices[f.v1];
    Vec2 t = p1 - p0;
    const double len = t.norm();
    t /= len;
    const Vec2 nrm(t.y(), -t.x());
    for (int l = 0; l <= q; ++l, ++row) {
      for (int iq = 0; iq < er.size(); ++iq) {
        const double s = er.points[iq];
        const Vec2 x = p0 + s * (p1 - p0);
        const Vec2 x_ref = geom_.Binv * (x - geom_.b);
        const RTValues pushed = piola_push(geom_, rt_monomials(q, x_ref));
        const double w = er.weights[iq] * len * legendre01(l, s);
        for (int j = 0; j < n_; ++j) D(row, j) += w * pushed.value.row(j).dot(nrm);
      }
    }
  }
  if (q > 0) {
    const QuadratureRule vr = triangle_rule(2 * q);
    const auto exps = monomial_exponents(q - 1);
    for (auto [a, b] : exps) {
      for (int d = 0; d < 2; ++d, ++row) {
        for (int iq = 0; iq < vr.size(); ++iq) {
          const Vec2& x_ref = vr.points[iq];
          const Vec2 x = geom_.B * x_ref + geom_.b;
          const Vec2 xc = (x - centroid_) / scale_;
          const RTValues pushed = piola_push(geom_, rt_monomials(q, x_ref));
          const double w = vr.weights[iq] * geom_.det * ipow(xc.x(), a) * ipow(xc.y(), b);
          for (int j = 0; j < n_; ++j) D(row, j) += w * pushed.value(j, d);
        }
      }
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
  if (!lu.isInvertible()) {
    throw std::runtime_error("rt: element dof matrix is singular (element " + std::to_string(element) + ")");
  }
  coeff_ = lu.inverse();
}

RTValues RTElementBasis::eval_ref(const Vec2& x_ref) const {
  const RTValues pushed = piola_push(geom_, rt_monomials(q_, x_ref));
  RTValues out;
  out.value = coeff_.transpose() * pushed.value;
  out.div = coeff_.transpose() * pushed.div;
  return out;
}

std::vector<int> rt_element_dofs(const Mesh& mesh, int element, int q) {
  const Element& el = mesh.elements[element];
  const int per_face = q + 1;
  const int per_elem = q * (q + 1);
  const int face_total = static_cast<int>(mesh.faces.size()) * per_face;
  std::vector<int> dofs;
  dofs.reserve(rt_dim(q));
  for (int e = 0; e < 3; ++e) {
    for (int l = 0; l <= q; ++l) dofs.push_back(el.face[e] * per_face + l);
  }
  for (int j = 0; j < per_elem; ++j) dofs.push_back(face_total + element * per_elem + j);
  return dofs;
}

int rt_n_global_dofs(const Mesh& mesh, int q) {
  return static_cast<int>(mesh.faces.size()) * (q + 1) + mesh.n_elements() * q * (q + 1);
}

}  // namespace waveq
