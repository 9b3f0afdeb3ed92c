#include "waveq/scenarios.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace waveq {

namespace {

constexpr double kPi = 3.14159265358979323846;

double binomial(int n, int k) {
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c *= double(n - k + j) / double(j);
  return c;
}

/// sin(x + k*pi/2) without rounding the phase shift through pi.
double shifted_sin(int k, double x) {
  switch (((k % 4) + 4) % 4) {
    case 0: return std::sin(x);
    case 1: return std::cos(x);
    case 2: return -std::sin(x);
    default: return -std::cos(x);
  }
}

Vec2 square_outward_normal(double lo, double hi, const Vec2& x) {
  double best = std::abs(x.x() - hi);
  Vec2 n(1.0, 0.0);
  if (std::abs(x.x() - lo) < best) { best = std::abs(x.x() - lo); n = Vec2(-1.0, 0.0); }
  if (std::abs(x.y() - hi) < best) { best = std::abs(x.y() - hi); n = Vec2(0.0, 1.0); }
  if (std::abs(x.y() - lo) < best) { n = Vec2(0.0, -1.0); }
  return n;
}

}  // namespace

Smoothstep smoothstep_chi(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  const double t2 = t * t, t3 = t2 * t;
  return {t3 * (10.0 - 15.0 * t + 6.0 * t2),
          t2 * (30.0 - 60.0 * t + 30.0 * t2),
          t * (60.0 - 180.0 * t + 120.0 * t2)};
}

double smoothstep_derivative(int k, double t) {
  if (k < 0) throw std::runtime_error("smoothstep_derivative: negative order");
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return k == 0 ? 1.0 : 0.0;
  switch (k) {
    case 0: return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    case 1: return t * t * (30.0 - 60.0 * t + 30.0 * t * t);
    case 2: return t * (60.0 - 180.0 * t + 120.0 * t * t);
    case 3: return 60.0 - 360.0 * t + 360.0 * t * t;
    case 4: return -360.0 + 720.0 * t;
    case 5: return 720.0;
    default: return 0.0;
  }
}

double pulse(double sigma, double tau) {
  const double z = tau / sigma;
  return tau * std::exp(-z * z);
}

double pulse_derivative(double sigma, int r, double tau) {
  if (r < 0) throw std::runtime_error("pulse_derivative: negative order");
  // p(tau) = sigma * r_0(z) e^{-z^2} with z = tau/sigma and r_0(z) = z;
  // each tau-derivative maps r_k -> r_k' - 2 z r_k and divides by sigma.
  std::vector<double> poly = {0.0, 1.0};
  for (int k = 0; k < r; ++k) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (size_t i = 0; i + 1 < poly.size(); ++i) next[i] += double(i + 1) * poly[i + 1];
    for (size_t i = 0; i < poly.size(); ++i) next[i + 1] -= 2.0 * poly[i];
    poly = std::move(next);
  }
  const double z = tau / sigma;
  double val = 0.0;
  for (size_t i = poly.size(); i-- > 0;) val = val * z + poly[i];
  return std::pow(sigma, 1 - r) * val * std::exp(-z * z);
}

bool point_in_polygon(const std::vector<Vec2>& polygon, const Vec2& x) {
  bool inside = false;
  const size_t n = polygon.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& pi = polygon[i];
    const Vec2& pj = polygon[j];
    if ((pi.y() > x.y()) != (pj.y() > x.y())) {
      const double x_cross = pj.x() + (pi.x() - pj.x()) * (x.y() - pj.y()) / (pi.y() - pj.y());
      if (x.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

Scenario standing_wave() {
  Scenario s;
  s.name = "standing";
  s.xmin = 0.0;
  s.xmax = 1.0;
  s.boundary = [](const Vec2&) { return BoundaryKind::Dirichlet; };
  s.mu = [](int, const Vec2&) { return 1.0; };
  s.A = [](int, const Vec2&) { return Eigen::Matrix2d::Identity().eval(); };
  s.gamma = [](const Vec2&) { return 1.0; };

  const double omega = std::sqrt(2.0) * kPi;

  // u = chi(t) sin(omega t) S(x) with S = sin(pi x1) sin(pi x2) solves
  // u_tt - lap u = f with f = (chi'' sin(omega t) + 2 omega chi' cos(omega t)) S,
  // since lap S = -omega^2 S.  Time derivatives of f come from the Leibniz rule
  // applied to both products.
  s.f = [omega](int r, double t, const Vec2& x) {
    double ft = 0.0;
    for (int j = 0; j <= r; ++j) {
      const double c = binomial(r, j) * std::pow(omega, r - j);
      ft += c * smoothstep_derivative(2 + j, t) * shifted_sin(r - j, omega * t);
      ft += 2.0 * omega * c * smoothstep_derivative(1 + j, t) * shifted_sin(r - j + 1, omega * t);
    }
    return ft * std::sin(kPi * x.x()) * std::sin(kPi * x.y());
  };
  s.g = [](int, double, const Vec2&) { return 0.0; };

  s.has_exact = true;
  s.exact_u = [omega](double t, const Vec2& x) {
    return smoothstep_derivative(0, t) * std::sin(omega * t) * std::sin(kPi * x.x()) *
           std::sin(kPi * x.y());
  };
  s.exact_ut = [omega](double t, const Vec2& x) {
    const double w = smoothstep_derivative(1, t) * std::sin(omega * t) +
                     omega * smoothstep_derivative(0, t) * std::cos(omega * t);
    return w * std::sin(kPi * x.x()) * std::sin(kPi * x.y());
  };
  s.exact_grad = [omega](double t, const Vec2& x) {
    const double w = smoothstep_derivative(0, t) * std::sin(omega * t);
    return Vec2(w * kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y()),
                w * kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()));
  };

  s.T = 10.0;
  s.rho_values = {1.0, 0.5, 0.25};
  return s;
}

Scenario reflection(double sigma) {
  Scenario s;
  s.name = "reflection";
  s.xmin = 0.0;
  s.xmax = 1.0;
  s.boundary = [](const Vec2& x) {
    return (x.x() < 1e-12 || x.y() < 1e-12) ? BoundaryKind::Dirichlet : BoundaryKind::Absorbing;
  };
  s.mu = [](int, const Vec2&) { return 1.0; };
  s.A = [](int, const Vec2&) { return Eigen::Matrix2d::Identity().eval(); };
  s.gamma = [](const Vec2&) { return 1.0; };

  const double theta = 11.0 * kPi / 8.0;
  const double t0 = 4.0;
  const Vec2 d(std::cos(theta), std::sin(theta));
  // Method of images across the two Dirichlet sides x1 = 0 and x2 = 0:
  // odd reflections cancel the trace on each side.
  const std::array<Vec2, 4> dirs = {Vec2(d.x(), d.y()), Vec2(-d.x(), d.y()),
                                    Vec2(d.x(), -d.y()), Vec2(-d.x(), -d.y())};
  const std::array<double, 4> sign = {1.0, -1.0, -1.0, 1.0};

  s.f = [](int, double, const Vec2&) { return 0.0; };
  s.g = [=](int r, double t, const Vec2& x) {
    const Vec2 n = square_outward_normal(0.0, 1.0, x);
    double val = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double tau = (t - t0) - dirs[k].dot(x);
      val += sign[k] * pulse_derivative(sigma, r + 1, tau) * (1.0 - dirs[k].dot(n));
    }
    return val;
  };

  s.has_exact = true;
  s.exact_u = [=](double t, const Vec2& x) {
    double u = 0.0;
    for (int k = 0; k < 4; ++k) u += sign[k] * pulse(sigma, (t - t0) - dirs[k].dot(x));
    return u;
  };
  s.exact_ut = [=](double t, const Vec2& x) {
    double ut = 0.0;
    for (int k = 0; k < 4; ++k)
      ut += sign[k] * pulse_derivative(sigma, 1, (t - t0) - dirs[k].dot(x));
    return ut;
  };
  s.exact_grad = [=](double t, const Vec2& x) {
    Vec2 grad(0.0, 0.0);
    for (int k = 0; k < 4; ++k)
      grad -= sign[k] * pulse_derivative(sigma, 1, (t - t0) - dirs[k].dot(x)) * dirs[k];
    return grad;
  };

  s.T = 10.0;
  s.rho_values = {0.1};
  return s;
}

Scenario obstacle(double sigma) {
  Scenario s;
  s.name = "obstacle";
  s.xmin = -1.0;
  s.xmax = 1.0;
  s.boundary = [](const Vec2&) { return BoundaryKind::Absorbing; };

  const std::vector<Vec2> polygon = {Vec2(0.0, -0.5), Vec2(0.5, 0.5), Vec2(0.0, 0.0),
                                     Vec2(0.0, 0.5), Vec2(-0.5, 0.0)};
  s.region = [polygon](const Vec2& c) { return point_in_polygon(polygon, c) ? 1 : 0; };
  s.mu = [](int region, const Vec2&) { return region == 1 ? 2.0 : 1.0; };
  s.A = [](int region, const Vec2&) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
    if (region == 1) a *= 0.5;
    return a;
  };
  s.gamma = [](const Vec2&) { return 1.0; };

  const double theta = 11.0 * kPi / 8.0;
  const double t0 = 4.0;
  const Vec2 d(std::cos(theta), std::sin(theta));

  s.f = [](int, double, const Vec2&) { return 0.0; };
  // Incident plane pulse injected through the absorbing condition:
  // g = du_inc/dt + grad u_inc . n with u_inc = p_sigma((t - t0) - d.x).
  s.g = [=](int r, double t, const Vec2& x) {
    const Vec2 n = square_outward_normal(-1.0, 1.0, x);
    const double tau = (t - t0) - d.dot(x);
    return pulse_derivative(sigma, r + 1, tau) * (1.0 - d.dot(n));
  };

  s.has_exact = false;
  s.T = 10.0;
  s.rho_values = {0.1};
  return s;
}

Mesh build_scenario_mesh(const Scenario& scenario, int n) {
  Mesh mesh = generate_square(scenario.xmin, scenario.xmax, n, scenario.pattern, scenario.boundary);
  if (scenario.region) {
    for (auto& el : mesh.elements) {
      const Vec2 c =
          (mesh.vertices[el.v[0]] + mesh.vertices[el.v[1]] + mesh.vertices[el.v[2]]) / 3.0;
      el.region = scenario.region(c);
    }
  }
  return mesh;
}

MaterialData scenario_material(const Scenario& scenario, const Mesh& mesh) {
  return build_material(mesh, scenario.mu, scenario.A, scenario.gamma);
}

}  // namespace waveq
