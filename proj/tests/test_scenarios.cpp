#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "waveq/scenarios.hpp"

using namespace waveq;

namespace {

constexpr double kPi = 3.14159265358979323846;

double central_diff(const std::function<double(double)>& fn, double x, double delta) {
  return (fn(x + delta) - fn(x - delta)) / (2.0 * delta);
}

}  // namespace

TEST_CASE("smoothstep endpoint values and C2 junctions") {
  CHECK(smoothstep_derivative(0, -0.5) == 0.0);
  CHECK(smoothstep_derivative(0, 0.0) == 0.0);
  CHECK(smoothstep_derivative(0, 1.0) == 1.0);
  CHECK(smoothstep_derivative(0, 3.0) == 1.0);
  CHECK(smoothstep_derivative(0, 0.5) == doctest::Approx(0.5).epsilon(1e-14));

  for (int k = 1; k <= 2; ++k) {
    CHECK(std::abs(smoothstep_derivative(k, 1e-9)) < 1e-7);
    CHECK(std::abs(smoothstep_derivative(k, 1.0 - 1e-9)) < 1e-7);
  }
  // Degree five leaves nothing beyond the fifth derivative.
  CHECK(smoothstep_derivative(6, 0.5) == 0.0);
  CHECK(smoothstep_derivative(9, 0.7) == 0.0);

  const Smoothstep s = smoothstep_chi(0.37);
  CHECK(s.chi == doctest::Approx(smoothstep_derivative(0, 0.37)).epsilon(1e-15));
  CHECK(s.dchi == doctest::Approx(smoothstep_derivative(1, 0.37)).epsilon(1e-15));
  CHECK(s.ddchi == doctest::Approx(smoothstep_derivative(2, 0.37)).epsilon(1e-15));
}

TEST_CASE("smoothstep coefficients solve the Hermite endpoint system") {
  // The quintic with p(0)=p'(0)=p''(0)=0, p(1)=1, p'(1)=p''(1)=0.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(6, 6);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < 6; ++i) {
    M(0, i) = (i == 0) ? 1.0 : 0.0;
    M(1, i) = (i == 1) ? 1.0 : 0.0;
    M(2, i) = (i == 2) ? 2.0 : 0.0;
    M(3, i) = 1.0;
    M(4, i) = i;
    M(5, i) = i * (i - 1);
  }
  rhs(3) = 1.0;
  const Eigen::VectorXd a = M.fullPivLu().solve(rhs);
  const Eigen::VectorXd expected = (Eigen::VectorXd(6) << 0, 0, 0, 10, -15, 6).finished();
  CHECK((a - expected).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("smoothstep derivatives match finite differences") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = unif(rng);
    for (int k = 1; k <= 5; ++k) {
      const double fd = central_diff(
          [&](double s) { return smoothstep_derivative(k - 1, s); }, t, 1e-6);
      CHECK(smoothstep_derivative(k, t) == doctest::Approx(fd).epsilon(1e-5).scale(720.0));
    }
  }
}

TEST_CASE("pulse derivatives: stationary point and finite differences") {
  for (double sigma : {1.0, 0.5, 0.25}) {
    CHECK(pulse_derivative(sigma, 0, 0.3) == doctest::Approx(pulse(sigma, 0.3)).epsilon(1e-15));
    // p'(tau) = e^{-(tau/sigma)^2} (1 - 2 tau^2/sigma^2) vanishes at sigma/sqrt(2).
    CHECK(std::abs(pulse_derivative(sigma, 1, sigma / std::sqrt(2.0))) < 1e-13);
    CHECK(pulse_derivative(sigma, 1, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    std::mt19937 rng(77);
    std::uniform_real_distribution<double> unif(-2.5 * sigma, 2.5 * sigma);
    for (int trial = 0; trial < 15; ++trial) {
      const double tau = unif(rng);
      for (int r = 1; r <= 5; ++r) {
        const double fd = central_diff(
            [&](double s) { return pulse_derivative(sigma, r - 1, s); }, tau, 1e-4 * sigma);
        const double scale = std::pow(sigma, 1 - r);
        CHECK(std::abs(pulse_derivative(sigma, r, tau) - fd) < 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("point-in-polygon even-odd classification") {
  const std::vector<Vec2> poly = {Vec2(0.0, -0.5), Vec2(0.5, 0.5), Vec2(0.0, 0.0),
                                  Vec2(0.0, 0.5), Vec2(-0.5, 0.0)};
  CHECK(point_in_polygon(poly, Vec2(0.1, 0.0)));
  CHECK(point_in_polygon(poly, Vec2(0.1, -0.1)));
  CHECK_FALSE(point_in_polygon(poly, Vec2(0.9, 0.9)));
  CHECK_FALSE(point_in_polygon(poly, Vec2(-0.4, 0.4)));
  CHECK_FALSE(point_in_polygon(poly, Vec2(0.6, 0.0)));
  CHECK_FALSE(point_in_polygon(poly, Vec2(-0.6, 0.0)));
  CHECK_FALSE(point_in_polygon(poly, Vec2(0.0, 0.9)));

  const std::vector<Vec2> square = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  CHECK(point_in_polygon(square, Vec2(0.5, 0.5)));
  CHECK_FALSE(point_in_polygon(square, Vec2(1.5, 0.5)));
}

TEST_CASE("standing wave solves the wave equation at random probes") {
  const Scenario s = standing_wave();
  REQUIRE(s.has_exact);

  std::mt19937 rng(2023);
  std::uniform_real_distribution<double> ux(0.05, 0.95);
  std::uniform_real_distribution<double> ut(0.1, 2.0);
  const double dt = 1e-4, dx = 1e-4;
  int checked = 0;
  while (checked < 50) {
    const double t = ut(rng);
    if (std::abs(t - 1.0) < 0.05) continue;  // third time derivative jumps at t = 1
    const Vec2 x(ux(rng), ux(rng));
    ++checked;

    const double utt = central_diff([&](double s_) { return s.exact_ut(s_, x); }, t, dt);
    const double lap =
        central_diff([&](double s_) { return s.exact_grad(t, Vec2(s_, x.y())).x(); }, x.x(), dx) +
        central_diff([&](double s_) { return s.exact_grad(t, Vec2(x.x(), s_)).y(); }, x.y(), dx);
    const double residual = utt - lap - s.f(0, t, x);
    CHECK(std::abs(residual) < 1e-5);

    // Consistency of the stored derivative fields with the primary one.
    const double fd_ut = central_diff([&](double s_) { return s.exact_u(s_, x); }, t, 1e-5);
    CHECK(s.exact_ut(t, x) == doctest::Approx(fd_ut).epsilon(1e-7).scale(5.0));
    const Vec2 g = s.exact_grad(t, x);
    const double fd_gx =
        central_diff([&](double s_) { return s.exact_u(t, Vec2(s_, x.y())); }, x.x(), 1e-5);
    const double fd_gy =
        central_diff([&](double s_) { return s.exact_u(t, Vec2(x.x(), s_)); }, x.y(), 1e-5);
    CHECK(g.x() == doctest::Approx(fd_gx).epsilon(1e-7).scale(5.0));
    CHECK(g.y() == doctest::Approx(fd_gy).epsilon(1e-7).scale(5.0));
  }
}

TEST_CASE("standing wave data derivatives and cutoff") {
  const Scenario s = standing_wave();
  const Vec2 x(0.312, 0.771);

  // f vanishes identically once the ramp is complete.
  for (int r = 0; r <= 3; ++r) {
    CHECK(s.f(r, 1.0, x) == 0.0);
    CHECK(s.f(r, 1.5, x) == 0.0);
    CHECK(s.f(r, 9.7, x) == 0.0);
  }

  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> ut(0.05, 0.95);
  for (int trial = 0; trial < 12; ++trial) {
    const double t = ut(rng);
    for (int r = 1; r <= 3; ++r) {
      const double fd = central_diff([&](double s_) { return s.f(r - 1, s_, x); }, t, 1e-5);
      CHECK(s.f(r, t, x) == doctest::Approx(fd).epsilon(1e-5).scale(1e4));
    }
  }

  // Dirichlet data: the exact solution vanishes on the whole boundary.
  for (double c : {0.0, 0.25, 0.7, 1.0}) {
    CHECK(std::abs(s.exact_u(1.3, Vec2(0.0, c))) < 1e-15);
    CHECK(std::abs(s.exact_u(1.3, Vec2(1.0, c))) < 1e-15);
    CHECK(std::abs(s.exact_u(1.3, Vec2(c, 0.0))) < 1e-14);
    CHECK(std::abs(s.exact_u(1.3, Vec2(c, 1.0))) < 1e-14);
  }
}

TEST_CASE("reflection scenario: traces, absorbing data, wave equation") {
  const double sigma = 0.5;
  const Scenario s = reflection(sigma);
  REQUIRE(s.has_exact);

  // Method of images: u and u_t vanish identically on both Dirichlet sides.
  for (double c : {0.0, 0.3, 0.62, 1.0}) {
    for (double t : {3.9, 4.6, 6.0, 8.5}) {
      CHECK(std::abs(s.exact_u(t, Vec2(0.0, c))) < 1e-12);
      CHECK(std::abs(s.exact_u(t, Vec2(c, 0.0))) < 1e-12);
      CHECK(std::abs(s.exact_ut(t, Vec2(0.0, c))) < 1e-12);
      CHECK(std::abs(s.exact_ut(t, Vec2(c, 0.0))) < 1e-12);
    }
  }

  // Nearly quiescent start.
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u0_max = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vec2 x(unif(rng), unif(rng));
    u0_max = std::max(u0_max, std::abs(s.exact_u(0.0, x)));
    u0_max = std::max(u0_max, std::abs(s.exact_ut(0.0, x)));
  }
  CHECK(u0_max < 1e-10);

  // Homogeneous wave equation away from data junctions.
  const double dt = 1e-4, dx = 1e-4;
  for (int trial = 0; trial < 30; ++trial) {
    const double t = 3.0 + 4.0 * unif(rng);
    const Vec2 x(0.05 + 0.9 * unif(rng), 0.05 + 0.9 * unif(rng));
    const double utt = central_diff([&](double s_) { return s.exact_ut(s_, x); }, t, dt);
    const double lap =
        central_diff([&](double s_) { return s.exact_grad(t, Vec2(s_, x.y())).x(); }, x.x(), dx) +
        central_diff([&](double s_) { return s.exact_grad(t, Vec2(x.x(), s_)).y(); }, x.y(), dx);
    CHECK(std::abs(utt - lap) < 1e-5);
    CHECK(s.f(0, t, x) == 0.0);
  }

  // g equals du/dt + grad u . n on the absorbing sides (gamma = 1, A = I).
  for (int trial = 0; trial < 25; ++trial) {
    const double t = 2.0 + 6.0 * unif(rng);
    const bool right = trial % 2 == 0;
    const Vec2 x = right ? Vec2(1.0, 0.03 + 0.94 * unif(rng))
                         : Vec2(0.03 + 0.94 * unif(rng), 1.0);
    const Vec2 n = right ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
    const double expected = s.exact_ut(t, x) + s.exact_grad(t, x).dot(n);
    CHECK(s.g(0, t, x) == doctest::Approx(expected).epsilon(1e-12).scale(1.0));

    for (int r = 1; r <= 2; ++r) {
      const double fd = central_diff([&](double s_) { return s.g(r - 1, s_, x); }, t, 1e-4);
      CHECK(std::abs(s.g(r, t, x) - fd) < 1e-5 * std::pow(sigma, -r));
    }
  }
}

TEST_CASE("obstacle scenario: regions, materials, boundary data") {
  const double sigma = 0.5;
  const Scenario s = obstacle(sigma);
  CHECK_FALSE(s.has_exact);
  CHECK(s.xmin == -1.0);
  CHECK(s.region(Vec2(0.1, 0.0)) == 1);
  CHECK(s.region(Vec2(0.9, 0.9)) == 0);
  CHECK(s.mu(1, Vec2(0, 0)) == 2.0);
  CHECK(s.mu(0, Vec2(0, 0)) == 1.0);
  CHECK(s.A(1, Vec2(0, 0))(0, 0) == 0.5);
  CHECK(s.A(0, Vec2(0, 0))(1, 1) == 1.0);

  const Mesh mesh = build_scenario_mesh(s, 16);
  int tagged = 0;
  for (const auto& el : mesh.elements) {
    const Vec2 c = (mesh.vertices[el.v[0]] + mesh.vertices[el.v[1]] + mesh.vertices[el.v[2]]) / 3.0;
    CHECK(el.region == s.region(c));
    tagged += el.region;
  }
  CHECK(tagged > 0);
  CHECK(tagged < mesh.n_elements());
  // Obstacle area is 3/8; region-1 triangles should cover roughly that much.
  double tagged_area = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (mesh.elements[e].region == 1) tagged_area += element_geometry(mesh, e).area;
  CHECK(tagged_area == doctest::Approx(0.375).epsilon(0.25));

  const MaterialData mat = scenario_material(s, mesh);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    CHECK(mat.mu[e] == (mesh.elements[e].region == 1 ? 2.0 : 1.0));
    CHECK(mat.A[e](0, 0) == (mesh.elements[e].region == 1 ? 0.5 : 1.0));
  }
  for (int f : mesh.boundary_faces)
    CHECK(mesh.faces[f].kind == static_cast<int>(BoundaryKind::Absorbing));

  // g against a finite-difference oracle built from the raw pulse profile:
  // u_inc = p((t - t0) - d.x), g = du_inc/dt + grad u_inc . n.
  const double theta = 11.0 * kPi / 8.0;
  const Vec2 d(std::cos(theta), std::sin(theta));
  const auto u_inc = [&](double t, const Vec2& x) { return pulse(sigma, (t - 4.0) - d.dot(x)); };
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unif(-0.9, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    const double t = 2.0 + 6.0 * (unif(rng) + 0.9) / 1.8;
    Vec2 x, n;
    switch (trial % 4) {
      case 0: x = Vec2(1.0, unif(rng)); n = Vec2(1, 0); break;
      case 1: x = Vec2(-1.0, unif(rng)); n = Vec2(-1, 0); break;
      case 2: x = Vec2(unif(rng), 1.0); n = Vec2(0, 1); break;
      default: x = Vec2(unif(rng), -1.0); n = Vec2(0, -1); break;
    }
    const double fd_t = central_diff([&](double s_) { return u_inc(s_, x); }, t, 1e-5);
    const double fd_n = central_diff(
        [&](double s_) { return u_inc(t, x + s_ * n); }, 0.0, 1e-5);
    CHECK(s.g(0, t, x) == doctest::Approx(fd_t + fd_n).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("scenario meshes carry the requested boundary split") {
  const Scenario stand = standing_wave();
  const Mesh m1 = build_scenario_mesh(stand, 4);
  for (int f : m1.boundary_faces)
    CHECK(m1.faces[f].kind == static_cast<int>(BoundaryKind::Dirichlet));

  const Scenario refl = reflection(0.25);
  const Mesh m2 = build_scenario_mesh(refl, 4);
  int n_dir = 0, n_abs = 0;
  for (int f : m2.boundary_faces) {
    const Vec2 mid = 0.5 * (m2.vertices[m2.faces[f].v0] + m2.vertices[m2.faces[f].v1]);
    const bool dir = mid.x() < 1e-12 || mid.y() < 1e-12;
    CHECK(m2.faces[f].kind ==
          static_cast<int>(dir ? BoundaryKind::Dirichlet : BoundaryKind::Absorbing));
    (dir ? n_dir : n_abs) += 1;
  }
  CHECK(n_dir == 8);
  CHECK(n_abs == 8);
}
