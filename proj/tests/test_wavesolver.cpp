#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "waveq/scenarios.hpp"
#include "waveq/wavesolver.hpp"

using namespace waveq;

namespace {

Eigen::VectorXd random_free_vector(const LagrangeSpace& space, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Eigen::VectorXd v(space.n_dofs);
  for (int i = 0; i < space.n_dofs; ++i) v[i] = unif(rng);
  zero_dirichlet(space, v);
  return v;
}

}  // namespace

TEST_CASE("wave speed bounds per element") {
  const Scenario s = obstacle(0.5);
  const Mesh mesh = build_scenario_mesh(s, 8);
  const MaterialData mat = scenario_material(s, mesh);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const bool inside = mesh.elements[e].region == 1;
    bool absorbing = false;
    for (int k = 0; k < 3; ++k) {
      const Face& f = mesh.faces[mesh.elements[e].face[k]];
      absorbing = absorbing || (f.boundary() && f.kind == int(BoundaryKind::Absorbing));
    }
    // Interior: sqrt(a/mu) = 1 outside, sqrt(0.5/2) = 0.5 inside the obstacle;
    // boundary elements (all outside) also see a/gamma = 1.
    const double expected = inside ? 0.5 : 1.0;
    CHECK(wave_speed(mesh, mat, e) == doctest::Approx(expected).epsilon(1e-14));
    if (absorbing) CHECK_FALSE(inside);
  }
}

TEST_CASE("cfl time step on the structured square") {
  const Scenario s = standing_wave();
  const Mesh mesh = build_scenario_mesh(s, 10);
  const MaterialData mat = scenario_material(s, mesh);
  const CflParams cfl = cfl_dt(mesh, mat, 1.5);
  // Right isoceles triangle with legs 1/10: rho = (2 - sqrt(2))/10.
  CHECK(cfl.dt == doctest::Approx(1.5 * (2.0 - std::sqrt(2.0)) * 0.1).epsilon(1e-12));
  CHECK(cfl.argmin_element >= 0);
  CHECK(default_alpha(1) == 1.5);
  CHECK(default_alpha(2) == 0.6);
}

TEST_CASE("leap-frog reproduces the scalar recurrence when K is a mass multiple") {
  const Scenario s = standing_wave();
  const Mesh mesh = build_scenario_mesh(s, 3);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 1);

  const SpMat M = assemble_mass(space, mat);
  const double lambda = 3.0, dt = 0.1;
  SpMat K = M * lambda;
  SpMat B(space.n_dofs, space.n_dofs);
  B.setZero();
  const LeapFrog lf(space, M, K, B, dt);

  // With K = lambda M and B = 0 the scheme decouples into the exact scalar
  // recurrence u^{n+1} = (2 - lambda dt^2) u^n - u^{n-1} in every dof.
  TimeState state = lf.initial_state();
  state.u_curr = random_free_vector(space, 42);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(space.n_dofs);  // u^{n-1}
  Eigen::VectorXd b = state.u_curr;                         // u^n
  const TimeState out = lf.run_from(std::move(state), 25, {});
  for (int k = 0; k < 25; ++k) {
    const Eigen::VectorXd c = (2.0 - lambda * dt * dt) * b - a;
    a = b;
    b = c;
  }
  CHECK((out.u_curr - b).lpNorm<Eigen::Infinity>() < 1e-10 * b.lpNorm<Eigen::Infinity>());
}

TEST_CASE("one damped step matches a dense linear-algebra oracle") {
  const Scenario s = reflection(0.5);
  const Mesh mesh = build_scenario_mesh(s, 3);
  const MaterialData mat = scenario_material(s, mesh);
  for (int p : {1, 2}) {
    const LagrangeSpace space = build_lagrange_space(mesh, p);
    const double dt = 0.07;
    const LeapFrog lf(space, mat, dt);

    TimeState state = lf.initial_state();
    state.u_prev = random_free_vector(space, 7);
    state.u_curr = random_free_vector(space, 8);
    Eigen::VectorXd load = random_free_vector(space, 9);
    lf.step(state, load);

    const int n = space.n_dofs;
    Eigen::MatrixXd Md = Eigen::MatrixXd(lf.mass());
    Eigen::MatrixXd Kd = Eigen::MatrixXd(lf.stiffness());
    Eigen::MatrixXd Bd = Eigen::MatrixXd(lf.boundary_mass());
    Eigen::MatrixXd S = Md / (dt * dt) + Bd / (2.0 * dt);
    for (int i = 0; i < n; ++i) {
      if (!space.dirichlet[i]) continue;
      S.row(i).setZero();
      S.col(i).setZero();
      S(i, i) = 1.0;
    }
    Eigen::VectorXd rhs = load - Kd * state.u_curr + (2.0 / (dt * dt)) * (Md * state.u_curr) -
                          (Md * state.u_prev) / (dt * dt) + (Bd * state.u_prev) / (2.0 * dt);
    for (int i = 0; i < n; ++i)
      if (space.dirichlet[i]) rhs[i] = 0.0;
    const Eigen::VectorXd expected = S.fullPivLu().solve(rhs);
    CHECK((state.u_next - expected).lpNorm<Eigen::Infinity>() <
          1e-10 * (1.0 + expected.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("discrete energy is conserved without damping or forcing") {
  const Scenario s = standing_wave();  // all-Dirichlet boundary: B = 0
  const Mesh mesh = build_scenario_mesh(s, 4);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 1);

  const double dt_limit = estimate_dt_limit(space, mat);
  const double dt = 0.9 * dt_limit;
  const LeapFrog lf(space, mat, dt);
  CHECK(lf.boundary_mass().nonZeros() == 0);

  TimeState state = lf.initial_state();
  state.dt = dt;
  state.u_curr = random_free_vector(space, 11);

  const double e0 = lf.energy(state.u_curr, state.u_prev);
  double max_drift = 0.0;
  const auto watch = [&](const TimeState& st) {
    max_drift = std::max(max_drift, std::abs(lf.energy(st.u_next, st.u_curr) - e0));
  };
  lf.run_from(std::move(state), 1000, {}, {watch});
  CHECK(max_drift <= 1e-10 * std::abs(e0));
}

TEST_CASE("undamped leap-frog is time reversible") {
  const Scenario s = standing_wave();
  const Mesh mesh = build_scenario_mesh(s, 4);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 2);

  const double dt = 0.8 * estimate_dt_limit(space, mat);
  const LeapFrog lf(space, mat, dt);

  TimeState state = lf.initial_state();
  const Eigen::VectorXd u1 = random_free_vector(space, 21);
  state.u_curr = u1;
  TimeState fwd = lf.run_from(std::move(state), 50, {});
  // fwd: u_prev = u^50, u_curr = u^51.  Swapping the window runs time backward.
  TimeState back = lf.initial_state();
  back.u_prev = fwd.u_curr;
  back.u_curr = fwd.u_prev;
  const TimeState out = lf.run_from(std::move(back), 49, {});
  CHECK((out.u_curr - u1).lpNorm<Eigen::Infinity>() < 1e-8 * u1.lpNorm<Eigen::Infinity>());
}

TEST_CASE("constrained dofs stay exactly zero through a forced run") {
  const Scenario s = reflection(0.5);
  const Mesh mesh = build_scenario_mesh(s, 4);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 2);
  const LeapFrog lf(space, mat, cfl_dt(mesh, mat, 0.3).dt);
  const LoadAssembler loads(space, mat);

  const auto load = [&](int, double t, Eigen::VectorXd& out) {
    loads.boundary([&](const Vec2& x) { return s.g(0, t, x); }, out);
  };
  int observed = 0;
  const auto check_bc = [&](const TimeState& st) {
    for (int i = 0; i < space.n_dofs; ++i)
      if (space.dirichlet[i]) {
        CHECK(st.u_next[i] == 0.0);
      }
    ++observed;
    CHECK(st.t() == doctest::Approx(st.n * st.dt));
  };
  const TimeState out = lf.run(40, load, {check_bc});
  CHECK(observed == 40);
  CHECK(out.n == 41);
  CHECK(out.u_curr.lpNorm<Eigen::Infinity>() > 0.0);  // forcing actually acted
}

TEST_CASE("stability limit estimate brackets the blow-up threshold") {
  const Scenario s = standing_wave();
  const Mesh mesh = build_scenario_mesh(s, 4);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 1);
  const double dt_limit = estimate_dt_limit(space, mat);
  CHECK(dt_limit > 0.0);

  {
    const LeapFrog lf(space, mat, 0.95 * dt_limit);
    TimeState state = lf.initial_state();
    state.u_curr = random_free_vector(space, 33);
    CHECK_NOTHROW(lf.run_from(std::move(state), 500, {}));
  }
  {
    const LeapFrog lf(space, mat, 1.2 * dt_limit);
    TimeState state = lf.initial_state();
    state.u_curr = random_free_vector(space, 33);
    CHECK_THROWS_WITH_AS(lf.run_from(std::move(state), 500, {}),
                         doctest::Contains("blew up at step"), std::runtime_error);
  }
}

TEST_CASE("leap-frog rejects nonpositive time steps") {
  const Scenario s = standing_wave();
  const Mesh mesh = build_scenario_mesh(s, 2);
  const MaterialData mat = scenario_material(s, mesh);
  const LagrangeSpace space = build_lagrange_space(mesh, 1);
  CHECK_THROWS_AS(LeapFrog(space, mat, 0.0), std::runtime_error);
  CHECK_THROWS_AS(LeapFrog(space, mat, -0.1), std::runtime_error);
}
