#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fsiplate/fe_space.hpp"
#include "fsiplate/mesh.hpp"
#include "fsiplate/mms.hpp"

using namespace fsiplate;

namespace {

std::mt19937 rng(20240601u);

Vec3 random_interior() {
  std::uniform_real_distribution<double> U(0.02, 0.98);
  return Vec3(U(rng), U(rng), -U(rng));
}

Vec2 random_plate_point() {
  std::uniform_real_distribution<double> U(0.02, 0.98);
  return Vec2(U(rng), U(rng));
}

double random_time() {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  return U(rng);
}

// Second-order central differences for the oracle side.
template <typename F>
double fd1(F&& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}
template <typename F>
double fd2(F&& f, double x, double h = 1e-4) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace

TEST_CASE("velocity field is divergence-free") {
  const ExactSolution sol;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 x = random_interior();
    const double t = random_time();
    const MatX g = sol.grad_velocity(x, t);
    CHECK(std::abs(g(0, 0) + g(1, 1) + g(2, 2)) < 1e-10);
  }
}

TEST_CASE("interface kinematics: vertical velocity equals the plate rate") {
  const ExactSolution sol;
  for (int trial = 0; trial < 200; ++trial) {
    const Vec2 xp = random_plate_point();
    const double t = random_time();
    const Vec3 x(xp[0], xp[1], 0.0);
    CHECK(std::abs(sol.velocity(x, t)[2] - sol.dt_w(xp, t)) < 1e-12);
    // Tangential components vanish on the interface plane boundary rim
    // via the no-slip wall, and pressure is identically zero.
    CHECK(sol.pressure(x, t) == 0.0);
  }
}

TEST_CASE("auxiliary variable equals the negative deflection Laplacian") {
  const ExactSolution sol;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec2 x = random_plate_point();
    const double t = random_time();
    const double lap_w =
        fd2([&](double s) { return sol.w(Vec2(s, x[1]), t); }, x[0]) +
        fd2([&](double s) { return sol.w(Vec2(x[0], s), t); }, x[1]);
    CHECK(sol.z(x, t) == Catch::Approx(-lap_w).margin(5e-7));
  }
}

TEST_CASE("no-slip on the container walls") {
  const ExactSolution sol;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = U(rng), b = U(rng), t = random_time();
    for (const Vec3& x :
         {Vec3(0.0, a, -b), Vec3(1.0, a, -b), Vec3(a, 0.0, -b), Vec3(a, 1.0, -b),
          Vec3(a, b, -1.0)}) {
      CHECK(sol.velocity(x, t).norm() < 1e-12);
    }
  }
}

TEST_CASE("plate deflection vanishes on the rim (hinged boundary)") {
  const ExactSolution sol;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = U(rng), t = random_time();
    for (const Vec2& x : {Vec2(0.0, a), Vec2(1.0, a), Vec2(a, 0.0), Vec2(a, 1.0)}) {
      CHECK(std::abs(sol.w(x, t)) < 1e-13);
      CHECK(std::abs(sol.z(x, t)) < 1e-13);
    }
  }
}

TEST_CASE("analytic derivatives match finite-difference oracles") {
  const ExactSolution sol;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 x = random_interior();
    const double t = random_time();

    // Time derivative of velocity.
    const Vec3 dt_fd = (sol.velocity(x, t + 1e-5) - sol.velocity(x, t - 1e-5)) / 2e-5;
    CHECK((sol.dt_velocity(x, t) - dt_fd).norm() <
          1e-7 * std::max(1e-4, dt_fd.norm()));

    // Velocity gradient.
    const MatX g = sol.grad_velocity(x, t);
    for (int d = 0; d < 3; ++d) {
      Vec3 xp = x, xm = x;
      xp[d] += 1e-5;
      xm[d] -= 1e-5;
      const Vec3 col = (sol.velocity(xp, t) - sol.velocity(xm, t)) / 2e-5;
      CHECK((g.col(d) - col).norm() < 1e-6 * std::max(1.0, col.norm()));
    }

    // Componentwise Laplacian.
    const Vec3 lap = sol.laplacian_velocity(x, t);
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int d = 0; d < 3; ++d) {
        acc += fd2(
            [&](double s) {
              Vec3 y = x;
              y[d] = s;
              return sol.velocity(y, t)[c];
            },
            x[d]);
      }
      CHECK(lap[c] == Catch::Approx(acc).margin(5e-6 * std::max(1.0, std::abs(acc))));
    }
  }
}

TEST_CASE("plate time derivatives match finite differences") {
  const ExactSolution sol;
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 x = random_plate_point();
    const double t = random_time();
    const double dtw_fd = fd1([&](double s) { return sol.w(x, s); }, t);
    const double dttw_fd = fd2([&](double s) { return sol.w(x, s); }, t);
    const double dttz_fd = fd2([&](double s) { return sol.z(x, s); }, t);
    CHECK(sol.dt_w(x, t) == Catch::Approx(dtw_fd).margin(1e-9));
    CHECK(sol.dtt_w(x, t) == Catch::Approx(dttw_fd).margin(1e-7));
    CHECK(sol.dtt_z(x, t) == Catch::Approx(dttz_fd).margin(1e-6));
  }
}

TEST_CASE("forcing terms reproduce the strong operators (anti-derivation oracle)") {
  const ExactSolution sol;
  PhysicalParams p;
  p.rho_f = 1.3;
  p.nu_f = 0.7;
  p.rho_p = 2.1;
  p.rho_rot = 0.4;
  p.flexural_rigidity = 1.9;
  const double omega = 3.0;

  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 x = random_interior();
    const double t = random_time();
    // rho_f du/dt - nu_f Lap(u) + grad p, every piece by finite differences.
    Vec3 fd = Vec3::Zero();
    const Vec3 dtu = (sol.velocity(x, t + 1e-5) - sol.velocity(x, t - 1e-5)) / 2e-5;
    fd += p.rho_f * dtu;
    for (int c = 0; c < 3; ++c) {
      double lap = 0.0;
      for (int d = 0; d < 3; ++d)
        lap += fd2(
            [&](double s) {
              Vec3 y = x;
              y[d] = s;
              return sol.velocity(y, t)[c];
            },
            x[d]);
      fd[c] -= p.nu_f * lap;
    }
    const Vec3 got = sol.fluid_forcing(x, t, p);
    const double scale = std::max(1e-6, fd.norm());
    CHECK((got - fd).norm() < 1e-6 * scale);
  }

  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 x = random_plate_point();
    const double t = random_time();
    const double dttw = fd2([&](double s) { return sol.w(x, s); }, t);
    const double dttz = fd2([&](double s) { return sol.z(x, s); }, t);
    double lap_z = fd2([&](double s) { return sol.z(Vec2(s, x[1]), t); }, x[0]) +
                   fd2([&](double s) { return sol.z(Vec2(x[0], s), t); }, x[1]);
    const double fd = omega * (p.rho_p * dttw + p.rho_rot * dttz) -
                      p.flexural_rigidity * lap_z;
    const double got = sol.plate_forcing(x, t, p, omega);
    CHECK(got == Catch::Approx(fd).margin(1e-6 * std::max(1.0, std::abs(fd))));
  }
}

TEST_CASE("observed rates: frozen examples and properties") {
  CHECK(observed_rate({4.0, 1.0}, {2.0, 1.0}).front() == Catch::Approx(2.0));
  CHECK(observed_rate({1.07e-5, 2.22e-6}, {0.5, 0.25}).front() ==
        Catch::Approx(2.27).margin(0.005));
  CHECK(observed_rate({3.13e-4, 7.77e-5}, {0.5, 0.25}).front() ==
        Catch::Approx(2.01).margin(0.005));

  // Scale invariance.
  const std::vector<double> errs = {3.4e-2, 8.1e-3, 2.2e-3};
  const std::vector<double> steps = {0.25, 0.125, 0.0625};
  const auto r1 = observed_rate(errs, steps);
  std::vector<double> scaled = errs;
  for (double& e : scaled) e *= 17.0;
  const auto r2 = observed_rate(scaled, steps);
  REQUIRE(r1.size() == 2);
  for (size_t i = 0; i < r1.size(); ++i)
    CHECK(std::abs(r1[i] - r2[i]) < 1e-12);

  CHECK_THROWS_AS(observed_rate({1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(observed_rate({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(observed_rate({1.0, 0.0}, {2.0, 1.0}), std::domain_error);
}

TEST_CASE("error norms: exact interpolants and constant offsets") {
  const auto mesh = build_box_fluid_mesh(2, 2, 2, Vec3(0, 0, -1), Vec3(1, 1, 0));
  const auto space = build_space(mesh, 2, 1, SpaceRole::Pressure);

  // A quadratic is reproduced exactly by P2: zero error in both norms.
  const ExactField quad = {
      [](const VecX& x, double) {
        VecX v(1);
        v[0] = x[0] * x[0] + 2.0 * x[1] * x[2] - x[2];
        return v;
      },
      [](const VecX& x, double) {
        MatX g(1, 3);
        g << 2.0 * x[0], 2.0 * x[2], 2.0 * x[1] - 1.0;
        return g;
      }};
  const ScalarField3 qf = [](const Vec3& x, double) {
    return x[0] * x[0] + 2.0 * x[1] * x[2] - x[2];
  };
  const VecX c = interpolate(space, qf, 0.0);
  CHECK(error_norm(space, c, quad, 0.0, NormType::L2) < 1e-13);
  CHECK(error_norm(space, c, quad, 0.0, NormType::H1) < 1e-12);

  // Zero coefficients against the constant 3: L2 error 3*sqrt(|box|) = 3.
  const ExactField three = {
      [](const VecX&, double) {
        VecX v(1);
        v[0] = 3.0;
        return v;
      },
      [](const VecX&, double) { return MatX::Zero(1, 3); }};
  const VecX zero = VecX::Zero(space.dof_count());
  CHECK(error_norm(space, zero, three, 0.0, NormType::L2) ==
        Catch::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("exact field adapters agree with the solution object") {
  const ExactSolution sol;
  const auto uf = exact_velocity_field(sol);
  const auto wf = exact_w_field(sol);
  const Vec3 x = random_interior();
  const Vec2 xp = random_plate_point();
  const double t = 0.37;
  VecX x3(3), x2(2);
  x3 << x[0], x[1], x[2];
  x2 << xp[0], xp[1];
  CHECK((uf.value(x3, t) - VecX(sol.velocity(x, t))).norm() < 1e-15);
  CHECK(std::abs(wf.value(x2, t)[0] - sol.w(xp, t)) < 1e-15);
  CHECK((uf.gradient(x3, t) - MatX(sol.grad_velocity(x, t))).norm() < 1e-15);
}
