#pragma once

#include <cmath>
#include <numbers>

#include "fsiplate/fe_space.hpp"
#include "fsiplate/params.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

inline constexpr double kPi = std::numbers::pi;

// Manufactured solution on the box [0,1]^2 x [-1,0] with the plate on the
// top face. Built from the one-dimensional profile
//   f(x) = sin^2(pi x) sin(2 pi x) = sin(2 pi x)/2 - sin(4 pi x)/4,
// its antiderivative a (a(0) = 0), and the depth profiles
//   c1(z) = (pi/2) sin(pi (z+1)),   d(z) = sin^2(pi (z+1)/2),   d' = c1.
// The fields
//   u1 =  zeta a(x) f(y) c1(z) e^{-t},   u2 = 0,
//   u3 = -zeta f(x) f(y) d(z) e^{-t},    p  = 0,
//   w  =  zeta f(x) f(y) e^{-t},         z  = -Laplacian(w)
// are divergence-free, vanish on the side and bottom walls, and satisfy
// the kinematic interface condition u3(x, y, 0, t) = dw/dt exactly.
struct ExactSolution {
  double zeta = 1.0 / (60.0 * std::pow(kPi, 4));

  // 1D building blocks.
  static double f(double x) {
    return 0.5 * std::sin(2.0 * kPi * x) - 0.25 * std::sin(4.0 * kPi * x);
  }
  static double df(double x) {
    return kPi * (std::cos(2.0 * kPi * x) - std::cos(4.0 * kPi * x));
  }
  static double d2f(double x) {
    return kPi * kPi *
           (-2.0 * std::sin(2.0 * kPi * x) + 4.0 * std::sin(4.0 * kPi * x));
  }
  static double d3f(double x) {
    return std::pow(kPi, 3) *
           (-4.0 * std::cos(2.0 * kPi * x) + 16.0 * std::cos(4.0 * kPi * x));
  }
  static double d4f(double x) {
    return std::pow(kPi, 4) *
           (8.0 * std::sin(2.0 * kPi * x) - 64.0 * std::sin(4.0 * kPi * x));
  }
  static double a(double x) {
    return -std::cos(2.0 * kPi * x) / (4.0 * kPi) +
           std::cos(4.0 * kPi * x) / (16.0 * kPi) + 3.0 / (16.0 * kPi);
  }
  static double c1(double z) { return 0.5 * kPi * std::sin(kPi * (z + 1.0)); }
  static double dc1(double z) {
    return 0.5 * kPi * kPi * std::cos(kPi * (z + 1.0));
  }
  static double d2c1(double z) {
    return -0.5 * std::pow(kPi, 3) * std::sin(kPi * (z + 1.0));
  }
  static double d(double z) {
    const double s = std::sin(0.5 * kPi * (z + 1.0));
    return s * s;
  }

  // Fluid velocity and pressure.
  Vec3 velocity(const Vec3& x, double t) const {
    const double e = std::exp(-t);
    return {zeta * a(x[0]) * f(x[1]) * c1(x[2]) * e, 0.0,
            -zeta * f(x[0]) * f(x[1]) * d(x[2]) * e};
  }
  Vec3 dt_velocity(const Vec3& x, double t) const { return -velocity(x, t); }
  Vec3 laplacian_velocity(const Vec3& x, double t) const {
    const double e = std::exp(-t);
    // a'' = f', d'' = c1'.
    const double l1 = (df(x[0]) * f(x[1]) * c1(x[2]) +
                       a(x[0]) * d2f(x[1]) * c1(x[2]) +
                       a(x[0]) * f(x[1]) * d2c1(x[2]));
    const double l3 = (d2f(x[0]) * f(x[1]) * d(x[2]) +
                       f(x[0]) * d2f(x[1]) * d(x[2]) +
                       f(x[0]) * f(x[1]) * dc1(x[2]));
    return {zeta * l1 * e, 0.0, -zeta * l3 * e};
  }
  // Rows: components; columns: spatial derivatives.
  Eigen::Matrix3d grad_velocity(const Vec3& x, double t) const {
    const double e = std::exp(-t);
    Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
    g(0, 0) = zeta * f(x[0]) * f(x[1]) * c1(x[2]) * e;  // a' = f
    g(0, 1) = zeta * a(x[0]) * df(x[1]) * c1(x[2]) * e;
    g(0, 2) = zeta * a(x[0]) * f(x[1]) * dc1(x[2]) * e;
    g(2, 0) = -zeta * df(x[0]) * f(x[1]) * d(x[2]) * e;
    g(2, 1) = -zeta * f(x[0]) * df(x[1]) * d(x[2]) * e;
    g(2, 2) = -zeta * f(x[0]) * f(x[1]) * c1(x[2]) * e;  // d' = c1
    return g;
  }
  double pressure(const Vec3&, double) const { return 0.0; }
  Vec3 grad_pressure(const Vec3&, double) const { return Vec3::Zero(); }

  // Plate deflection and the auxiliary variable z = -Laplacian(w).
  double w(const Vec2& x, double t) const {
    return zeta * f(x[0]) * f(x[1]) * std::exp(-t);
  }
  double dt_w(const Vec2& x, double t) const { return -w(x, t); }
  double dtt_w(const Vec2& x, double t) const { return w(x, t); }
  Vec2 grad_w(const Vec2& x, double t) const {
    const double e = std::exp(-t);
    return {zeta * df(x[0]) * f(x[1]) * e, zeta * f(x[0]) * df(x[1]) * e};
  }
  double z(const Vec2& x, double t) const {
    return -zeta * (d2f(x[0]) * f(x[1]) + f(x[0]) * d2f(x[1])) * std::exp(-t);
  }
  double dtt_z(const Vec2& x, double t) const { return z(x, t); }
  Vec2 grad_z(const Vec2& x, double t) const {
    const double e = std::exp(-t);
    return {-zeta * (d3f(x[0]) * f(x[1]) + df(x[0]) * d2f(x[1])) * e,
            -zeta * (d2f(x[0]) * df(x[1]) + f(x[0]) * d3f(x[1])) * e};
  }
  double laplacian_z(const Vec2& x, double t) const {
    return -zeta *
           (d4f(x[0]) * f(x[1]) + 2.0 * d2f(x[0]) * d2f(x[1]) +
            f(x[0]) * d4f(x[1])) *
           std::exp(-t);
  }

  // Forcing terms recovered by substituting the fields into the strong
  // equations (pressure is identically zero, so its trace contributes
  // nothing to the plate load).
  Vec3 fluid_forcing(const Vec3& x, double t, const PhysicalParams& p) const {
    return p.rho_f * dt_velocity(x, t) - p.nu_f * laplacian_velocity(x, t) +
           grad_pressure(x, t);
  }
  double plate_forcing(const Vec2& x, double t, const PhysicalParams& p,
                       double omega) const {
    return omega * (p.rho_p * dtt_w(x, t) + p.rho_rot * dtt_z(x, t)) -
           p.flexural_rigidity * laplacian_z(x, t);
  }
};

inline Vec3 fluid_forcing(const Vec3& x, double t, const PhysicalParams& p) {
  return ExactSolution{}.fluid_forcing(x, t, p);
}
inline double plate_forcing(const Vec2& x, double t, const PhysicalParams& p,
                            double omega) {
  return ExactSolution{}.plate_forcing(x, t, p, omega);
}

enum class NormType { L2, H1 };

// Values (and, for the full H1 norm, gradients) of the exact field a
// discrete solution is compared against: one row per component.
struct ExactField {
  std::function<VecX(const VecX& x, double t)> value;
  std::function<MatX(const VecX& x, double t)> gradient;
};

// sqrt(Int |u_h - u|^2) or the full H1 norm sqrt(L2^2 + Int |grad(u_h - u)|^2),
// integrated with an exactness-8 rule so quadrature cannot pollute observed
// convergence rates.
inline double error_norm(const FESpace& s, const VecX& coeffs,
                         const ExactField& exact, double t, NormType norm) {
  if (coeffs.size() != s.dof_count())
    throw std::invalid_argument("error_norm: coefficient size mismatch");
  const auto rule = quadrature_rule(
      s.mesh3 ? CellKind::Tetrahedron : CellKind::Triangle, 8);
  const auto tab = s.ref.tabulate(rule);
  const int dim = s.dim();
  double acc = 0.0;
  for (Index el = 0; el < s.n_elements(); ++el) {
    Eigen::MatrixXd j(dim, dim);
    if (s.mesh3) {
      const auto& tet = s.mesh3->tets[el];
      for (int c = 0; c < 3; ++c)
        j.col(c) = (s.mesh3->vertices.row(tet[c + 1]) -
                    s.mesh3->vertices.row(tet[0]))
                       .transpose();
    } else {
      const auto& tri = s.mesh2->tris[el];
      for (int c = 0; c < 2; ++c)
        j.col(c) = (s.mesh2->vertices.row(tri[c + 1]) -
                    s.mesh2->vertices.row(tri[0]))
                       .transpose();
    }
    const double detj = std::abs(j.determinant());
    const MatX jinv = j.inverse();
    const auto& dofs = s.element_dofs[el];
    for (Index q = 0; q < rule.weights.size(); ++q) {
      // Physical quadrature point.
      VecX xq;
      if (s.mesh3) {
        const auto& tet = s.mesh3->tets[el];
        Vec3 x = s.mesh3->vertices.row(tet[0]).transpose();
        for (int c = 0; c < 3; ++c)
          x += rule.points(q, c) * (s.mesh3->vertices.row(tet[c + 1]) -
                                    s.mesh3->vertices.row(tet[0]))
                                       .transpose();
        xq = x;
      } else {
        const auto& tri = s.mesh2->tris[el];
        Vec2 x = s.mesh2->vertices.row(tri[0]).transpose();
        for (int c = 0; c < 2; ++c)
          x += rule.points(q, c) * (s.mesh2->vertices.row(tri[c + 1]) -
                                    s.mesh2->vertices.row(tri[0]))
                                       .transpose();
        xq = x;
      }
      const double wq = rule.weights[q] * detj;
      const VecX ex = exact.value(xq, t);
      for (int c = 0; c < s.components; ++c) {
        double uh = 0.0;
        for (int i = 0; i < s.ref.n_nodes; ++i)
          uh += coeffs[s.global_dof(c, dofs[i])] * tab.values(q, i);
        const double diff = uh - ex[c];
        acc += wq * diff * diff;
      }
      if (norm == NormType::H1) {
        const MatX grad_phys = tab.grads[q] * jinv;  // n_nodes x dim
        const MatX exg = exact.gradient(xq, t);      // components x dim
        for (int c = 0; c < s.components; ++c)
          for (int dcomp = 0; dcomp < dim; ++dcomp) {
            double gh = 0.0;
            for (int i = 0; i < s.ref.n_nodes; ++i)
              gh += coeffs[s.global_dof(c, dofs[i])] * grad_phys(i, dcomp);
            const double diff = gh - exg(c, dcomp);
            acc += wq * diff * diff;
          }
      }
    }
  }
  return std::sqrt(acc);
}

// rate_i = log(e_{i-1}/e_i) / log(step_{i-1}/step_i) for each consecutive
// refinement pair.
inline std::vector<double> observed_rate(const std::vector<double>& errors,
                                         const std::vector<double>& steps) {
  if (errors.size() < 2 || errors.size() != steps.size())
    throw std::invalid_argument("observed_rate: need >= 2 matching entries");
  for (size_t i = 1; i < steps.size(); ++i)
    if (!(steps[i] < steps[i - 1]))
      throw std::invalid_argument("observed_rate: steps must strictly decrease");
  for (double e : errors)
    if (!(e > 0.0)) throw std::domain_error("observed_rate: errors must be positive");
  std::vector<double> rates;
  rates.reserve(errors.size() - 1);
  for (size_t i = 1; i < errors.size(); ++i)
    rates.push_back(std::log(errors[i - 1] / errors[i]) /
                    std::log(steps[i - 1] / steps[i]));
  return rates;
}

// Ready-made ExactField adapters for the five unknowns.
inline ExactField exact_velocity_field(const ExactSolution& sol) {
  return {[sol](const VecX& x, double t) { return VecX(sol.velocity(Vec3(x), t)); },
          [sol](const VecX& x, double t) { return MatX(sol.grad_velocity(Vec3(x), t)); }};
}
inline ExactField exact_pressure_field(const ExactSolution& sol) {
  return {[sol](const VecX& x, double t) {
            VecX v(1);
            v[0] = sol.pressure(Vec3(x), t);
            return v;
          },
          [sol](const VecX& x, double t) {
            return MatX(sol.grad_pressure(Vec3(x), t).transpose());
          }};
}
inline ExactField exact_w_field(const ExactSolution& sol) {
  return {[sol](const VecX& x, double t) {
            VecX v(1);
            v[0] = sol.w(Vec2(x), t);
            return v;
          },
          [sol](const VecX& x, double t) {
            return MatX(sol.grad_w(Vec2(x), t).transpose());
          }};
}
inline ExactField exact_z_field(const ExactSolution& sol) {
  return {[sol](const VecX& x, double t) {
            VecX v(1);
            v[0] = sol.z(Vec2(x), t);
            return v;
          },
          [sol](const VecX& x, double t) {
            return MatX(sol.grad_z(Vec2(x), t).transpose());
          }};
}

}  // namespace fsiplate
