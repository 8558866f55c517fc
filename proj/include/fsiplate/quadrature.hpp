#pragma once

#include <Eigen/Eigenvalues>

#include "fsiplate/types.hpp"

namespace fsiplate {

enum class CellKind { Triangle, Tetrahedron };

struct QuadratureRule {
  CellKind kind;
  int exactness = 0;
  MatX points;   // n_points x dim, reference-cell coordinates
  VecX weights;  // sums to the reference measure (1/2 triangle, 1/6 tet)
};

namespace detail {

// Gauss nodes/weights for the Jacobi weight (1-x)^alpha on [0, 1], via
// Golub-Welsch: eigenvalues of the symmetric tridiagonal recurrence matrix
// are the nodes, weights come from the first eigenvector components.
// alpha = 0 reduces to Gauss-Legendre.
inline void gauss_jacobi_01(int n, int alpha, VecX& nodes, VecX& weights) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi_01: need n >= 1");
  const double a = static_cast<double>(alpha);
  VecX diag(n), sub(std::max(n - 1, 0));
  diag[0] = -a / (a + 2.0);  // (beta^2 - alpha^2)/((a+b)(a+b+2)) with beta = 0
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + a;
    diag[k] = (-a * a) / (s * (s + 2.0));
    const double b2 =
        4.0 * k * (k + a) * k * (k + a) / (s * s * (s + 1.0) * (s - 1.0));
    sub[k - 1] = std::sqrt(b2);
  }
  Eigen::SelfAdjointEigenSolver<MatX> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  // Total mass of (1-x)^alpha on [-1, 1].
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()[i];         // node on [-1, 1]
    const double v0 = es.eigenvectors()(0, i);    // first component
    nodes[i] = 0.5 * (1.0 + x);                   // map to [0, 1]
    // d integral over [0,1] = 2^{-alpha-1} * (integral over [-1,1])
    weights[i] = mu0 * v0 * v0 * std::pow(2.0, -a - 1.0);
  }
}

}  // namespace detail

// Conical-product rule (collapsed coordinates): Gauss-Legendre in the first
// direction, Gauss-Jacobi with weights (1-x) and (1-x)^2 absorbing the
// simplex Jacobian in the others. Exact for total degree <= exactness, all
// weights positive.
inline QuadratureRule quadrature_rule(CellKind kind, int exactness) {
  if (exactness < 0 || exactness > 30)
    throw std::invalid_argument("quadrature_rule: unsupported exactness degree " +
                                std::to_string(exactness));
  const int n = exactness / 2 + 1;  // Gauss: n points exact to degree 2n-1
  VecX x0, w0, x1, w1, x2, w2;
  detail::gauss_jacobi_01(n, 0, x0, w0);
  detail::gauss_jacobi_01(n, 1, x1, w1);

  QuadratureRule rule;
  rule.kind = kind;
  rule.exactness = exactness;
  if (kind == CellKind::Triangle) {
    rule.points.resize(n * n, 2);
    rule.weights.resize(n * n);
    int q = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++q) {
        const double eta = x1[j];
        rule.points(q, 0) = x0[i] * (1.0 - eta);
        rule.points(q, 1) = eta;
        rule.weights[q] = w0[i] * w1[j];
      }
  } else {
    detail::gauss_jacobi_01(n, 2, x2, w2);
    rule.points.resize(n * n * n, 3);
    rule.weights.resize(n * n * n);
    int q = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i, ++q) {
          const double zeta = x2[k];
          const double eta = x1[j];
          rule.points(q, 0) = x0[i] * (1.0 - eta) * (1.0 - zeta);
          rule.points(q, 1) = eta * (1.0 - zeta);
          rule.points(q, 2) = zeta;
          rule.weights[q] = w0[i] * w1[j] * w2[k];
        }
  }
  return rule;
}

}  // namespace fsiplate
