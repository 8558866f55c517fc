#pragma once

#include <array>

#include "fsiplate/quadrature.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

// Lagrange elements of degree 1 and 2 on the reference triangle
// {x,y >= 0, x+y <= 1} and tetrahedron {x,y,z >= 0, x+y+z <= 1}.
// Node order: vertices first, then edge midpoints; edges are enumerated by
// ascending local vertex pairs: (0,1), (0,2), (1,2) on triangles and
// (0,1), (0,2), (0,3), (1,2), (1,3), (2,3) on tetrahedra.
struct ReferenceElement {
  CellKind kind;
  int degree = 1;
  int dim = 2;
  int n_vertices = 3;
  int n_edges = 3;
  int n_nodes = 3;
  MatX nodes;  // n_nodes x dim reference coordinates

  static constexpr std::array<std::array<int, 2>, 3> tri_edges{
      {{0, 1}, {0, 2}, {1, 2}}};
  static constexpr std::array<std::array<int, 2>, 6> tet_edges{
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

  static ReferenceElement create(CellKind kind, int degree) {
    if (degree != 1 && degree != 2)
      throw std::invalid_argument("ReferenceElement: degree must be 1 or 2");
    ReferenceElement re;
    re.kind = kind;
    re.degree = degree;
    re.dim = (kind == CellKind::Triangle) ? 2 : 3;
    re.n_vertices = re.dim + 1;
    re.n_edges = (kind == CellKind::Triangle) ? 3 : 6;
    re.n_nodes = (degree == 1) ? re.n_vertices : re.n_vertices + re.n_edges;
    re.nodes.resize(re.n_nodes, re.dim);
    re.nodes.setZero();
    for (int v = 1; v < re.n_vertices; ++v) re.nodes(v, v - 1) = 1.0;
    if (degree == 2) {
      for (int e = 0; e < re.n_edges; ++e) {
        const auto [a, b] = re.edge_vertices(e);
        re.nodes.row(re.n_vertices + e) =
            0.5 * (re.nodes.row(a) + re.nodes.row(b));
      }
    }
    return re;
  }

  std::array<int, 2> edge_vertices(int e) const {
    return (kind == CellKind::Triangle)
               ? std::array<int, 2>{tri_edges[e][0], tri_edges[e][1]}
               : std::array<int, 2>{tet_edges[e][0], tet_edges[e][1]};
  }

  // Barycentric coordinates (lambda_0 = 1 - sum, lambda_i = x_{i-1}) and
  // their constant reference gradients.
  VecX shape_values(const VecX& x) const {
    VecX lam(n_vertices);
    lam[0] = 1.0 - x.sum();
    for (int i = 0; i < dim; ++i) lam[i + 1] = x[i];
    VecX phi(n_nodes);
    if (degree == 1) {
      phi = lam;
    } else {
      for (int v = 0; v < n_vertices; ++v) phi[v] = lam[v] * (2.0 * lam[v] - 1.0);
      for (int e = 0; e < n_edges; ++e) {
        const auto [a, b] = edge_vertices(e);
        phi[n_vertices + e] = 4.0 * lam[a] * lam[b];
      }
    }
    return phi;
  }

  // Rows: shape functions; columns: reference derivatives.
  MatX shape_gradients(const VecX& x) const {
    MatX dlam(n_vertices, dim);  // gradients of barycentric coordinates
    dlam.row(0).setConstant(-1.0);
    for (int i = 0; i < dim; ++i) {
      dlam.row(i + 1).setZero();
      dlam(i + 1, i) = 1.0;
    }
    MatX grad(n_nodes, dim);
    if (degree == 1) {
      grad = dlam;
      return grad;
    }
    VecX lam(n_vertices);
    lam[0] = 1.0 - x.sum();
    for (int i = 0; i < dim; ++i) lam[i + 1] = x[i];
    for (int v = 0; v < n_vertices; ++v)
      grad.row(v) = (4.0 * lam[v] - 1.0) * dlam.row(v);
    for (int e = 0; e < n_edges; ++e) {
      const auto [a, b] = edge_vertices(e);
      grad.row(n_vertices + e) = 4.0 * (lam[a] * dlam.row(b) + lam[b] * dlam.row(a));
    }
    return grad;
  }

  // Shape values/gradients tabulated at every quadrature point; assembly
  // reuses one tabulation across all elements.
  struct Tabulation {
    MatX values;                // n_q x n_nodes
    std::vector<MatX> grads;    // n_q entries of n_nodes x dim
  };
  Tabulation tabulate(const QuadratureRule& rule) const {
    Tabulation tab;
    const int nq = static_cast<int>(rule.points.rows());
    tab.values.resize(nq, n_nodes);
    tab.grads.reserve(nq);
    for (int q = 0; q < nq; ++q) {
      VecX xq = rule.points.row(q).transpose();
      tab.values.row(q) = shape_values(xq).transpose();
      tab.grads.push_back(shape_gradients(xq));
    }
    return tab;
  }
};

}  // namespace fsiplate
