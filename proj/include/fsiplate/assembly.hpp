#pragma once

#include <vector>

#include "fsiplate/fe_space.hpp"
#include "fsiplate/quadrature.hpp"
#include "fsiplate/sparse.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

namespace detail {

// Affine element geometry: Jacobian determinant (volume factor) and the
// matrix mapping reference gradients to physical ones (rows * jinv).
struct ElementGeometry {
  double detj = 0.0;
  MatX jinv;
};

inline ElementGeometry tet_geometry(const Mesh3D& m, Index t) {
  Eigen::Matrix3d j;
  const auto& tet = m.tets[t];
  for (int c = 0; c < 3; ++c)
    j.col(c) = (m.vertices.row(tet[c + 1]) - m.vertices.row(tet[0])).transpose();
  ElementGeometry g;
  g.detj = j.determinant();
  g.jinv = j.inverse();
  return g;
}

inline ElementGeometry tri_geometry(const Mesh2D& m, Index t) {
  Eigen::Matrix2d j;
  const auto& tri = m.tris[t];
  j.col(0) = (m.vertices.row(tri[1]) - m.vertices.row(tri[0])).transpose();
  j.col(1) = (m.vertices.row(tri[2]) - m.vertices.row(tri[0])).transpose();
  ElementGeometry g;
  g.detj = j.determinant();
  g.jinv = j.inverse();
  return g;
}

inline ElementGeometry geometry(const FESpace& s, Index t) {
  return s.mesh3 ? tet_geometry(*s.mesh3, t) : tri_geometry(*s.mesh2, t);
}

// Map a reference quadrature point into element t.
inline VecX physical_point(const FESpace& s, Index t, const VecX& xi) {
  if (s.mesh3) {
    const auto& tet = s.mesh3->tets[t];
    Vec3 x = s.mesh3->vertices.row(tet[0]).transpose();
    for (int c = 0; c < 3; ++c)
      x += xi[c] * (s.mesh3->vertices.row(tet[c + 1]) -
                    s.mesh3->vertices.row(tet[0]))
                       .transpose();
    return x;
  }
  const auto& tri = s.mesh2->tris[t];
  Vec2 x = s.mesh2->vertices.row(tri[0]).transpose();
  for (int c = 0; c < 2; ++c)
    x += xi[c] *
         (s.mesh2->vertices.row(tri[c + 1]) - s.mesh2->vertices.row(tri[0]))
             .transpose();
  return x;
}

inline QuadratureRule assembly_rule(const FESpace& s, int degree) {
  return quadrature_rule(s.mesh3 ? CellKind::Tetrahedron : CellKind::Triangle,
                         2 * degree + 1);
}

inline void require_same_mesh(const FESpace& a, const FESpace& b,
                              const char* what) {
  const bool same = (a.mesh3 && a.mesh3 == b.mesh3) || (a.mesh2 && a.mesh2 == b.mesh2);
  if (!same) throw std::invalid_argument(std::string(what) + ": spaces live on different meshes");
}

}  // namespace detail

// M_ij = coefficient * Int phi_j phi_i; for vector spaces the same scalar
// block repeats per component (component-major layout).
inline SparseMat assemble_mass(const FESpace& s, double coefficient = 1.0) {
  const auto rule = detail::assembly_rule(s, s.degree);
  const auto tab = s.ref.tabulate(rule);
  const int nn = s.ref.n_nodes;
  std::vector<Triplet> trips;
  for (Index t = 0; t < s.n_elements(); ++t) {
    const auto g = detail::geometry(s, t);
    MatX local = MatX::Zero(nn, nn);
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const double wq = rule.weights[q] * std::abs(g.detj) * coefficient;
      local.noalias() += wq * tab.values.row(q).transpose() * tab.values.row(q);
    }
    const auto& dofs = s.element_dofs[t];
    for (int c = 0; c < s.components; ++c)
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          trips.emplace_back(s.global_dof(c, dofs[i]), s.global_dof(c, dofs[j]),
                             local(i, j));
  }
  return from_triplets(s.dof_count(), s.dof_count(), trips);
}

// K_ij = coefficient * Int grad phi_j . grad phi_i (componentwise for
// vector spaces, i.e. the vector Laplacian).
inline SparseMat assemble_stiffness(const FESpace& s, double coefficient = 1.0) {
  const auto rule = detail::assembly_rule(s, s.degree);
  const auto tab = s.ref.tabulate(rule);
  const int nn = s.ref.n_nodes;
  std::vector<Triplet> trips;
  for (Index t = 0; t < s.n_elements(); ++t) {
    const auto g = detail::geometry(s, t);
    MatX local = MatX::Zero(nn, nn);
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const double wq = rule.weights[q] * std::abs(g.detj) * coefficient;
      const MatX grad = tab.grads[q] * g.jinv;  // physical gradients, rows
      local.noalias() += wq * grad * grad.transpose();
    }
    const auto& dofs = s.element_dofs[t];
    for (int c = 0; c < s.components; ++c)
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          trips.emplace_back(s.global_dof(c, dofs[i]), s.global_dof(c, dofs[j]),
                             local(i, j));
  }
  return from_triplets(s.dof_count(), s.dof_count(), trips);
}

// B_qj = Int q (div phi_j): rows are pressure test functions, columns the
// velocity DOFs (component c contributes its c-th partial derivative).
inline SparseMat assemble_divergence(const FESpace& vel, const FESpace& pres) {
  if (vel.components != 3 || pres.components != 1)
    throw std::invalid_argument("assemble_divergence: expects 3-vector velocity and scalar pressure");
  detail::require_same_mesh(vel, pres, "assemble_divergence");
  const auto rule = detail::assembly_rule(vel, std::max(vel.degree, pres.degree));
  const auto tab_v = vel.ref.tabulate(rule);
  const auto tab_p = pres.ref.tabulate(rule);
  std::vector<Triplet> trips;
  for (Index t = 0; t < vel.n_elements(); ++t) {
    const auto g = detail::geometry(vel, t);
    std::vector<MatX> grads(static_cast<size_t>(rule.weights.size()));
    for (Index q = 0; q < rule.weights.size(); ++q)
      grads[q] = tab_v.grads[q] * g.jinv;
    const auto& vdofs = vel.element_dofs[t];
    const auto& pdofs = pres.element_dofs[t];
    for (int i = 0; i < pres.ref.n_nodes; ++i)
      for (int j = 0; j < vel.ref.n_nodes; ++j)
        for (int c = 0; c < 3; ++c) {
          double acc = 0.0;
          for (Index q = 0; q < rule.weights.size(); ++q)
            acc += rule.weights[q] * std::abs(g.detj) * tab_p.values(q, i) *
                   grads[q](j, c);
          trips.emplace_back(pdofs[i], vel.global_dof(c, vdofs[j]), acc);
        }
  }
  return from_triplets(pres.dof_count(), vel.dof_count(), trips);
}

// C_gj = Int_plate lambda_g (phi_j)_3: the multiplier paired with the
// vertical velocity trace. Integration runs over plate triangles; the
// conforming trace map identifies each triangle's P2 nodes with fluid
// scalar DOFs, and the fluid basis restricted to the face is exactly the
// 2D P2 basis of the triangle.
inline SparseMat assemble_interface_velocity_coupling(const FESpace& vel,
                                                      const FESpace& mult,
                                                      const TraceMap& trace) {
  if (!vel.mesh3 || vel.components != 3 || vel.degree != 2)
    throw std::invalid_argument("assemble_interface_velocity_coupling: velocity must be fluid P2 vector");
  if (!mult.mesh2 || mult.components != 1)
    throw std::invalid_argument("assemble_interface_velocity_coupling: multiplier must be a plate scalar space");
  const Mesh2D& pm = *mult.mesh2;
  if (static_cast<Index>(trace.plate_to_fluid_vertex.size()) != pm.n_vertices() ||
      static_cast<Index>(trace.face_of_tri.size()) != pm.n_tris())
    throw std::invalid_argument("assemble_interface_velocity_coupling: trace map does not match plate mesh");

  const auto rule = quadrature_rule(CellKind::Triangle, 2 * 2 + 1);
  const auto trace_ref = ReferenceElement::create(CellKind::Triangle, 2);
  const auto tab_u = trace_ref.tabulate(rule);
  const auto tab_g = mult.ref.tabulate(rule);
  std::vector<Triplet> trips;
  for (Index t = 0; t < pm.n_tris(); ++t) {
    const auto g = detail::tri_geometry(pm, t);
    // Fluid scalar DOFs of the 6 trace nodes, in the triangle's node order.
    const auto& tri = pm.tris[t];
    std::array<Index, 6> fdofs;
    for (int v = 0; v < 3; ++v) fdofs.at(v) = trace.plate_to_fluid_vertex[tri[v]];
    for (int e = 0; e < 3; ++e) {
      const auto [a, b] = trace_ref.edge_vertices(e);
      fdofs.at(3 + e) = vel.edge_dof(trace.plate_to_fluid_vertex[tri[a]],
                                     trace.plate_to_fluid_vertex[tri[b]]);
    }
    const auto& gdofs = mult.element_dofs[t];
    for (int i = 0; i < mult.ref.n_nodes; ++i)
      for (int j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (Index q = 0; q < rule.weights.size(); ++q)
          acc += rule.weights[q] * std::abs(g.detj) * tab_g.values(q, i) *
                 tab_u.values(q, j);
        trips.emplace_back(gdofs[i], vel.global_dof(2, fdofs.at(j)), acc);
      }
  }
  return from_triplets(mult.dof_count(), vel.dof_count(), trips);
}

// C_ij = Int_plate lambda_i eta_j: mixed-degree mass coupling between the
// multiplier and the plate deflection spaces on the shared plate mesh.
inline SparseMat assemble_plate_multiplier_coupling(const FESpace& plate,
                                                    const FESpace& mult) {
  detail::require_same_mesh(plate, mult, "assemble_plate_multiplier_coupling");
  const auto rule = detail::assembly_rule(plate, std::max(plate.degree, mult.degree));
  const auto tab_w = plate.ref.tabulate(rule);
  const auto tab_g = mult.ref.tabulate(rule);
  std::vector<Triplet> trips;
  for (Index t = 0; t < plate.n_elements(); ++t) {
    const auto g = detail::geometry(plate, t);
    const auto& wdofs = plate.element_dofs[t];
    const auto& gdofs = mult.element_dofs[t];
    for (int i = 0; i < mult.ref.n_nodes; ++i)
      for (int j = 0; j < plate.ref.n_nodes; ++j) {
        double acc = 0.0;
        for (Index q = 0; q < rule.weights.size(); ++q)
          acc += rule.weights[q] * std::abs(g.detj) * tab_g.values(q, i) *
                 tab_w.values(q, j);
        trips.emplace_back(gdofs[i], wdofs[j], acc);
      }
  }
  return from_triplets(mult.dof_count(), plate.dof_count(), trips);
}

namespace detail {

// Load vector for a scalar space against an evaluator f(x, t).
template <typename PointEval>
VecX scalar_load(const FESpace& s, PointEval&& f) {
  const auto rule = detail::assembly_rule(s, s.degree);
  const auto tab = s.ref.tabulate(rule);
  VecX load = VecX::Zero(s.dof_count());
  for (Index t = 0; t < s.n_elements(); ++t) {
    const auto g = detail::geometry(s, t);
    const auto& dofs = s.element_dofs[t];
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const VecX xq = detail::physical_point(s, t, rule.points.row(q).transpose());
      const double fv = f(xq);
      const double wq = rule.weights[q] * std::abs(g.detj) * fv;
      for (int i = 0; i < s.ref.n_nodes; ++i) load[dofs[i]] += wq * tab.values(q, i);
    }
  }
  return load;
}

}  // namespace detail

// (r)_i = Int_plate eta_i and (m)_q = Int_fluid q_q: the two border columns
// enforcing the zero-mean constraints (s against plate tests, pressure
// mean-zero).
inline std::pair<VecX, VecX> assemble_mean_columns(const FESpace& plate,
                                                   const FESpace& pres) {
  if (!plate.mesh2 || !pres.mesh3)
    throw std::invalid_argument("assemble_mean_columns: expects plate and fluid spaces");
  VecX r = detail::scalar_load(plate, [](const VecX&) { return 1.0; });
  VecX m = detail::scalar_load(pres, [](const VecX&) { return 1.0; });
  return {std::move(r), std::move(m)};
}

inline VecX assemble_load(const FESpace& s, const ScalarField3& f, double t) {
  if (!s.mesh3 || s.components != 1)
    throw std::invalid_argument("assemble_load: scalar 3D field needs a scalar fluid space");
  return detail::scalar_load(s, [&](const VecX& x) { return f(Vec3(x), t); });
}

inline VecX assemble_load(const FESpace& s, const ScalarField2& f, double t) {
  if (!s.mesh2 || s.components != 1)
    throw std::invalid_argument("assemble_load: scalar 2D field needs a scalar plate space");
  return detail::scalar_load(s, [&](const VecX& x) { return f(Vec2(x), t); });
}

inline VecX assemble_load(const FESpace& s, const VectorField3& f, double t) {
  if (!s.mesh3 || s.components != 3)
    throw std::invalid_argument("assemble_load: vector field needs the fluid velocity space");
  const auto rule = detail::assembly_rule(s, s.degree);
  const auto tab = s.ref.tabulate(rule);
  VecX load = VecX::Zero(s.dof_count());
  for (Index el = 0; el < s.n_elements(); ++el) {
    const auto g = detail::geometry(s, el);
    const auto& dofs = s.element_dofs[el];
    for (Index q = 0; q < rule.weights.size(); ++q) {
      const Vec3 xq = detail::physical_point(s, el, rule.points.row(q).transpose());
      const Vec3 fv = f(xq, t);
      const double wq = rule.weights[q] * std::abs(g.detj);
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < s.ref.n_nodes; ++i)
          load[s.global_dof(c, dofs[i])] += wq * fv[c] * tab.values(q, i);
    }
  }
  return load;
}

// Every matrix and border vector of the coupled saddle-point problem, at
// unit coefficients; time-step and physical scalings are applied where the
// operators are formed so one assembly serves all runs on a given mesh.
struct BlockSystem {
  SparseMat m_u, k_u;  // fluid vector mass / stiffness
  SparseMat b_div;     // (pressure x velocity) divergence
  SparseMat c_u;       // (multiplier x velocity) interface trace coupling
  SparseMat m_w, k_w;  // plate deflection mass / stiffness (shared by w, z)
  SparseMat c_w;       // (multiplier x plate) coupling
  SparseMat m_q;       // pressure mass (norms)
  SparseMat m_g;       // multiplier mass (norms)
  VecX r;              // plate mean column: Int eta_i
  VecX m;              // pressure mean column: Int q_q
};

inline BlockSystem assemble_block_system(const FESpace& vel, const FESpace& pres,
                                         const FESpace& plate, const FESpace& mult,
                                         const TraceMap& trace) {
  BlockSystem b;
  b.m_u = assemble_mass(vel);
  b.k_u = assemble_stiffness(vel);
  b.b_div = assemble_divergence(vel, pres);
  b.c_u = assemble_interface_velocity_coupling(vel, mult, trace);
  b.m_w = assemble_mass(plate);
  b.k_w = assemble_stiffness(plate);
  b.c_w = assemble_plate_multiplier_coupling(plate, mult);
  b.m_q = assemble_mass(pres);
  b.m_g = assemble_mass(mult);
  auto [r, m] = assemble_mean_columns(plate, pres);
  b.r = std::move(r);
  b.m = std::move(m);
  return b;
}

}  // namespace fsiplate
