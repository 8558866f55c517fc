#pragma once

#include <map>
#include <vector>

#include "fsiplate/mesh.hpp"
#include "fsiplate/reference_element.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

// Which unknown the space hosts; determines the homogeneous Dirichlet
// constraint mask. Velocity carries u = 0 on S plus u1 = u2 = 0 on the
// plate face (the remaining interface u3 values are imposed dynamically by
// the coupled solver). Plate deflection spaces carry w = z = 0 on the plate
// boundary. Pressure and multiplier are unconstrained.
enum class SpaceRole { Velocity, Pressure, PlateW, PlateZ, Multiplier };

// Continuous Lagrange space of degree 1 or 2, scalar or vector valued.
// Scalar DOFs are numbered vertices first then edge midpoints (degree 2),
// edges sorted lexicographically by vertex pair; vector DOFs are
// component-major: global = component * n_scalar + scalar.
struct FESpace {
  const Mesh3D* mesh3 = nullptr;  // exactly one of mesh3 / mesh2 is set
  const Mesh2D* mesh2 = nullptr;
  int degree = 1;
  int components = 1;
  SpaceRole role = SpaceRole::Pressure;
  ReferenceElement ref;

  Index n_mesh_vertices = 0;
  Index n_scalar = 0;
  std::vector<std::array<Index, 2>> edges;          // sorted vertex pairs
  std::map<std::array<Index, 2>, Index> edge_index;
  MatX scalar_coords;                               // n_scalar x dim
  std::vector<std::vector<Index>> element_dofs;     // reference node order

  // Scalar-node boundary classification (fluid: S / plate face; plate
  // mesh: domain boundary) and the per-global-DOF homogeneous mask.
  std::vector<char> on_s, on_plate, on_boundary;
  std::vector<char> fixed;

  // Fluid velocity only: scalar nodes on the open plate face (on_plate and
  // not on_s); these carry the time-dependent interface Dirichlet data.
  std::vector<Index> interface_scalar;

  int dim() const { return mesh3 ? 3 : 2; }
  Index n_elements() const {
    return mesh3 ? mesh3->n_tets() : mesh2->n_tris();
  }
  Index dof_count() const { return components * n_scalar; }
  Index global_dof(int comp, Index scalar) const {
    return static_cast<Index>(comp) * n_scalar + scalar;
  }
  VecX dof_coordinate(Index g) const {
    return scalar_coords.row(g % n_scalar).transpose();
  }
  Index edge_dof(Index va, Index vb) const {
    std::array<Index, 2> key{va, vb};
    if (key[0] > key[1]) std::swap(key[0], key[1]);
    auto it = edge_index.find(key);
    if (it == edge_index.end())
      throw std::invalid_argument("FESpace: no such edge DOF");
    return n_mesh_vertices + it->second;
  }
};

namespace detail {

template <typename Element>
void number_edges(FESpace& s, const std::vector<Element>& elements) {
  const auto& re = s.ref;
  for (const auto& el : elements)
    for (int e = 0; e < re.n_edges; ++e) {
      const auto [a, b] = re.edge_vertices(e);
      std::array<Index, 2> key{el[a], el[b]};
      if (key[0] > key[1]) std::swap(key[0], key[1]);
      s.edge_index.emplace(key, 0);
    }
  s.edges.reserve(s.edge_index.size());
  for (auto& [key, id] : s.edge_index) {  // std::map iterates sorted
    id = static_cast<Index>(s.edges.size());
    s.edges.push_back(key);
  }
}

inline void finish_element_dofs(FESpace& s) {
  const auto& re = s.ref;
  const Index nel = s.n_elements();
  s.element_dofs.assign(nel, {});
  for (Index t = 0; t < nel; ++t) {
    auto& dofs = s.element_dofs[t];
    dofs.resize(re.n_nodes);
    auto vertex = [&](int v) {
      return s.mesh3 ? s.mesh3->tets[t][v] : s.mesh2->tris[t][v];
    };
    for (int v = 0; v < re.n_vertices; ++v) dofs[v] = vertex(v);
    if (s.degree == 2)
      for (int e = 0; e < re.n_edges; ++e) {
        const auto [a, b] = re.edge_vertices(e);
        dofs[re.n_vertices + e] = s.edge_dof(vertex(a), vertex(b));
      }
  }
}

inline void fill_scalar_coords(FESpace& s) {
  const int d = s.dim();
  s.scalar_coords.resize(s.n_scalar, d);
  for (Index v = 0; v < s.n_mesh_vertices; ++v) {
    if (s.mesh3)
      s.scalar_coords.row(v) = s.mesh3->vertices.row(v);
    else
      s.scalar_coords.row(v) = s.mesh2->vertices.row(v);
  }
  for (size_t e = 0; e < s.edges.size(); ++e)
    s.scalar_coords.row(s.n_mesh_vertices + static_cast<Index>(e)) =
        0.5 * (s.scalar_coords.row(s.edges[e][0]) +
               s.scalar_coords.row(s.edges[e][1]));
}

// Mark the scalar nodes lying on each boundary part. A vertex is on a part
// if some boundary face carries it; an edge node is on a part if a boundary
// face contains both endpoints (its midpoint then lies on the face plane).
inline void classify_fluid_nodes(FESpace& s) {
  s.on_s.assign(s.n_scalar, 0);
  s.on_plate.assign(s.n_scalar, 0);
  auto mark = [&](std::vector<char>& flags, const std::array<Index, 3>& f) {
    for (int c = 0; c < 3; ++c) flags[f.at(c)] = 1;
    if (s.degree == 2)
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
          flags[s.edge_dof(f.at(a), f.at(b))] = 1;
  };
  for (const auto& face : s.mesh3->boundary_faces)
    mark(face.tag == BoundaryTag::Plate ? s.on_plate : s.on_s, face.v);
}

inline void classify_plate_nodes(FESpace& s) {
  s.on_boundary.assign(s.n_scalar, 0);
  for (const auto& e : s.mesh2->boundary_edges) {
    s.on_boundary[e[0]] = 1;
    s.on_boundary[e[1]] = 1;
    if (s.degree == 2) s.on_boundary[s.edge_dof(e[0], e[1])] = 1;
  }
}

inline void apply_role_constraints(FESpace& s) {
  s.fixed.assign(s.dof_count(), 0);
  switch (s.role) {
    case SpaceRole::Velocity:
      for (Index n = 0; n < s.n_scalar; ++n) {
        if (s.on_s[n])
          for (int c = 0; c < s.components; ++c) s.fixed[s.global_dof(c, n)] = 1;
        if (s.on_plate[n])
          for (int c = 0; c + 1 < s.components; ++c)
            s.fixed[s.global_dof(c, n)] = 1;
        if (s.on_plate[n] && !s.on_s[n]) s.interface_scalar.push_back(n);
      }
      break;
    case SpaceRole::PlateW:
    case SpaceRole::PlateZ:
      for (Index n = 0; n < s.n_scalar; ++n)
        if (s.on_boundary[n]) s.fixed[n] = 1;
      break;
    case SpaceRole::Pressure:
    case SpaceRole::Multiplier:
      break;
  }
}

}  // namespace detail

inline FESpace build_space(const Mesh3D& mesh, int degree, int components,
                           SpaceRole role) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("build_space: degree must be 1 or 2");
  if (role == SpaceRole::PlateW || role == SpaceRole::PlateZ ||
      role == SpaceRole::Multiplier)
    throw std::invalid_argument("build_space: plate roles need a plate mesh");
  FESpace s;
  s.mesh3 = &mesh;
  s.degree = degree;
  s.components = components;
  s.role = role;
  s.ref = ReferenceElement::create(CellKind::Tetrahedron, degree);
  s.n_mesh_vertices = mesh.n_vertices();
  if (degree == 2) detail::number_edges(s, mesh.tets);
  s.n_scalar = s.n_mesh_vertices + static_cast<Index>(s.edges.size());
  detail::finish_element_dofs(s);
  detail::fill_scalar_coords(s);
  detail::classify_fluid_nodes(s);
  detail::apply_role_constraints(s);
  return s;
}

inline FESpace build_space(const Mesh2D& mesh, int degree, int components,
                           SpaceRole role) {
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("build_space: degree must be 1 or 2");
  if (role == SpaceRole::Velocity || role == SpaceRole::Pressure)
    throw std::invalid_argument("build_space: fluid roles need a fluid mesh");
  FESpace s;
  s.mesh2 = &mesh;
  s.degree = degree;
  s.components = components;
  s.role = role;
  s.ref = ReferenceElement::create(CellKind::Triangle, degree);
  s.n_mesh_vertices = mesh.n_vertices();
  if (degree == 2) detail::number_edges(s, mesh.tris);
  s.n_scalar = s.n_mesh_vertices + static_cast<Index>(s.edges.size());
  detail::finish_element_dofs(s);
  detail::fill_scalar_coords(s);
  detail::classify_plate_nodes(s);
  detail::apply_role_constraints(s);
  return s;
}

// Nodal interpolation: coefficients are point values of f at DOF
// coordinates. Scalar overloads for either mesh dimension, and a vector
// overload for the 3-component velocity space.
inline VecX interpolate(const FESpace& s, const ScalarField3& f, double t) {
  if (s.components != 1 || !s.mesh3)
    throw std::invalid_argument("interpolate: scalar 3D field needs a scalar fluid space");
  VecX c(s.n_scalar);
  for (Index n = 0; n < s.n_scalar; ++n)
    c[n] = f(s.scalar_coords.row(n).transpose(), t);
  return c;
}

inline VecX interpolate(const FESpace& s, const ScalarField2& f, double t) {
  if (s.components != 1 || !s.mesh2)
    throw std::invalid_argument("interpolate: scalar 2D field needs a scalar plate space");
  VecX c(s.n_scalar);
  for (Index n = 0; n < s.n_scalar; ++n)
    c[n] = f(s.scalar_coords.row(n).transpose(), t);
  return c;
}

inline VecX interpolate(const FESpace& s, const VectorField3& f, double t) {
  if (s.components != 3 || !s.mesh3)
    throw std::invalid_argument("interpolate: vector field needs a 3-component fluid space");
  VecX c(s.dof_count());
  for (Index n = 0; n < s.n_scalar; ++n) {
    const Vec3 v = f(s.scalar_coords.row(n).transpose(), t);
    for (int comp = 0; comp < 3; ++comp) c[s.global_dof(comp, n)] = v[comp];
  }
  return c;
}

// Point evaluation Sum_i c_i phi_i(x) via element location and reference
// mapping; returns one value per component.
inline VecX evaluate(const FESpace& s, const VecX& coeffs, const VecX& point) {
  if (coeffs.size() != s.dof_count())
    throw std::invalid_argument("evaluate: coefficient size mismatch");
  Index cell;
  VecX xi;
  if (s.mesh3) {
    auto [t, x] = s.mesh3->find_cell(point);
    cell = t;
    xi = x;
  } else {
    auto [t, x] = s.mesh2->find_cell(point);
    cell = t;
    xi = x;
  }
  const VecX phi = s.ref.shape_values(xi);
  VecX value = VecX::Zero(s.components);
  const auto& dofs = s.element_dofs[cell];
  for (int c = 0; c < s.components; ++c)
    for (int i = 0; i < s.ref.n_nodes; ++i)
      value[c] += coeffs[s.global_dof(c, dofs[i])] * phi[i];
  return value;
}

inline double evaluate_scalar(const FESpace& s, const VecX& coeffs,
                              const VecX& point) {
  return evaluate(s, coeffs, point)[0];
}

}  // namespace fsiplate
