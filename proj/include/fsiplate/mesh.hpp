#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <ostream>
#include <vector>

#include "fsiplate/types.hpp"

namespace fsiplate {

enum class BoundaryTag { S, Plate };

struct Mesh3D {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
  std::vector<std::array<Index, 4>> tets;  // positive signed volume ordering
  struct BFace {
    std::array<Index, 3> v;
    BoundaryTag tag;
  };
  std::vector<BFace> boundary_faces;
  int nx = 0, ny = 0, nz = 0;
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();

  Index n_vertices() const { return static_cast<Index>(vertices.rows()); }
  Index n_tets() const { return static_cast<Index>(tets.size()); }

  double tet_volume(Index t) const {
    const auto& T = tets[t];
    Eigen::Matrix3d J;
    for (int c = 0; c < 3; ++c)
      J.col(c) = (vertices.row(T[c + 1]) - vertices.row(T[0])).transpose();
    return J.determinant() / 6.0;
  }

  // Locate the tet containing p and return its reference coordinates.
  // Structured first guess from the cell grid, then a brute-force sweep to
  // absorb boundary roundoff.
  std::pair<Index, Vec3> find_cell(const Vec3& p, double tol = 1e-10) const {
    auto test = [&](Index t, Vec3& xi) {
      const auto& T = tets[t];
      Eigen::Matrix3d J;
      for (int c = 0; c < 3; ++c)
        J.col(c) = (vertices.row(T[c + 1]) - vertices.row(T[0])).transpose();
      xi = J.partialPivLu().solve(p - vertices.row(T[0]).transpose());
      return xi.minCoeff() >= -tol && xi.sum() <= 1.0 + tol;
    };
    Vec3 xi;
    if (nx > 0) {
      const Vec3 d = (hi - lo).cwiseQuotient(Vec3(nx, ny, nz));
      const int ci = std::clamp(static_cast<int>(std::floor((p.x() - lo.x()) / d.x())), 0, nx - 1);
      const int cj = std::clamp(static_cast<int>(std::floor((p.y() - lo.y()) / d.y())), 0, ny - 1);
      const int ck = std::clamp(static_cast<int>(std::floor((p.z() - lo.z()) / d.z())), 0, nz - 1);
      const Index cell = static_cast<Index>((ck * ny + cj) * nx + ci);
      for (Index t = 6 * cell; t < 6 * cell + 6; ++t)
        if (test(t, xi)) return {t, xi};
    }
    for (Index t = 0; t < n_tets(); ++t)
      if (test(t, xi)) return {t, xi};
    throw OutOfDomainError("point outside fluid mesh");
  }
};

struct Mesh2D {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  std::vector<std::array<Index, 3>> tris;  // CCW orientation
  std::vector<std::array<Index, 2>> boundary_edges;

  Index n_vertices() const { return static_cast<Index>(vertices.rows()); }
  Index n_tris() const { return static_cast<Index>(tris.size()); }

  double tri_area(Index t) const {
    const auto& T = tris[t];
    const Vec2 a = vertices.row(T[1]) - vertices.row(T[0]);
    const Vec2 b = vertices.row(T[2]) - vertices.row(T[0]);
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
  }

  std::pair<Index, Vec2> find_cell(const Vec2& p, double tol = 1e-10) const {
    for (Index t = 0; t < n_tris(); ++t) {
      const auto& T = tris[t];
      Eigen::Matrix2d J;
      J.col(0) = (vertices.row(T[1]) - vertices.row(T[0])).transpose();
      J.col(1) = (vertices.row(T[2]) - vertices.row(T[0])).transpose();
      Vec2 xi = J.partialPivLu().solve(p - vertices.row(T[0]).transpose());
      if (xi.minCoeff() >= -tol && xi.sum() <= 1.0 + tol) return {t, xi};
    }
    throw OutOfDomainError("point outside plate mesh");
  }
};

// Identification of the plate triangulation with the PLATE-tagged part of
// the fluid boundary: plate triangle i is the (x, y) projection of fluid
// boundary face face_of_tri[i], and plate vertex v coincides with fluid
// vertex plate_to_fluid_vertex[v] on the top plane.
struct TraceMap {
  std::vector<Index> plate_to_fluid_vertex;
  std::vector<Index> face_of_tri;
};

// Structured box mesh: nx x ny x nz cells, each split into the six
// tetrahedra of the Kuhn (Freudenthal) subdivision. All six share the cell
// diagonal from the low to the high corner, so neighboring cells conform.
inline Mesh3D build_box_fluid_mesh(int nx, int ny, int nz, const Vec3& lo,
                                   const Vec3& hi) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("build_box_fluid_mesh: subdivisions must be >= 1");
  if (((hi - lo).array() <= 0.0).any())
    throw std::invalid_argument("build_box_fluid_mesh: degenerate bounds");

  Mesh3D m;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  m.lo = lo;
  m.hi = hi;

  const Index nvx = nx + 1, nvy = ny + 1, nvz = nz + 1;
  m.vertices.resize(static_cast<Eigen::Index>(nvx) * nvy * nvz, 3);
  auto vid = [&](Index i, Index j, Index k) { return (k * nvy + j) * nvx + i; };
  for (Index k = 0; k < nvz; ++k)
    for (Index j = 0; j < nvy; ++j)
      for (Index i = 0; i < nvx; ++i)
        m.vertices.row(vid(i, j, k)) =
            lo + Vec3(i * (hi.x() - lo.x()) / nx, j * (hi.y() - lo.y()) / ny,
                      k * (hi.z() - lo.z()) / nz);

  // Vertex paths low corner -> high corner, one per axis permutation.
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  m.tets.reserve(static_cast<size_t>(nx) * ny * nz * 6);
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i)
        for (const auto& perm : perms) {
          std::array<Index, 3> ofs{0, 0, 0};
          std::array<Index, 4> tet;
          tet[0] = vid(i, j, k);
          for (int s = 0; s < 3; ++s) {
            ofs[perm[s]] = 1;
            tet[s + 1] = vid(i + ofs[0], j + ofs[1], k + ofs[2]);
          }
          m.tets.push_back(tet);
          if (m.tet_volume(m.n_tets() - 1) < 0.0)
            std::swap(m.tets.back()[2], m.tets.back()[3]);
        }

  // Faces seen exactly once are boundary faces; tag the top plane as the
  // plate, everything else as S.
  std::map<std::array<Index, 3>, int> face_count;
  static constexpr std::array<std::array<int, 3>, 4> local_faces{
      {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};
  for (const auto& tet : m.tets)
    for (const auto& lf : local_faces) {
      std::array<Index, 3> f{tet[lf[0]], tet[lf[1]], tet[lf[2]]};
      std::sort(f.begin(), f.end());
      ++face_count[f];
    }
  const double ztol = 1e-12 * (hi - lo).norm();
  for (const auto& [f, count] : face_count) {
    if (count != 1) continue;
    const bool on_top = (std::abs(m.vertices(f[0], 2) - hi.z()) <= ztol &&
                         std::abs(m.vertices(f[1], 2) - hi.z()) <= ztol &&
                         std::abs(m.vertices(f[2], 2) - hi.z()) <= ztol);
    m.boundary_faces.push_back({f, on_top ? BoundaryTag::Plate : BoundaryTag::S});
  }
  return m;
}

// The plate mesh is the exact trace of the fluid mesh on the top plane, so
// interface meshes conform by construction (h_f = h_p there).
inline std::pair<Mesh2D, TraceMap> extract_plate_mesh(const Mesh3D& m) {
  Mesh2D p;
  TraceMap tm;
  std::map<Index, Index> fluid_to_plate;
  std::vector<Index> plate_to_fluid;
  for (Index bf = 0; bf < static_cast<Index>(m.boundary_faces.size()); ++bf) {
    const auto& face = m.boundary_faces[bf];
    if (face.tag != BoundaryTag::Plate) continue;
    std::array<Index, 3> tri;
    for (int c = 0; c < 3; ++c) {
      auto [it, inserted] =
          fluid_to_plate.try_emplace(face.v[c], static_cast<Index>(plate_to_fluid.size()));
      if (inserted) plate_to_fluid.push_back(face.v[c]);
      tri[c] = it->second;
    }
    p.tris.push_back(tri);
    tm.face_of_tri.push_back(bf);
  }
  if (p.tris.empty()) throw std::invalid_argument("extract_plate_mesh: no PLATE faces");

  p.vertices.resize(static_cast<Eigen::Index>(plate_to_fluid.size()), 2);
  for (size_t v = 0; v < plate_to_fluid.size(); ++v)
    p.vertices.row(static_cast<Eigen::Index>(v)) =
        m.vertices.row(plate_to_fluid[v]).head<2>();
  tm.plate_to_fluid_vertex = std::move(plate_to_fluid);

  for (Index t = 0; t < p.n_tris(); ++t)
    if (p.tri_area(t) < 0.0) std::swap(p.tris[t][1], p.tris[t][2]);

  std::map<std::array<Index, 2>, int> edge_count;
  for (const auto& tri : p.tris)
    for (int e = 0; e < 3; ++e) {
      std::array<Index, 2> ed{tri[e], tri[(e + 1) % 3]};
      if (ed[0] > ed[1]) std::swap(ed[0], ed[1]);
      ++edge_count[ed];
    }
  for (const auto& [ed, count] : edge_count)
    if (count == 1) p.boundary_edges.push_back(ed);
  return {std::move(p), std::move(tm)};
}

inline double mesh_size(const Mesh3D& m) {
  double h = 0.0;
  for (const auto& tet : m.tets)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        h = std::max(h, (m.vertices.row(tet[a]) - m.vertices.row(tet[b])).norm());
  if (m.tets.empty()) throw std::invalid_argument("mesh_size: empty mesh");
  return h;
}

inline double mesh_size(const Mesh2D& m) {
  double h = 0.0;
  for (const auto& tri : m.tris)
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b)
        h = std::max(h, (m.vertices.row(tri[a]) - m.vertices.row(tri[b])).norm());
  if (m.tris.empty()) throw std::invalid_argument("mesh_size: empty mesh");
  return h;
}

// Debug export: vertex list, connectivity, boundary entities with tags.
inline void write_mesh_ascii(std::ostream& os, const Mesh3D& m) {
  os << "vertices " << m.n_vertices() << "\n";
  for (Eigen::Index v = 0; v < m.vertices.rows(); ++v)
    os << m.vertices(v, 0) << " " << m.vertices(v, 1) << " " << m.vertices(v, 2) << "\n";
  os << "tets " << m.n_tets() << "\n";
  for (const auto& t : m.tets) os << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
  os << "boundary_faces " << m.boundary_faces.size() << "\n";
  for (const auto& f : m.boundary_faces)
    os << f.v[0] << " " << f.v[1] << " " << f.v[2] << " "
       << (f.tag == BoundaryTag::Plate ? "PLATE" : "S") << "\n";
}

inline void write_mesh_ascii(std::ostream& os, const Mesh2D& m) {
  os << "vertices " << m.n_vertices() << "\n";
  for (Eigen::Index v = 0; v < m.vertices.rows(); ++v)
    os << m.vertices(v, 0) << " " << m.vertices(v, 1) << "\n";
  os << "tris " << m.n_tris() << "\n";
  for (const auto& t : m.tris) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "boundary_edges " << m.boundary_edges.size() << "\n";
  for (const auto& e : m.boundary_edges) os << e[0] << " " << e[1] << "\n";
}

}  // namespace fsiplate
