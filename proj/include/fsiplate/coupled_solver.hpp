#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "fsiplate/assembly.hpp"
#include "fsiplate/linear_solver.hpp"
#include "fsiplate/mesh.hpp"
#include "fsiplate/params.hpp"
#include "fsiplate/sparse.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

// Everything that is fixed for a given mesh/parameter choice: geometry,
// spaces, assembled unit-coefficient blocks, interface correspondences, and
// lazily built factorizations (keyed by the time-step size, which is the
// only runtime quantity entering the matrices). States share the model.
struct CoupledModel {
  Mesh3D fluid_mesh;
  Mesh2D plate_mesh;
  TraceMap trace;
  FESpace velocity, pressure, plate_w, plate_z, multiplier;
  PhysicalParams params;
  VectorField3 fluid_load;  // empty -> zero forcing
  ScalarField2 plate_load;
  BlockSystem blocks;

  // DOF partitions: the fluid substep treats interface vertical DOFs as
  // Dirichlet-fixed; the monolithic solve keeps them as unknowns tied to
  // the plate by constraint rows.
  DofPartition u_dirichlet;  // velocity mask + interface component 3
  DofPartition u_mask;       // velocity mask only
  DofPartition w_free;       // plate deflection mask (shared by w and z)

  // Interface correspondences (conforming trace):
  std::vector<Index> iface_fluid;  // fluid scalar node of interface DOF k
  std::vector<Index> iface_plate;  // matching plate scalar DOF
  std::vector<Index> plate_to_fluid_scalar;  // every plate P2 scalar DOF
  double plate_area = 0.0;                   // sum of the r column
  double fluid_volume = 0.0;                 // sum of the m column
  double r_free_sum = 0.0;                   // r restricted to free DOFs

  CoupledModel() = default;
  CoupledModel(const CoupledModel&) = delete;
  CoupledModel& operator=(const CoupledModel&) = delete;

  struct FluidOperator {
    double dt = 0.0;
    LuSolver lu;          // [[A_ff, -dt Bf^T, 0], [Bf, 0, m], [0, m^T, 0]]
    SparseMat a_lift;     // A[free, fixed]
    SparseMat b_lift;     // B[:, fixed]
    Index n_free = 0, n_p = 0;
    mutable double load_time = std::numeric_limits<double>::quiet_NaN();
    mutable VecX load;    // velocity load vector at load_time
  };
  struct PlateOperator {
    double dt = 0.0;
    LuSolver lu;  // [[cw M, cz M + D dt K, -dt r], [-K, M, 0], [r^T, 0, 0]]
    Index n_wf = 0;
    mutable double load_time = std::numeric_limits<double>::quiet_NaN();
    mutable VecX load;
  };
  struct MonolithicOperator {
    double dt = 0.0;
    LuSolver lu;
    Index n_uf = 0, n_p = 0, n_wf = 0;
    std::vector<Index> iface_free_pos;   // row of each interface constraint
    std::vector<Index> iface_plate_dof;  // plate DOF the row couples to
  };
  mutable std::optional<FluidOperator> fluid_op;
  mutable std::optional<PlateOperator> plate_op;
  mutable std::optional<MonolithicOperator> mono_op;

  const FluidOperator& fluid_operator(double dt) const;
  const PlateOperator& plate_operator(double dt) const;
  const MonolithicOperator& monolithic_operator(double dt) const;
};

// All unknowns at time level n plus the history levels the two-step
// second-derivative stencil needs. wdot is the committed interface
// velocity: the fluid interface DOFs of u equal its entries bitwise.
struct CoupledState {
  std::shared_ptr<const CoupledModel> model;
  int n = 0;
  double time = 0.0;
  VecX u, p0, w, z, g, wdot;
  double s = 0.0;
  VecX u_prev, w_prev, w_prev2, z_prev, z_prev2;
};

namespace detail {

inline VecX gather(const VecX& full, const std::vector<Index>& idx) {
  VecX v(static_cast<Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) v[static_cast<Index>(i)] = full[idx[i]];
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

inline std::shared_ptr<CoupledModel> build_model(int nx, int ny, int nz,
                                                 const Vec3& lo, const Vec3& hi,
                                                 const PhysicalParams& params,
                                                 VectorField3 fluid_load = {},
                                                 ScalarField2 plate_load = {}) {
  params.validate();
  auto m = std::make_shared<CoupledModel>();
  m->params = params;
  m->fluid_load = std::move(fluid_load);
  m->plate_load = std::move(plate_load);
  m->fluid_mesh = build_box_fluid_mesh(nx, ny, nz, lo, hi);
  auto [pm, tr] = extract_plate_mesh(m->fluid_mesh);
  m->plate_mesh = std::move(pm);
  m->trace = std::move(tr);

  m->velocity = build_space(m->fluid_mesh, 2, 3, SpaceRole::Velocity);
  m->pressure = build_space(m->fluid_mesh, 1, 1, SpaceRole::Pressure);
  m->plate_w = build_space(m->plate_mesh, 2, 1, SpaceRole::PlateW);
  m->plate_z = build_space(m->plate_mesh, 2, 1, SpaceRole::PlateZ);
  m->multiplier = build_space(m->plate_mesh, 1, 1, SpaceRole::Multiplier);

  m->blocks = assemble_block_system(m->velocity, m->pressure, m->plate_w,
                                    m->multiplier, m->trace);

  // Partitions. The fluid substep additionally fixes interface u3 DOFs.
  std::vector<char> dir_mask = m->velocity.fixed;
  for (Index s : m->velocity.interface_scalar)
    dir_mask[m->velocity.global_dof(2, s)] = 1;
  m->u_dirichlet = DofPartition::from_mask(dir_mask);
  m->u_mask = DofPartition::from_mask(m->velocity.fixed);
  m->w_free = DofPartition::from_mask(m->plate_w.fixed);

  // Interface correspondences: fluid scalar node <-> plate scalar DOF.
  std::vector<Index> fluid_to_plate_vertex(m->fluid_mesh.n_vertices(), -1);
  for (size_t pv = 0; pv < m->trace.plate_to_fluid_vertex.size(); ++pv)
    fluid_to_plate_vertex[m->trace.plate_to_fluid_vertex[pv]] =
        static_cast<Index>(pv);

  m->plate_to_fluid_scalar.resize(m->plate_w.n_scalar);
  for (Index pv = 0; pv < m->plate_mesh.n_vertices(); ++pv)
    m->plate_to_fluid_scalar[pv] = m->trace.plate_to_fluid_vertex[pv];
  for (size_t e = 0; e < m->plate_w.edges.size(); ++e) {
    const auto& ed = m->plate_w.edges[e];
    m->plate_to_fluid_scalar[m->plate_mesh.n_vertices() + static_cast<Index>(e)] =
        m->velocity.edge_dof(m->trace.plate_to_fluid_vertex[ed[0]],
                             m->trace.plate_to_fluid_vertex[ed[1]]);
  }

  m->iface_fluid = m->velocity.interface_scalar;
  m->iface_plate.resize(m->iface_fluid.size());
  {
    // Invert plate_to_fluid_scalar over the interface set.
    std::map<Index, Index> fluid_to_plate_scalar;
    for (Index pd = 0; pd < m->plate_w.n_scalar; ++pd)
      fluid_to_plate_scalar[m->plate_to_fluid_scalar[pd]] = pd;
    for (size_t k = 0; k < m->iface_fluid.size(); ++k) {
      auto it = fluid_to_plate_scalar.find(m->iface_fluid[k]);
      if (it == fluid_to_plate_scalar.end())
        throw std::logic_error("build_model: interface node missing from trace");
      m->iface_plate[k] = it->second;
    }
  }
  if (static_cast<Index>(m->iface_fluid.size()) != m->w_free.n_free())
    throw std::logic_error(
        "build_model: interface DOFs do not match free plate DOFs");

  m->plate_area = m->blocks.r.sum();
  m->fluid_volume = m->blocks.m.sum();
  for (Index i : m->w_free.free) m->r_free_sum += m->blocks.r[i];
  return m;
}

// ---------------------------------------------------------------------------
// Operator factorizations (lazily rebuilt when the time step changes)
// ---------------------------------------------------------------------------

inline const CoupledModel::FluidOperator& CoupledModel::fluid_operator(
    double dt) const {
  if (fluid_op && fluid_op->dt == dt) return *fluid_op;
  fluid_op.emplace();
  auto& op = *fluid_op;
  op.dt = dt;
  const auto& p = u_dirichlet;
  SparseMat a = SparseMat(params.rho_f * blocks.m_u) +
                SparseMat((params.nu_f * dt) * blocks.k_u);
  SparseMat a_ff = reduce(a, p);
  op.a_lift = lift(a, p);
  SparseMat b_f = reduce_cols(blocks.b_div, p);
  op.b_lift = lift_cols(blocks.b_div, p);
  op.n_free = p.n_free();
  op.n_p = pressure.dof_count();

  BlockBuilder bb;
  bb.add_block(0, 0, a_ff);
  bb.add_block(0, op.n_free, SparseMat(b_f.transpose()), -dt);
  bb.add_block(op.n_free, 0, b_f);
  bb.add_column(op.n_free, op.n_free + op.n_p, blocks.m);
  bb.add_row(op.n_free + op.n_p, op.n_free, blocks.m);
  op.lu.factorize(bb.build(op.n_free + op.n_p + 1, op.n_free + op.n_p + 1));
  return op;
}

inline const CoupledModel::PlateOperator& CoupledModel::plate_operator(
    double dt) const {
  if (plate_op && plate_op->dt == dt) return *plate_op;
  plate_op.emplace();
  auto& op = *plate_op;
  op.dt = dt;
  const double cw = params.omega * params.rho_p / dt;
  const double cz = params.omega * params.rho_rot / dt;
  SparseMat m_ff = reduce(blocks.m_w, w_free);
  SparseMat k_ff = reduce(blocks.k_w, w_free);
  op.n_wf = w_free.n_free();
  VecX r_f = detail::gather(blocks.r, w_free.free);

  BlockBuilder bb;
  bb.add_block(0, 0, m_ff, cw);
  bb.add_block(0, op.n_wf, m_ff, cz);
  bb.add_block(0, op.n_wf, k_ff, params.flexural_rigidity * dt);
  bb.add_column(0, 2 * op.n_wf, r_f, -dt);
  bb.add_block(op.n_wf, 0, k_ff, -1.0);
  bb.add_block(op.n_wf, op.n_wf, m_ff);
  bb.add_row(2 * op.n_wf, 0, r_f);
  op.lu.factorize(bb.build(2 * op.n_wf + 1, 2 * op.n_wf + 1));
  return op;
}

inline const CoupledModel::MonolithicOperator& CoupledModel::monolithic_operator(
    double dt) const {
  if (mono_op && mono_op->dt == dt) return *mono_op;
  mono_op.emplace();
  auto& op = *mono_op;
  op.dt = dt;
  const auto& p = u_mask;
  op.n_uf = p.n_free();
  op.n_p = pressure.dof_count();
  op.n_wf = w_free.n_free();
  const Index u0 = 0, p0c = op.n_uf, w0 = op.n_uf + op.n_p,
              z0 = w0 + op.n_wf;
  const Index total = z0 + op.n_wf;

  // Interface constraint rows replace the momentum rows of free u3 DOFs.
  std::vector<char> is_iface(static_cast<size_t>(op.n_uf), 0);
  op.iface_free_pos.resize(iface_fluid.size());
  op.iface_plate_dof.resize(iface_fluid.size());
  for (size_t k = 0; k < iface_fluid.size(); ++k) {
    const Index g = velocity.global_dof(2, iface_fluid[k]);
    const Index pos = p.to_free[g];
    op.iface_free_pos[k] = pos;
    op.iface_plate_dof[k] = iface_plate[k];
    is_iface[static_cast<size_t>(pos)] = 1;
  }

  SparseMat a = SparseMat(params.rho_f * blocks.m_u) +
                SparseMat((params.nu_f * dt) * blocks.k_u);
  SparseMat a_ff = reduce(a, p);
  SparseMat b_f = reduce_cols(blocks.b_div, p);
  SparseMat bt_f = SparseMat(b_f.transpose());

  BlockBuilder bb;
  // Fluid momentum rows (skipping replaced interface rows).
  for (Index r = 0; r < a_ff.outerSize(); ++r) {
    if (is_iface[static_cast<size_t>(r)]) continue;
    for (SparseMat::InnerIterator it(a_ff, r); it; ++it)
      bb.add_entry(u0 + r, u0 + static_cast<Index>(it.col()), it.value());
    for (SparseMat::InnerIterator it(bt_f, r); it; ++it)
      bb.add_entry(u0 + r, p0c + static_cast<Index>(it.col()), -dt * it.value());
  }
  // Interface rows: u3 - w/dt = -w_n/dt.
  for (size_t k = 0; k < op.iface_free_pos.size(); ++k) {
    bb.add_entry(u0 + op.iface_free_pos[k], u0 + op.iface_free_pos[k], 1.0);
    bb.add_entry(u0 + op.iface_free_pos[k],
                 w0 + w_free.to_free[op.iface_plate_dof[k]], -1.0 / dt);
  }
  // Continuity rows.
  bb.add_block(p0c, u0, b_f);
  // Plate momentum rows: cw M w + (cz M + D dt K) z - dt C_w^T (trace p).
  const double cw = params.omega * params.rho_p / dt;
  const double cz = params.omega * params.rho_rot / dt;
  SparseMat m_ff = reduce(blocks.m_w, w_free);
  SparseMat k_ff = reduce(blocks.k_w, w_free);
  bb.add_block(w0, w0, m_ff, cw);
  bb.add_block(w0, z0, m_ff, cz);
  bb.add_block(w0, z0, k_ff, params.flexural_rigidity * dt);
  for (Index r = 0; r < blocks.c_w.outerSize(); ++r) {
    const Index pq = trace.plate_to_fluid_vertex[r];  // multiplier DOF -> pressure DOF
    for (SparseMat::InnerIterator it(blocks.c_w, r); it; ++it) {
      const Index wf = w_free.to_free[it.col()];
      if (wf >= 0) bb.add_entry(w0 + wf, p0c + pq, -dt * it.value());
    }
  }
  // Auxiliary-variable rows: M z - K w = 0.
  bb.add_block(z0, w0, k_ff, -1.0);
  bb.add_block(z0, z0, m_ff);
  op.lu.factorize(bb.build(total, total));
  return op;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace detail {

// Discrete counterpart of the auxiliary-variable identity: solve
// (z, phi) = (grad w, grad phi) over free DOFs with z = 0 on the boundary.
inline VecX discrete_auxiliary(const CoupledModel& m, const VecX& w) {
  SparseMat m_ff = reduce(m.blocks.m_w, m.w_free);
  LuSolver lu;
  lu.factorize(m_ff);
  const VecX rhs = detail::gather(VecX(m.blocks.k_w * w), m.w_free.free);
  const VecX z_f = lu.solve(rhs);
  return m.w_free.expand(z_f, VecX::Zero(m.w_free.n_fixed()));
}

}  // namespace detail

// Physical initial data (u0, w0, w_t0); the auxiliary variable starts from
// the discrete identity applied to w0, and the previous level is seeded
// first-order consistently as w0 - dt * w_t0.
inline CoupledState initialize(std::shared_ptr<const CoupledModel> model,
                               const VectorField3& u0, const ScalarField2& w0,
                               const ScalarField2& wt0, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("initialize: dt must be > 0");
  CoupledState st;
  st.model = std::move(model);
  const auto& m = *st.model;
  st.u = u0 ? interpolate(m.velocity, u0, 0.0) : VecX::Zero(m.velocity.dof_count());
  st.w = w0 ? interpolate(m.plate_w, w0, 0.0) : VecX::Zero(m.plate_w.dof_count());
  const VecX wt = wt0 ? interpolate(m.plate_w, wt0, 0.0) : VecX::Zero(m.plate_w.dof_count());
  // Zero out constrained entries so the data conforms to the spaces.
  for (Index g = 0; g < m.velocity.dof_count(); ++g)
    if (m.velocity.fixed[g]) st.u[g] = 0.0;
  for (Index g = 0; g < m.plate_w.dof_count(); ++g)
    if (m.plate_w.fixed[g]) st.w[g] = 0.0;
  st.w_prev = st.w - dt * wt;
  for (Index g = 0; g < m.plate_w.dof_count(); ++g)
    if (m.plate_w.fixed[g]) st.w_prev[g] = 0.0;
  st.z = detail::discrete_auxiliary(m, st.w);
  st.z_prev = detail::discrete_auxiliary(m, st.w_prev);
  st.w_prev2 = st.w_prev;
  st.z_prev2 = st.z_prev;
  st.u_prev = st.u;
  st.p0 = VecX::Zero(m.pressure.dof_count());
  st.g = VecX::Zero(m.multiplier.dof_count());
  st.wdot = (st.w - st.w_prev) / dt;
  st.s = 0.0;
  return st;
}

// Substep machinery used by the manufactured-solution start; defined below.
inline std::pair<VecX, VecX> fluid_step(const CoupledState& state,
                                        const VecX& wdot_guess, double dt,
                                        double t_np1);
inline VecX extract_pressure_trace(const VecX& p0, const TraceMap& trace);
namespace detail {
inline VecX project_interface_data(const CoupledModel& m, const VecX& wdot);
}  // namespace detail

// Manufactured-solution start. The first step divides any seeding
// inconsistency by powers of dt, so plain exact interpolants are not usable
// as discrete initial data:
//   - the auxiliary identity K w = M z must hold exactly, because the
//     rotational-inertia stencil amplifies its violation by 1/dt^2;
//   - the discrete plate volume r.w must vanish at every history level,
//     because the volume border otherwise reacts with a 1/dt pressure
//     transient;
//   - the velocity must be discretely divergence-free, else the first
//     pressure absorbs a 1/dt projection of the interpolation error.
// The seeding therefore anchors at the auxiliary variable: each history
// level takes z as the exact interpolant plus a tiny multiple of a smooth
// bump chosen so the lifted displacement has zero volume, and w as the
// discrete Poisson lift K^{-1} M z, which is optimal-order accurate and
// constraint-exact. The velocity and pressure come from one discrete fluid
// solve driven by the seeded interface velocity from the t = -dt velocity
// interpolant, which makes the triple (u, p0, wdot) satisfy the same
// relations a committed step would.
template <typename Exact>
CoupledState initialize_mms(std::shared_ptr<const CoupledModel> model,
                            const Exact& sol, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("initialize_mms: dt must be > 0");
  CoupledState st;
  st.model = std::move(model);
  const auto& m = *st.model;
  const ScalarField2 zf = [&sol](const Vec2& x, double t) { return sol.z(x, t); };

  // Discrete Poisson lift w = K^{-1} M z over the free plate DOFs.
  SparseMat k_ff = reduce(m.blocks.k_w, m.w_free);
  LuSolver lift_lu;
  lift_lu.factorize(k_ff);
  const auto lift = [&](const VecX& z) {
    const VecX rhs = detail::gather(VecX(m.blocks.m_w * z), m.w_free.free);
    return m.w_free.expand(lift_lu.solve(rhs), VecX::Zero(m.w_free.n_fixed()));
  };

  // Volume-neutralizing direction: a smooth positive bump whose lift has a
  // nonzero volume, used to cancel the (tiny) volume of the lifted data.
  const ScalarField2 bump = [](const Vec2& x, double) {
    return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]);
  };
  VecX zb = interpolate(m.plate_w, bump, 0.0);
  for (Index g = 0; g < m.plate_w.dof_count(); ++g)
    if (m.plate_w.fixed[g]) zb[g] = 0.0;
  const VecX wb = lift(zb);
  const double rb = m.blocks.r.dot(wb);

  const auto seed_level = [&](double t) {
    VecX z = interpolate(m.plate_w, zf, t);
    VecX w = lift(z);
    const double alpha = -m.blocks.r.dot(w) / rb;
    z += alpha * zb;
    w += alpha * wb;
    return std::pair{std::move(w), std::move(z)};
  };
  std::tie(st.w, st.z) = seed_level(0.0);
  std::tie(st.w_prev, st.z_prev) = seed_level(-dt);
  st.w_prev2 = st.w_prev;
  st.z_prev2 = st.z_prev;
  st.wdot = (st.w - st.w_prev) / dt;
  st.s = 0.0;

  const VectorField3 uf = [&sol](const Vec3& x, double t) { return sol.velocity(x, t); };
  CoupledState pre;
  pre.model = st.model;
  pre.u = interpolate(m.velocity, uf, -dt);
  for (Index g = 0; g < m.velocity.dof_count(); ++g)
    if (m.velocity.fixed[g]) pre.u[g] = 0.0;
  const VecX wdot0 = detail::project_interface_data(m, st.wdot);
  auto [u0, p00] = fluid_step(pre, wdot0, dt, 0.0);
  st.u = std::move(u0);
  for (size_t k = 0; k < m.iface_fluid.size(); ++k)
    st.u[m.velocity.global_dof(2, m.iface_fluid[k])] = wdot0[m.iface_plate[k]];
  st.u_prev = st.u;
  st.p0 = std::move(p00);
  st.g = extract_pressure_trace(st.p0, m.trace);
  return st;
}

// ---------------------------------------------------------------------------
// Substeps
// ---------------------------------------------------------------------------

// L2(plate) norm of a plate coefficient vector.
inline double plate_l2(const CoupledModel& m, const VecX& v) {
  return std::sqrt(std::max(0.0, v.dot(m.blocks.m_w * v)));
}

// Integral of the discrete plate function with these coefficients.
inline double plate_integral(const CoupledModel& m, const VecX& v) {
  return m.blocks.r.dot(v);
}

// Fluid substep: Stokes solve with u3 = wdot_guess imposed strongly on the
// plate face, u = 0 elsewhere, bordered by the pressure zero-mean
// constraint. The border's scalar multiplier absorbs the (tiny) residual
// incompatibility of the discrete Dirichlet data.
inline std::pair<VecX, VecX> fluid_step(const CoupledState& state,
                                        const VecX& wdot_guess, double dt,
                                        double t_np1) {
  const auto& m = *state.model;
  if (wdot_guess.size() != m.plate_w.dof_count())
    throw std::invalid_argument("fluid_step: interface data size mismatch");
  const double viol = std::abs(plate_integral(m, wdot_guess));
  const double scale = std::max(plate_l2(m, wdot_guess), 1e-14);
  if (viol > 0.05 * std::sqrt(m.plate_area) * scale)
    throw CompatibilityError(
        "fluid_step: interface data violates the zero-net-flux compatibility "
        "condition");

  const auto& op = m.fluid_operator(dt);
  const auto& part = m.u_dirichlet;

  // Dirichlet values: zero on S and for tangential components, wdot on the
  // interface.
  VecX fixed_vals = VecX::Zero(part.n_fixed());
  for (size_t k = 0; k < m.iface_fluid.size(); ++k) {
    const Index g = m.velocity.global_dof(2, m.iface_fluid[k]);
    fixed_vals[part.to_fixed[g]] = wdot_guess[m.iface_plate[k]];
  }

  if (m.fluid_load && op.load_time != t_np1) {
    op.load = assemble_load(m.velocity, m.fluid_load, t_np1);
    op.load_time = t_np1;
  }

  VecX rhs = VecX::Zero(op.n_free + op.n_p + 1);
  VecX mom = m.params.rho_f * (m.blocks.m_u * state.u);
  if (m.fluid_load) mom += dt * op.load;
  rhs.head(op.n_free) = part.gather_free(mom) - op.a_lift * fixed_vals;
  rhs.segment(op.n_free, op.n_p) = -(op.b_lift * fixed_vals);

  const VecX sol = op.lu.solve(rhs);
  VecX u = part.expand(sol.head(op.n_free), fixed_vals);
  VecX p0 = sol.segment(op.n_free, op.n_p);
  return {std::move(u), std::move(p0)};
}

// Nodal restriction of the (continuous, piecewise-linear) pressure to the
// plate: multiplier DOFs coincide with fluid vertices on the top plane.
inline VecX extract_pressure_trace(const VecX& p0, const TraceMap& trace) {
  VecX g(static_cast<Index>(trace.plate_to_fluid_vertex.size()));
  for (size_t i = 0; i < trace.plate_to_fluid_vertex.size(); ++i)
    g[static_cast<Index>(i)] = p0[trace.plate_to_fluid_vertex[i]];
  return g;
}

// Plate substep: the two-equation system for (w, z) driven by the
// multiplier g, bordered by the scalar s enforcing that the new discrete
// interface velocity (w - w_n)/dt has zero mean.
inline std::tuple<VecX, VecX, double> plate_step(const CoupledState& state,
                                                 const VecX& g, double dt) {
  const auto& m = *state.model;
  if (g.size() != m.multiplier.dof_count())
    throw std::invalid_argument("plate_step: multiplier size mismatch");
  const auto& op = m.plate_operator(dt);
  const double t_np1 = state.time + dt;
  const double cw = m.params.omega * m.params.rho_p / dt;
  const double cz = m.params.omega * m.params.rho_rot / dt;

  if (m.plate_load && op.load_time != t_np1) {
    op.load = assemble_load(m.plate_w, m.plate_load, t_np1);
    op.load_time = t_np1;
  }

  VecX full = cw * (m.blocks.m_w * VecX(2.0 * state.w - state.w_prev)) +
              cz * (m.blocks.m_w * VecX(2.0 * state.z - state.z_prev)) +
              dt * (m.blocks.c_w.transpose() * g);
  if (m.plate_load) full += dt * op.load;

  VecX rhs = VecX::Zero(2 * op.n_wf + 1);
  rhs.head(op.n_wf) = detail::gather(full, m.w_free.free);
  rhs[2 * op.n_wf] = detail::gather(state.w, m.w_free.free)
                         .dot(detail::gather(m.blocks.r, m.w_free.free));

  const VecX sol = op.lu.solve(rhs);
  const VecX zero_fixed = VecX::Zero(m.w_free.n_fixed());
  VecX w = m.w_free.expand(sol.head(op.n_wf), zero_fixed);
  VecX z = m.w_free.expand(sol.segment(op.n_wf, op.n_wf), zero_fixed);
  return {std::move(w), std::move(z), sol[2 * op.n_wf]};
}

namespace detail {

// Shift interior interface values by a constant so the discrete integral of
// the data vanishes; a no-op (bitwise) when the data is already compatible
// to near machine precision, which keeps the committed interface DOFs
// bitwise equal to the imposed values.
inline VecX project_interface_data(const CoupledModel& m, const VecX& wdot) {
  const double integral = plate_integral(m, wdot);
  const double scale = plate_l2(m, wdot);
  if (std::abs(integral) <= 1e-12 * std::max(scale, 1.0)) return wdot;
  VecX proj = wdot;
  const double c = integral / m.r_free_sum;
  for (Index i : m.w_free.free) proj[i] -= c;
  return proj;
}

// Common commit: shift histories, store the new fields, and overwrite the
// fluid interface DOFs with the committed interface velocity bitwise.
inline CoupledState commit(const CoupledState& state, double dt, VecX u, VecX p0,
                           VecX w, VecX z, VecX g, double s, VecX wdot) {
  CoupledState next;
  next.model = state.model;
  next.n = state.n + 1;
  next.time = state.time + dt;
  const auto& m = *state.model;
  for (size_t k = 0; k < m.iface_fluid.size(); ++k)
    u[m.velocity.global_dof(2, m.iface_fluid[k])] = wdot[m.iface_plate[k]];
  next.u_prev = state.u;
  next.w_prev2 = state.w_prev;
  next.z_prev2 = state.z_prev;
  next.w_prev = state.w;
  next.z_prev = state.z;
  next.u = std::move(u);
  next.p0 = std::move(p0);
  next.w = std::move(w);
  next.z = std::move(z);
  next.g = std::move(g);
  next.s = s;
  next.wdot = std::move(wdot);
  return next;
}

}  // namespace detail

// One backward-Euler step via the partitioned fixed-point iteration:
// fluid solve with the current interface velocity iterate, pressure trace,
// plate solve, relaxed interface update; converged when the relative
// L2(plate) change of the iterate drops below the tolerance. A final fluid
// solve against the converged data makes the committed fluid state and
// interface velocity consistent by construction.
inline std::pair<CoupledState, int> fixed_point_step(const CoupledState& state,
                                                     double dt, double t_np1,
                                                     const CouplingConfig& config) {
  if (config.mode != CouplingMode::Partitioned)
    throw std::invalid_argument("fixed_point_step: config.mode must be PARTITIONED");
  config.validate();
  const auto& m = *state.model;
  VecX wdot = state.wdot;
  VecX w, z, g;
  double s = 0.0;
  bool converged = false;
  int iterations = 0;
  double rel_change = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= config.max_iterations; ++k) {
    const VecX wdot_used = detail::project_interface_data(m, wdot);
    auto [u_k, p0_k] = fluid_step(state, wdot_used, dt, t_np1);
    g = extract_pressure_trace(p0_k, m.trace);
    std::tie(w, z, s) = plate_step(state, g, dt);
    VecX wdot_new = (config.theta / dt) * (w - state.w) +
                    (1.0 - config.theta) * wdot;
    const double change = plate_l2(m, VecX(wdot_new - wdot));
    const double scale = std::max(plate_l2(m, wdot_new), 1e-14);
    rel_change = change / scale;
    wdot = std::move(wdot_new);
    iterations = k;
    if (rel_change <= config.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergenceError(
        "fixed_point_step: interface iteration did not converge", rel_change);

  const VecX wdot_final = detail::project_interface_data(m, wdot);
  auto [u, p0] = fluid_step(state, wdot_final, dt, t_np1);
  g = extract_pressure_trace(p0, m.trace);
  return {detail::commit(state, dt, std::move(u), std::move(p0), std::move(w),
                         std::move(z), std::move(g), s, wdot_final),
          iterations};
}

// One backward-Euler step of the fully coupled system: a single bordered
// solve in (u, p, w, z) where interface momentum rows are replaced by the
// strong kinematic constraint and the plate rows receive the pressure
// trace. The pressure carries its mean; afterwards it is split into the
// zero-mean part, the scalar s, and the multiplier g for reporting. This is
// exactly the fixed point of the partitioned iteration.
inline CoupledState monolithic_step(const CoupledState& state, double dt,
                                    double t_np1) {
  const auto& m = *state.model;
  const auto& op = m.monolithic_operator(dt);
  const Index u0 = 0, p0c = op.n_uf, w0 = op.n_uf + op.n_p, z0 = w0 + op.n_wf;
  VecX rhs = VecX::Zero(z0 + op.n_wf);

  // Fluid momentum rows.
  {
    const auto& fop = m.fluid_operator(dt);  // reuse the cached load vector
    if (m.fluid_load && fop.load_time != t_np1) {
      fop.load = assemble_load(m.velocity, m.fluid_load, t_np1);
      fop.load_time = t_np1;
    }
    VecX mom = m.params.rho_f * (m.blocks.m_u * state.u);
    if (m.fluid_load) mom += dt * fop.load;
    rhs.head(op.n_uf) = detail::gather(mom, m.u_mask.free);
  }
  // Interface constraint rows: u3 - w/dt = -w_n/dt.
  for (size_t k = 0; k < op.iface_free_pos.size(); ++k)
    rhs[u0 + op.iface_free_pos[k]] = -state.w[op.iface_plate_dof[k]] / dt;
  // Plate momentum rows.
  {
    const double cw = m.params.omega * m.params.rho_p / dt;
    const double cz = m.params.omega * m.params.rho_rot / dt;
    const auto& pop = m.plate_operator(dt);
    if (m.plate_load && pop.load_time != t_np1) {
      pop.load = assemble_load(m.plate_w, m.plate_load, t_np1);
      pop.load_time = t_np1;
    }
    VecX full = cw * (m.blocks.m_w * VecX(2.0 * state.w - state.w_prev)) +
                cz * (m.blocks.m_w * VecX(2.0 * state.z - state.z_prev));
    if (m.plate_load) full += dt * pop.load;
    rhs.segment(w0, op.n_wf) = detail::gather(full, m.w_free.free);
  }

  const VecX sol = op.lu.solve(rhs);
  const VecX zero_fixed_u = VecX::Zero(m.u_mask.n_fixed());
  const VecX zero_fixed_w = VecX::Zero(m.w_free.n_fixed());
  VecX u = m.u_mask.expand(sol.head(op.n_uf), zero_fixed_u);
  VecX p = sol.segment(p0c, op.n_p);
  VecX w = m.w_free.expand(sol.segment(w0, op.n_wf), zero_fixed_w);
  VecX z = m.w_free.expand(sol.segment(z0, op.n_wf), zero_fixed_w);

  const double s = m.blocks.m.dot(p) / m.fluid_volume;
  VecX p0 = p.array() - s;
  VecX g = extract_pressure_trace(p0, m.trace);
  VecX wdot = (w - state.w) / dt;
  return detail::commit(state, dt, std::move(u), std::move(p0), std::move(w),
                        std::move(z), std::move(g), s, std::move(wdot));
}

// ---------------------------------------------------------------------------
// Diagnostics and time loop
// ---------------------------------------------------------------------------

struct EnergyBreakdown {
  double fluid = 0.0;        // 1/2 rho_f ||u||^2
  double plate_kinetic = 0.0;  // 1/2 rho_p ||wdot||^2
  double rotational = 0.0;   // 1/2 rho ||grad wdot||^2
  double elastic = 0.0;      // 1/2 D ||z||^2
  double total = 0.0;
};

inline EnergyBreakdown compute_energy(const CoupledState& st, double dt) {
  const auto& m = *st.model;
  const VecX wdot = (st.w - st.w_prev) / dt;
  EnergyBreakdown e;
  e.fluid = 0.5 * m.params.rho_f * st.u.dot(m.blocks.m_u * st.u);
  e.plate_kinetic = 0.5 * m.params.rho_p * wdot.dot(m.blocks.m_w * wdot);
  e.rotational = 0.5 * m.params.rho_rot * wdot.dot(m.blocks.k_w * wdot);
  e.elastic =
      0.5 * m.params.flexural_rigidity * st.z.dot(m.blocks.m_w * st.z);
  e.total = e.fluid + e.plate_kinetic + e.rotational + e.elastic;
  return e;
}

// L2(plate) distance between the vertical fluid trace and the committed
// interface velocity (zero bitwise under strong imposition).
inline double interface_mismatch(const CoupledState& st) {
  const auto& m = *st.model;
  VecX trace_u(m.plate_w.n_scalar);
  for (Index pd = 0; pd < m.plate_w.n_scalar; ++pd)
    trace_u[pd] = st.u[m.velocity.global_dof(2, m.plate_to_fluid_scalar[pd])];
  return plate_l2(m, VecX(trace_u - st.wdot));
}

struct StepReport {
  int n = 0;
  double time = 0.0;
  int iterations = 0;
  EnergyBreakdown energy;
  double interface_mismatch = 0.0;
  double wdot_integral = 0.0;  // |Int (w - w_prev)/dt|
  double max_deflection = 0.0;
};

using StepObserver = std::function<void(const StepReport&, const CoupledState&)>;

inline StepReport make_step_report(const CoupledState& st, double dt,
                                   int iterations) {
  StepReport r;
  r.n = st.n;
  r.time = st.time;
  r.iterations = iterations;
  r.energy = compute_energy(st, dt);
  r.interface_mismatch = interface_mismatch(st);
  r.wdot_integral = std::abs(plate_integral(*st.model, VecX((st.w - st.w_prev) / dt)));
  r.max_deflection = st.w.cwiseAbs().maxCoeff();
  return r;
}

// Run backward-Euler steps until t_final. Partitioned steps that fail to
// converge are retried with the relaxation halved (twice) before giving up.
inline CoupledState advance(CoupledState state, double dt, double t_final,
                            const CouplingConfig& config,
                            const std::vector<StepObserver>& observers = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("advance: dt must be > 0");
  const double remaining = t_final - state.time;
  const auto n_steps = static_cast<long long>(std::llround(remaining / dt));
  if (n_steps < 0 || std::abs(n_steps * dt - remaining) > 1e-8 * std::max(1.0, std::abs(t_final)))
    throw std::invalid_argument("advance: t_final must be a whole number of steps away");

  for (long long step = 0; step < n_steps; ++step) {
    const double t_np1 = state.time + dt;
    int iterations = 1;
    if (config.mode == CouplingMode::Monolithic) {
      state = monolithic_step(state, dt, t_np1);
    } else {
      CouplingConfig attempt = config;
      for (int retry = 0;; ++retry) {
        try {
          auto [next, iters] = fixed_point_step(state, dt, t_np1, attempt);
          state = std::move(next);
          iterations = iters;
          break;
        } catch (const NoConvergenceError&) {
          if (retry >= 2) throw;
          attempt.theta *= 0.5;
        }
      }
    }
    if (!observers.empty()) {
      const StepReport report = make_step_report(state, dt, iterations);
      for (const auto& obs : observers) obs(report, state);
    }
  }
  return state;
}

}  // namespace fsiplate
