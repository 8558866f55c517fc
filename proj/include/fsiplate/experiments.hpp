#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fsiplate/coupled_solver.hpp"
#include "fsiplate/mms.hpp"
#include "fsiplate/params.hpp"

namespace fsiplate {

// Final-time errors of one convergence run, one entry per tracked variable.
struct VariableErrors {
  double u_l2 = 0.0, u_h1 = 0.0;
  double p_l2 = 0.0;
  double w_l2 = 0.0, w_h1 = 0.0;
  double z_l2 = 0.0, z_h1 = 0.0;
};

// One refinement level of a convergence study. `refinement` is the mesh
// size h for spatial sweeps and the time step for temporal sweeps; rate
// entries are NaN on the first level of a sweep.
struct ExperimentRecord {
  double refinement = 0.0;
  int level = 0;  // mesh subdivisions n (fixed across a temporal sweep)
  double dt = 0.0;
  VariableErrors errors;
  VariableErrors rates;
  double wall_seconds = 0.0;
  long long steps = 0;
  double mean_iterations = 0.0;
  int max_iterations = 0;
};

// One time level of the free-vibration study.
struct VibrationRecord {
  int step = 0;
  double time = 0.0;
  double max_deflection = 0.0;
  double fluid_kinetic = 0.0;
  double plate_kinetic = 0.0;
  double rotational = 0.0;
  double elastic = 0.0;
  double total = 0.0;
  double interface_mismatch = 0.0;
  double wdot_integral = 0.0;
};

struct InfSupRecord {
  int level = 0;
  double h = 0.0;
  double beta = 0.0;
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline VariableErrors nan_errors() {
  return {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN};
}

inline VariableErrors final_time_errors(const CoupledState& st,
                                        const ExactSolution& sol, double t) {
  const auto& m = *st.model;
  VariableErrors e;
  e.u_l2 = error_norm(m.velocity, st.u, exact_velocity_field(sol), t, NormType::L2);
  e.u_h1 = error_norm(m.velocity, st.u, exact_velocity_field(sol), t, NormType::H1);
  e.p_l2 = error_norm(m.pressure, st.p0, exact_pressure_field(sol), t, NormType::L2);
  e.w_l2 = error_norm(m.plate_w, st.w, exact_w_field(sol), t, NormType::L2);
  e.w_h1 = error_norm(m.plate_w, st.w, exact_w_field(sol), t, NormType::H1);
  e.z_l2 = error_norm(m.plate_w, st.z, exact_z_field(sol), t, NormType::L2);
  e.z_h1 = error_norm(m.plate_w, st.z, exact_z_field(sol), t, NormType::H1);
  return e;
}

// Per-variable two-point rates between consecutive records, via the same
// observed_rate routine the tests freeze, so the records are internally
// consistent by construction.
inline void fill_rates(std::vector<ExperimentRecord>& recs) {
  if (recs.empty()) return;
  recs.front().rates = nan_errors();
  for (size_t i = 1; i < recs.size(); ++i) {
    const auto& ep = recs[i - 1].errors;
    const auto& ec = recs[i].errors;
    const std::vector<double> steps = {recs[i - 1].refinement, recs[i].refinement};
    auto rate = [&steps](double a, double b) {
      return observed_rate({a, b}, steps).front();
    };
    auto& r = recs[i].rates;
    r.u_l2 = rate(ep.u_l2, ec.u_l2);
    r.u_h1 = rate(ep.u_h1, ec.u_h1);
    r.p_l2 = rate(ep.p_l2, ec.p_l2);
    r.w_l2 = rate(ep.w_l2, ec.w_l2);
    r.w_h1 = rate(ep.w_h1, ec.w_h1);
    r.z_l2 = rate(ep.z_l2, ec.z_l2);
    r.z_h1 = rate(ep.z_h1, ec.z_h1);
  }
}

struct IterationStats {
  long long steps = 0;
  long long total_iterations = 0;
  int max_iterations = 0;
  StepObserver observer() {
    return [this](const StepReport& r, const CoupledState&) {
      ++steps;
      total_iterations += r.iterations;
      max_iterations = std::max(max_iterations, r.iterations);
    };
  }
  double mean() const {
    return steps == 0 ? 0.0
                      : static_cast<double>(total_iterations) /
                            static_cast<double>(steps);
  }
};

}  // namespace detail

// Fluid box [0,1]^2 x [-1,0] with n subdivisions per direction, forced so
// the manufactured fields solve the coupled problem exactly.
inline std::shared_ptr<CoupledModel> build_mms_model(int n,
                                                     const PhysicalParams& params) {
  const ExactSolution sol;
  const PhysicalParams p = params;
  VectorField3 ff = [sol, p](const Vec3& x, double t) {
    return sol.fluid_forcing(x, t, p);
  };
  ScalarField2 fp = [sol, p](const Vec2& x, double t) {
    return sol.plate_forcing(x, t, p, p.omega);
  };
  return build_model(n, n, n, Vec3(0.0, 0.0, -1.0), Vec3(1.0, 1.0, 0.0), params,
                     std::move(ff), std::move(fp));
}

// Spatial convergence: fixed small time step, meshes refined through the
// given levels, manufactured forcing and exact interpolated history, errors
// measured at the final time.
inline std::vector<ExperimentRecord> run_space_convergence(
    const std::vector<int>& levels, double dt, double t_final,
    const PhysicalParams& params, CouplingMode mode) {
  if (levels.empty())
    throw std::invalid_argument("run_space_convergence: levels must be non-empty");
  if (!std::is_sorted(levels.begin(), levels.end()) || levels.front() < 1)
    throw std::invalid_argument("run_space_convergence: levels must be ascending positive");
  const ExactSolution sol;
  std::vector<ExperimentRecord> recs;
  for (int n : levels) {
    ExperimentRecord rec;
    rec.level = n;
    rec.refinement = 1.0 / n;
    rec.dt = dt;
    detail::IterationStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    auto model = build_mms_model(n, params);
    auto st = initialize_mms(model, sol, dt);
    CouplingConfig cfg;
    cfg.mode = mode;
    st = advance(st, dt, t_final, cfg, {stats.observer()});
    rec.errors = detail::final_time_errors(st, sol, t_final);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.steps = stats.steps;
    rec.mean_iterations = stats.mean();
    rec.max_iterations = stats.max_iterations;
    recs.push_back(rec);
  }
  detail::fill_rates(recs);
  return recs;
}

// Temporal convergence: fixed mesh, descending time steps, the plate
// inertia scaled by omega so the first-order temporal error dominates the
// spatial one on the coarse mesh.
inline std::vector<ExperimentRecord> run_time_convergence(
    const std::vector<double>& dts, int n, double t_final,
    const PhysicalParams& params, double omega) {
  if (dts.empty())
    throw std::invalid_argument("run_time_convergence: dts must be non-empty");
  if (!std::is_sorted(dts.rbegin(), dts.rend()) || dts.back() <= 0.0)
    throw std::invalid_argument("run_time_convergence: dts must be descending positive");
  if (!(omega >= 1.0))
    throw std::invalid_argument("run_time_convergence: omega must be >= 1");
  PhysicalParams p = params;
  p.omega = omega;
  const ExactSolution sol;
  auto model = build_mms_model(n, p);
  std::vector<ExperimentRecord> recs;
  for (double dt : dts) {
    ExperimentRecord rec;
    rec.level = n;
    rec.refinement = dt;
    rec.dt = dt;
    detail::IterationStats stats;
    const auto t0 = std::chrono::steady_clock::now();
    auto st = initialize_mms(model, sol, dt);
    CouplingConfig cfg;
    st = advance(st, dt, t_final, cfg, {stats.observer()});
    rec.errors = detail::final_time_errors(st, sol, t_final);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.steps = stats.steps;
    rec.mean_iterations = stats.mean();
    rec.max_iterations = stats.max_iterations;
    recs.push_back(rec);
  }
  detail::fill_rates(recs);
  return recs;
}

// Free vibration of a simply supported plate over a quiescent fluid box of
// depth 1/2: no forcing, initial deflection A sin(2 pi x) sin(2 pi y) with
// A = 1e-2 and zero initial velocities everywhere.
inline std::vector<VibrationRecord> run_free_vibration(int n, double dt,
                                                       double t_final,
                                                       const PhysicalParams& params) {
  if (n < 1) throw std::invalid_argument("run_free_vibration: n must be >= 1");
  constexpr double kAmplitude = 1e-2;
  const double depth = 0.5;
  const int nz = std::max(1, static_cast<int>(std::llround(n * depth)));
  auto model = build_model(n, n, nz, Vec3(0.0, 0.0, -depth), Vec3(1.0, 1.0, 0.0),
                           params);
  const ScalarField2 w0 = [](const Vec2& x, double) {
    return kAmplitude * std::sin(2.0 * kPi * x[0]) * std::sin(2.0 * kPi * x[1]);
  };
  auto st = initialize(model, {}, w0, {}, dt);

  std::vector<VibrationRecord> recs;
  auto record = [&recs](const StepReport& r, const CoupledState&) {
    VibrationRecord v;
    v.step = r.n;
    v.time = r.time;
    v.max_deflection = r.max_deflection;
    v.fluid_kinetic = r.energy.fluid;
    v.plate_kinetic = r.energy.plate_kinetic;
    v.rotational = r.energy.rotational;
    v.elastic = r.energy.elastic;
    v.total = r.energy.total;
    v.interface_mismatch = r.interface_mismatch;
    v.wdot_integral = r.wdot_integral;
    recs.push_back(v);
  };
  record(make_step_report(st, dt, 0), st);
  CouplingConfig cfg;
  advance(std::move(st), dt, t_final, cfg, {record});
  return recs;
}

// Blocks of the discrete inf-sup estimate: the constraint operator
// B = [[-B_div, 0], [C_u, -C_w]] over the free (velocity, plate) columns,
// whitened by the H1 metric on the left and by (pressure L2) x (discrete
// dual plate norm) on the right. The time step does not enter.
struct InfSupBlocks {
  SparseMat b;
  SparseMat mx;
  SparseMat my;
};

inline InfSupBlocks build_infsup_blocks(const CoupledModel& m) {
  const auto& up = m.u_mask;
  const auto& wp = m.w_free;
  const Index n_uf = up.n_free(), n_wf = wp.n_free();
  const Index n_p = m.pressure.dof_count(), n_g = m.multiplier.dof_count();

  SparseMat b_f = reduce_cols(m.blocks.b_div, up);
  SparseMat c_uf = reduce_cols(m.blocks.c_u, up);
  SparseMat c_wf = reduce_cols(m.blocks.c_w, wp);
  BlockBuilder bb;
  bb.add_block(0, 0, b_f, -1.0);
  bb.add_block(n_p, 0, c_uf);
  bb.add_block(n_p, n_uf, c_wf, -1.0);

  SparseMat h1_u = SparseMat(m.blocks.m_u) + SparseMat(m.blocks.k_u);
  SparseMat h1_w = SparseMat(m.blocks.m_w) + SparseMat(m.blocks.k_w);
  SparseMat h1_uf = reduce(h1_u, up);
  SparseMat h1_wf = reduce(h1_w, wp);
  BlockBuilder mxb;
  mxb.add_block(0, 0, h1_uf);
  mxb.add_block(n_uf, n_uf, h1_wf);

  // Discrete dual norm of the multiplier: S = C_w (M+K)^-1 C_w^T over free
  // plate DOFs (small and dense, assembled column by column).
  LuSolver h1_lu;
  h1_lu.factorize(h1_wf);
  MatX s_g = MatX::Zero(n_g, n_g);
  MatX c_dense = MatX(c_wf);
  for (Index j = 0; j < n_g; ++j) {
    const VecX col = h1_lu.solve(c_dense.row(j).transpose());
    s_g.col(j) = c_dense * col;
  }
  BlockBuilder myb;
  myb.add_block(0, 0, SparseMat(m.blocks.m_q));
  myb.add_block(n_p, n_p, SparseMat(s_g.sparseView()));

  InfSupBlocks out;
  out.b = bb.build(n_p + n_g, n_uf + n_wf);
  out.mx = mxb.build(n_uf + n_wf, n_uf + n_wf);
  out.my = myb.build(n_p + n_g, n_p + n_g);
  return out;
}

// Smallest whitened singular value of the coupled constraint block per
// level. The dt argument is accepted for interface uniformity; the
// fully discrete constraint form carries no time-step scaling.
inline std::vector<InfSupRecord> run_infsup_sweep(const std::vector<int>& levels,
                                                  double /*dt*/ = 1e-4) {
  if (levels.empty())
    throw std::invalid_argument("run_infsup_sweep: levels must be non-empty");
  std::vector<InfSupRecord> recs;
  for (int n : levels) {
    auto model = build_mms_model(n, PhysicalParams{});
    const auto blocks = build_infsup_blocks(*model);
    InfSupRecord r;
    r.level = n;
    r.h = 1.0 / n;
    r.beta = smallest_generalized_singular_value(blocks.b, blocks.mx, blocks.my);
    recs.push_back(r);
  }
  return recs;
}

}  // namespace fsiplate
