#pragma once

#include <Eigen/SparseLU>

#include <random>
#include <string>

#include "fsiplate/sparse.hpp"
#include "fsiplate/types.hpp"

namespace fsiplate {

struct LinearSolveReport {
  double relative_residual = 0.0;  // ||Ax - b|| / max(||b||, tiny)
  bool reused_factorization = false;
  Index factor_nonzeros = 0;  // fill-in: nnz(L) + nnz(U)
};

// Serial sparse LU with column reordering; one factorization serves every
// right-hand side of a time loop (the coupled matrices depend only on mesh,
// parameters and time-step size, not on time).
class LuSolver {
 public:
  void factorize(const SparseMat& a) {
    if (a.rows() != a.cols())
      throw std::invalid_argument("LuSolver: matrix must be square");
    a_ = a;  // row-major -> column-major copy, also kept for residuals
    lu_.compute(a_);
    if (lu_.info() != Eigen::Success)
      throw SingularSystemError(
          "LuSolver: factorization failed: " + lu_.lastErrorMessage(),
          parse_pivot(lu_.lastErrorMessage()));
    factorized_ = true;
    fresh_ = true;
  }

  bool factorized() const { return factorized_; }
  Index rows() const { return static_cast<Index>(a_.rows()); }

  VecX solve(const VecX& b, LinearSolveReport* report = nullptr) const {
    if (!factorized_) throw std::logic_error("LuSolver: factorize first");
    if (b.size() != a_.rows())
      throw std::invalid_argument("LuSolver: right-hand side size mismatch");
    VecX x = lu_.solve(b);
    if (lu_.info() != Eigen::Success)
      throw SingularSystemError("LuSolver: solve failed");
    if (report) {
      const double bn = b.norm();
      report->relative_residual = (a_ * x - b).norm() / (bn > 0.0 ? bn : 1.0);
      report->reused_factorization = !fresh_;
      report->factor_nonzeros = static_cast<Index>(lu_.nnzL() + lu_.nnzU());
    }
    fresh_ = false;
    return x;
  }

 private:
  static Index parse_pivot(const std::string& msg) {
    // Eigen reports "... zero pivot ..." with the offending column appended.
    size_t pos = msg.find_last_not_of("0123456789");
    if (pos == std::string::npos || pos + 1 >= msg.size()) return -1;
    return static_cast<Index>(std::stol(msg.substr(pos + 1)));
  }

  Eigen::SparseMatrix<double> a_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool factorized_ = false;
  mutable bool fresh_ = true;
};

// Smallest generalized singular value of a coupling block B: the square
// root of the smallest eigenvalue of  (B Mx^{-1} B^T) y = lambda My y,
// where Mx and My are the SPD norm matrices of the primal and dual spaces.
// The action of (B Mx^{-1} B^T)^{-1} is obtained from the bordered system
// [[Mx, B^T], [B, 0]]; inverse iteration on the pencil then converges to
// the smallest eigenvalue.
inline double smallest_generalized_singular_value(const SparseMat& b,
                                                  const SparseMat& mx,
                                                  const SparseMat& my,
                                                  int max_iterations = 500,
                                                  double tol = 1e-11) {
  const Index m = static_cast<Index>(b.rows());
  const Index n = static_cast<Index>(b.cols());
  if (mx.rows() != n || mx.cols() != n || my.rows() != m || my.cols() != m)
    throw std::invalid_argument(
        "smallest_generalized_singular_value: dimension mismatch");

  BlockBuilder bb;
  bb.add_block(0, 0, mx);
  bb.add_block(n, 0, b);
  SparseMat bt = SparseMat(b.transpose());
  bb.add_block(0, n, bt);
  LuSolver bordered;
  bordered.factorize(bb.build(n + m, n + m));

  // S y = rhs with S = B Mx^{-1} B^T: the bordered solve returns -y.
  auto apply_inverse = [&](const VecX& rhs) {
    VecX full = VecX::Zero(n + m);
    full.tail(m) = rhs;
    VecX sol = bordered.solve(full);
    return VecX(-sol.tail(m));
  };

  std::mt19937 rng(20240517u);  // fixed seed: deterministic estimates
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  VecX y(m);
  for (Index i = 0; i < m; ++i) y[i] = unit(rng);

  double lambda = 0.0, lambda_prev = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const VecX my_y = my * y;
    VecX v = apply_inverse(my_y);
    // Rayleigh-style estimate from the iteration pair: S v = My y implies
    // lambda ~ (y' My y) / (y' My v).
    const double denom = y.dot(my * v);
    lambda = y.dot(my_y) / denom;
    const double vn = std::sqrt(v.dot(my * v));
    if (!(vn > 0.0) || !std::isfinite(vn))
      throw SingularSystemError(
          "smallest_generalized_singular_value: degenerate iterate");
    y = v / vn;
    if (it > 0 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda))
      return std::sqrt(lambda);
    lambda_prev = lambda;
  }
  throw NoConvergenceError(
      "smallest_generalized_singular_value: inverse iteration cap reached",
      std::abs(lambda - lambda_prev));
}

}  // namespace fsiplate
