#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace fsiplate {

using Index = std::int32_t;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Triplet = Eigen::Triplet<double>;

// Time-dependent fields used for forcing, boundary and initial data.
using ScalarField2 = std::function<double(const Vec2&, double)>;
using ScalarField3 = std::function<double(const Vec3&, double)>;
using VectorField3 = std::function<Vec3(const Vec3&, double)>;

// A linear system turned out singular; carries whatever pivot/column
// information the factorization reported (-1 when unavailable).
struct SingularSystemError : std::runtime_error {
  explicit SingularSystemError(const std::string& msg, Index pivot = -1)
      : std::runtime_error(msg), pivot_column(pivot) {}
  Index pivot_column;
};

// An iteration (fixed point, inverse iteration) hit its cap.
struct NoConvergenceError : std::runtime_error {
  NoConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), last_residual(residual) {}
  double last_residual;
};

// Dirichlet data for the enclosed fluid violates the compatibility
// condition (nonzero net flux through the boundary).
struct CompatibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Point evaluation outside the mesh.
struct OutOfDomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration; carries the offending key.
struct ConfigurationError : std::invalid_argument {
  ConfigurationError(const std::string& the_key, const std::string& msg)
      : std::invalid_argument("config key '" + the_key + "': " + msg), key(the_key) {}
  std::string key;
};

}  // namespace fsiplate
