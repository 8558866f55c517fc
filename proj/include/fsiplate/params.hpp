#pragma once

#include <stdexcept>

#include "fsiplate/types.hpp"

namespace fsiplate {

// Physical coefficients of the coupled problem. rho_rot is the rotational
// inertia coefficient multiplying the second time derivative of the
// auxiliary variable; omega scales only the two plate time-derivative
// terms (1 outside the temporal-convergence study).
struct PhysicalParams {
  double rho_f = 1.0;               // fluid density
  double nu_f = 1.0;                // kinematic viscosity
  double rho_rot = 1.0;             // rotational inertia coefficient
  double rho_p = 1.0;               // plate density
  double flexural_rigidity = 1.0;   // plate flexural rigidity
  double omega = 1.0;               // plate time-derivative scaling

  bool operator==(const PhysicalParams&) const = default;

  void validate() const {
    if (!(rho_f > 0.0)) throw std::invalid_argument("PhysicalParams: rho_f must be > 0");
    if (!(nu_f > 0.0)) throw std::invalid_argument("PhysicalParams: nu_f must be > 0");
    if (!(rho_p > 0.0)) throw std::invalid_argument("PhysicalParams: rho_p must be > 0");
    if (!(flexural_rigidity > 0.0))
      throw std::invalid_argument("PhysicalParams: flexural rigidity must be > 0");
    if (rho_rot < 0.0) throw std::invalid_argument("PhysicalParams: rho_rot must be >= 0");
    if (!(omega > 0.0)) throw std::invalid_argument("PhysicalParams: omega must be > 0");
  }
};

enum class CouplingMode { Partitioned, Monolithic };

// Controls of the per-step interface iteration.
struct CouplingConfig {
  CouplingMode mode = CouplingMode::Partitioned;
  double tolerance = 1e-8;  // relative L2 change of the interface velocity
  int max_iterations = 50;
  double theta = 1.0;       // under-relaxation of the interface update

  bool operator==(const CouplingConfig&) const = default;

  void validate() const {
    if (!(tolerance > 0.0))
      throw std::invalid_argument("CouplingConfig: tolerance must be > 0");
    if (max_iterations < 1)
      throw std::invalid_argument("CouplingConfig: max_iterations must be >= 1");
    if (!(theta > 0.0) || theta > 1.0)
      throw std::invalid_argument("CouplingConfig: theta must be in (0, 1]");
  }
};

}  // namespace fsiplate
