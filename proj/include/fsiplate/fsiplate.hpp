#pragma once

// Umbrella header: the full solver stack in dependency order.
#include "fsiplate/types.hpp"
#include "fsiplate/params.hpp"
#include "fsiplate/quadrature.hpp"
#include "fsiplate/reference_element.hpp"
#include "fsiplate/mesh.hpp"
#include "fsiplate/fe_space.hpp"
#include "fsiplate/sparse.hpp"
#include "fsiplate/linear_solver.hpp"
#include "fsiplate/assembly.hpp"
#include "fsiplate/mms.hpp"
#include "fsiplate/coupled_solver.hpp"
#include "fsiplate/experiments.hpp"
#include "fsiplate/config.hpp"
#include "fsiplate/report.hpp"
