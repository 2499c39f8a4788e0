#pragma once

// umbrella header; modules stay individually includable

#include "driftmass/barriers.hpp"
#include "driftmass/chart.hpp"
#include "driftmass/curvature.hpp"
#include "driftmass/decay.hpp"
#include "driftmass/drift_laplace.hpp"
#include "driftmass/functional.hpp"
#include "driftmass/level_surface.hpp"
#include "driftmass/mass.hpp"
#include "driftmass/sphere_quadrature.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/fit.hpp"
#include "driftmass/grid_field.hpp"
#include "driftmass/grid_solver.hpp"
#include "driftmass/jet.hpp"
#include "driftmass/normal_coordinates.hpp"
#include "driftmass/pole_expansion.hpp"
#include "driftmass/potential.hpp"
#include "driftmass/radial_solver.hpp"
#include "driftmass/tensor.hpp"
#include "driftmass/vec.hpp"
