#pragma once

#include "hdgstokes/assembly.hpp"

namespace hdgstokes {

/// Closed-form Stokes solution on (0,1)^2 with exactly divergence-free
/// velocity (curl of the stream function sin(pi x) sin(pi y)) and zero-mean
/// pressure; body_force = -lap(u) + grad(p).
struct MmsSolution {
  Rect domain;
  VectorField velocity;
  ScalarField pressure;
  VectorField body_force;
};

MmsSolution make_sine_mms();

/// Lid-driven cavity data on [-1,1]^2: u = (1 - x^4, 0) on the y = 1 lid
/// (selected by geometric predicate), zero elsewhere, zero body force.
struct CavityProblem {
  Rect domain;
  VectorField boundary_velocity;
};

CavityProblem make_lid_driven_cavity();

}  // namespace hdgstokes
