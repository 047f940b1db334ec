#pragma once

#include "qpx/geometry.hpp"
#include "qpx/manifold.hpp"

namespace qpx {

// Boundary-value problem for a geodesic between two points in one chart.
struct GeodesicProblem {
  ChartPoint start;
  ChartPoint target;
  int steps = 48;          // RK4 steps for [0, 1]
  int max_newton = 60;
  double tol = 1e-12;      // endpoint residual in chart coordinates
};

struct ShootingResult {
  RVector initial_velocity; // real 2n components at `start`
  double distance = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Integrate the geodesic ODE with initial position/velocity for unit time.
// The metric is the model metric in the chart of `start`. Returns the state
// (position, velocity) as real vectors.
std::pair<RVector, RVector> geodesic_endpoint(const ManifoldModel& model,
                                              const ChartPoint& start,
                                              const RVector& velocity, int steps);

// Newton shooting for the two-point problem. Throws ErrorKind::Convergence
// with the residual when it fails.
ShootingResult shoot_geodesic(const ManifoldModel& model, const GeodesicProblem& prob);

// delta(x, y). Uses the model closed form when declared, otherwise shooting
// with step refinement (halving must move the distance by < 1e-8).
double geodesic_distance(const ManifoldModel& model, const ChartPoint& x,
                         const ChartPoint& y);

} // namespace qpx
