#pragma once

#include "qpx/geodesics.hpp"
#include "qpx/geometry.hpp"
#include "qpx/manifold.hpp"

namespace qpx {

// Nearest-point projection onto V. Uses the model closed form when declared,
// otherwise coarse-grid minimization of f(x, .) = delta(x, .)^2 over V seeded
// at the retraction image, refined by Newton on the gradient.
NearestPointResult nearest_point(const ManifoldModel& model, const ChartPoint& x);

// Always runs the grid-plus-refinement minimizer, bypassing the model's
// closed form. Oracle-grade cross-check.
NearestPointResult nearest_point_by_minimization(const ManifoldModel& model,
                                                 const ChartPoint& x);

// Gradient of f(x, .) at an intrinsic V point (the F_mu of the implicit
// solve), by central differences of point-to-point distances. Test-grade.
RVector nearest_point_gradient(const ManifoldModel& model, const ChartPoint& x,
                               const ChartPoint& y_on_V, double step = 1e-5);

// The field h = delta(., V)^2: zero exactly on V, smooth inside the tube,
// refuses evaluation outside the tube.
ScalarField squared_distance(const ManifoldModel& model);

// Globally defined capped variant min(h, cap^2); constant outside the cap.
// Smooth except on the seam { h = cap^2 }.
ScalarField capped_squared_distance(const ManifoldModel& model, double cap);

struct HessianBlockReport {
  HermitianForm form;          // complex Hessian of h in adapted coordinates
  double max_offblock = 0.0;   // max |entry| with i <= k or j <= k
  double normal_constant = 0.0;// mean of normal diagonal entries
  double normal_spread = 0.0;  // relative spread of the normal block vs c*I
};

// Complex Hessian of h at p in V in adapted coordinates, with the block
// decomposition (tangential/mixed entries vs the normal block c*I).
HessianBlockReport hessian_h_on_V(const ManifoldModel& model, const ChartPoint& p_on_V,
                                  double step = 1e-3);

// Finite-difference Jacobian of the foot map x -> y(x) at p in V, expressed
// in adapted real coordinates on both sides (2k x 2n). Expected [I | 0].
RMatrix nearest_point_jacobian(const ManifoldModel& model, const ChartPoint& p_on_V,
                               double step = 1e-3);

} // namespace qpx
