#pragma once

#include "qpx/manifold.hpp"
#include "qpx/types.hpp"

namespace qpx {

// Real <-> complex coordinate identification z_i = x_{2i-1} + i x_{2i}
// (0-based: coords (Re0, Im0, Re1, Im1, ...)).
RVector to_real(const CVector& z);
CVector to_complex(const RVector& x);

// Riemannian metric G on R^{2n} induced by the Hermitian matrix g = [g_{i jbar}]:
// |v|^2 = v^* conj(g) v for the complex components v = p + i q of a real
// tangent vector (p, q interleaved). g = I gives G = I.
RMatrix real_metric(const CMatrix& g);

// v^* conj(g) v for a complex tangent vector v (real scalar).
double metric_norm_sq(const CMatrix& g, const CVector& v);

// Complex Hessian [d^2 f / dz_i dzbar_j] by central second differences in the
// 2n real coordinates combined through the quarter-formula
//   H_ij = 1/4 ( f_{,2i-1 2j-1} + f_{,2i 2j} + i (f_{,2i-1 2j} - f_{,2i 2j-1}) ).
// Refuses points closer than max(f.smoothness_margin, 2*step) to the singular
// locus of f. Error O(step^2) for C^4 fields; result is Hermitian-symmetrized.
HermitianForm complex_hessian(const ScalarField& f, const ChartPoint& p, double step);

// Full real Hessian [d^2 f / dx_s dx_t] in the 2n real coordinates.
RMatrix real_hessian(const ScalarField& f, const ChartPoint& p, double step);

// min over v != 0 of v^*(G+H)v / v^*Gv.  Requires matching base points and a
// positive-definite G.
double min_generalized_eigenvalue(const HermitianForm& H, const HermitianForm& G);
double min_generalized_eigenvalue(const CMatrix& H, const CMatrix& G);

// Metric of the model at a point, as a HermitianForm. Certifies positive
// definiteness against the model threshold.
HermitianForm metric_at(const ManifoldModel& model, const ChartPoint& p);

// Affine-linear holomorphic coordinate change x = center + basis * zeta
// centered at p in V, such that V = {zeta_{k+1} = ... = zeta_n = 0} locally
// and the real metric at p becomes the identity (tangential coordinates
// first). Obtained by Hermitian Gram-Schmidt of the coordinate frame.
struct AdaptedChart {
  ChartPoint center;     // p expressed in the host chart
  CMatrix basis;         // columns: tangential then normal directions
  int tangential_dim = 0;

  ChartPoint point(const CVector& zeta) const {
    return ChartPoint(center.chart, center.coords + basis * zeta);
  }
  // Pull an ambient field back to adapted coordinates around p.
  ScalarField pullback(const ScalarField& f) const;
};

AdaptedChart adapted_chart(const ManifoldModel& model, const ChartPoint& p_on_V);

} // namespace qpx
