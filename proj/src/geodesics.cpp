#include "qpx/geodesics.hpp"

#include <Eigen/LU>

namespace qpx {

namespace {

// Christoffel symbols of the induced real metric, by central differences of
// the closed-form metric. gamma[a](b,c) contracted on demand.
struct ChristoffelEval {
  const ManifoldModel& model;
  std::string chart;
  double step = 1e-5;

  RMatrix G(const RVector& x) const {
    return real_metric(model.ambient.metric(ChartPoint(chart, to_complex(x))));
  }
  // acceleration a^d = -Gamma^d_{bc} v^b v^c
  RVector acceleration(const RVector& x, const RVector& v) const {
    const int n = (int)x.size();
    RMatrix G0 = G(x);
    std::vector<RMatrix> dG(n);
    for (int d = 0; d < n; ++d) {
      RVector e = RVector::Zero(n);
      e[d] = step;
      dG[d] = (G(x + e) - G(x - e)) / (2.0 * step);
    }
    // w_d = (dG[b](d,c) + dG[c](d,b) - dG[d](b,c)) v^b v^c / 2, acc = -G0^{-1} w
    RVector w = RVector::Zero(n);
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          s += (dG[b](d, c) + dG[c](d, b) - dG[d](b, c)) * v[b] * v[c];
      w[d] = 0.5 * s;
    }
    return -G0.llt().solve(w);
  }
};

} // namespace

std::pair<RVector, RVector> geodesic_endpoint(const ManifoldModel& model,
                                              const ChartPoint& start,
                                              const RVector& velocity, int steps) {
  ChristoffelEval ce{model, start.chart};
  const int n = (int)velocity.size();
  RVector x = to_real(start.coords), v = velocity;
  const double dt = 1.0 / steps;
  auto rhs = [&](const RVector& xx, const RVector& vv, RVector& dx, RVector& dv) {
    dx = vv;
    dv = ce.acceleration(xx, vv);
  };
  RVector k1x(n), k1v(n), k2x(n), k2v(n), k3x(n), k3v(n), k4x(n), k4v(n);
  for (int i = 0; i < steps; ++i) {
    rhs(x, v, k1x, k1v);
    rhs(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, k2x, k2v);
    rhs(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, k3x, k3v);
    rhs(x + dt * k3x, v + dt * k3v, k4x, k4v);
    x += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return {x, v};
}

ShootingResult shoot_geodesic(const ManifoldModel& model, const GeodesicProblem& prob) {
  if (prob.start.chart != prob.target.chart)
    fail(ErrorKind::Parameter, "shooting endpoints must share a chart");
  const int n2 = 2 * prob.start.dim();
  CVector dz = model.ambient.delta(prob.start, prob.target);
  RVector target = to_real(prob.start.coords) + to_real(dz);
  RVector v = to_real(dz);

  auto endpoint = [&](const RVector& vel) {
    return geodesic_endpoint(model, prob.start, vel, prob.steps).first;
  };

  double res = 0.0;
  for (int it = 0; it < prob.max_newton; ++it) {
    RVector F = endpoint(v) - target;
    res = F.cwiseAbs().maxCoeff();
    if (res < prob.tol) {
      RMatrix g0 = real_metric(model.ambient.metric(prob.start));
      ShootingResult out;
      out.initial_velocity = v;
      out.distance = std::sqrt(v.dot(g0 * v));
      out.residual = res;
      out.iterations = it;
      return out;
    }
    RMatrix J(n2, n2);
    const double h = 1e-6;
    for (int d = 0; d < n2; ++d) {
      RVector e = RVector::Zero(n2);
      e[d] = h;
      J.col(d) = (endpoint(v + e) - endpoint(v - e)) / (2.0 * h);
    }
    v -= J.partialPivLu().solve(F);
  }
  fail(ErrorKind::Convergence,
       "geodesic shooting did not converge; residual " + std::to_string(res));
}

double geodesic_distance(const ManifoldModel& model, const ChartPoint& x,
                         const ChartPoint& y) {
  if (model.closed_distance) return model.closed_distance(x, y);

  ChartPoint a = model.ambient.canonicalize(x);
  auto b = model.ambient.transition(model.ambient.canonicalize(y), a.chart);
  if (!b) fail(ErrorKind::Domain, "points do not share a chart for shooting");
  CVector gap = model.ambient.delta(a, *b);
  if (std::sqrt(to_real(gap).squaredNorm()) > model.locality_radius)
    fail(ErrorKind::Precondition, "points exceed the model locality radius");

  GeodesicProblem prob;
  prob.start = a;
  prob.target = *b;
  prob.steps = 48;
  double d1 = shoot_geodesic(model, prob).distance;
  prob.steps = 96;
  double d2 = shoot_geodesic(model, prob).distance;
  if (std::abs(d2 - d1) >= 1e-8) {
    prob.steps = 192;
    double d3 = shoot_geodesic(model, prob).distance;
    if (std::abs(d3 - d2) >= 1e-8)
      fail(ErrorKind::Convergence, "geodesic integration not converged under refinement");
    return d3;
  }
  return d2;
}

} // namespace qpx
