#include "qpx/distance.hpp"

#include <Eigen/LU>

namespace qpx {

namespace {

double point_to_set_sq(const ManifoldModel& model, const ChartPoint& x,
                       const ChartPoint& y_on_V) {
  double d = geodesic_distance(model, x, model.V.include(y_on_V));
  return d * d;
}

// Newton refinement of the foot over the intrinsic V coordinates.
ChartPoint refine_foot(const ManifoldModel& model, const ChartPoint& x,
                       ChartPoint y, double& fval) {
  const int m = 2 * y.dim();
  const double h = 1e-5;
  auto grad = [&](const ChartPoint& yy) {
    RVector g(m);
    RVector y0 = to_real(yy.coords);
    for (int a = 0; a < m; ++a) {
      RVector e = RVector::Zero(m);
      e[a] = h;
      double fp = point_to_set_sq(model, x, ChartPoint(yy.chart, to_complex(y0 + e)));
      double fm = point_to_set_sq(model, x, ChartPoint(yy.chart, to_complex(y0 - e)));
      g[a] = (fp - fm) / (2 * h);
    }
    return g;
  };
  for (int it = 0; it < 40; ++it) {
    RVector g = grad(y);
    if (g.cwiseAbs().maxCoeff() < 1e-11) break;
    RMatrix J(m, m);
    RVector y0 = to_real(y.coords);
    for (int a = 0; a < m; ++a) {
      RVector e = RVector::Zero(m);
      e[a] = h;
      J.col(a) = (grad(ChartPoint(y.chart, to_complex(y0 + e))) -
                  grad(ChartPoint(y.chart, to_complex(y0 - e)))) /
                 (2 * h);
    }
    RVector stepv = J.partialPivLu().solve(g);
    if (!stepv.allFinite())
      fail(ErrorKind::Convergence, "nearest-point Newton produced a singular system");
    y = ChartPoint(y.chart, to_complex(to_real(y.coords) - stepv));
  }
  fval = point_to_set_sq(model, x, y);
  return y;
}

NearestPointResult generic_nearest(const ManifoldModel& model, const ChartPoint& x) {
  // Seed from the retraction image, then scan a local grid on V.
  ChartPoint seed = model.retraction(x);
  const int m = 2 * seed.dim();
  double best = point_to_set_sq(model, x, seed);
  ChartPoint besty = seed;
  const double radius = 0.2;
  const int nsc = 5;
  RVector s0 = to_real(seed.coords);
  std::vector<int> idx(m, 0);
  long total = 1;
  for (int a = 0; a < m; ++a) total *= nsc;
  for (long t = 0; t < total; ++t) {
    RVector s = s0;
    for (int a = 0; a < m; ++a)
      s[a] += (idx[a] - (nsc - 1) / 2.0) * (2.0 * radius / (nsc - 1));
    ChartPoint cand(seed.chart, to_complex(s));
    double f = point_to_set_sq(model, x, cand);
    if (f < best - 1e-12) {
      best = f;
      besty = cand;
    }
    for (int a = m - 1; a >= 0; --a) {
      if (++idx[a] < nsc) break;
      idx[a] = 0;
    }
  }
  double fval = best;
  ChartPoint foot_v = refine_foot(model, x, besty, fval);

  NearestPointResult out;
  out.query = x;
  out.foot_on_V = model.V.intrinsic.canonicalize ? model.V.intrinsic.canonicalize(foot_v)
                                                 : foot_v;
  out.foot = model.V.include(foot_v);
  out.distance = std::sqrt(std::max(0.0, fval));
  // exp-inverse from the two-point shooting solution in x's chart.
  auto foot_in_chart = model.ambient.transition(out.foot, x.chart);
  if (foot_in_chart) {
    GeodesicProblem prob;
    prob.start = x;
    prob.target = *foot_in_chart;
    auto sh = shoot_geodesic(model, prob);
    out.exp_inverse = to_complex(sh.initial_velocity);
  } else {
    out.exp_inverse = CVector::Zero(x.dim());
  }
  return out;
}

} // namespace

NearestPointResult nearest_point(const ManifoldModel& model, const ChartPoint& x) {
  if (model.closed_nearest) return model.closed_nearest(model, x);
  NearestPointResult r = generic_nearest(model, x);
  if (r.distance > model.tube_radius)
    fail(ErrorKind::Precondition, "point outside the declared tube radius of V");
  return r;
}

NearestPointResult nearest_point_by_minimization(const ManifoldModel& model,
                                                 const ChartPoint& x) {
  return generic_nearest(model, x);
}

RVector nearest_point_gradient(const ManifoldModel& model, const ChartPoint& x,
                               const ChartPoint& y_on_V, double step) {
  const int m = 2 * y_on_V.dim();
  RVector g(m);
  RVector y0 = to_real(y_on_V.coords);
  for (int a = 0; a < m; ++a) {
    RVector e = RVector::Zero(m);
    e[a] = step;
    double fp = point_to_set_sq(model, x, ChartPoint(y_on_V.chart, to_complex(y0 + e)));
    double fm = point_to_set_sq(model, x, ChartPoint(y_on_V.chart, to_complex(y0 - e)));
    g[a] = (fp - fm) / (2 * step);
  }
  return g;
}

namespace {

double distance_to_V_value(const ManifoldModel& m, const ChartPoint& p) {
  if (m.distance_to_V) return m.distance_to_V(p);
  return nearest_point(m, p).distance;
}

} // namespace

ScalarField squared_distance(const ManifoldModel& model) {
  const ManifoldModel* m = &model;
  ScalarField h;
  h.name = "h";
  h.evaluate = [m](const ChartPoint& p) {
    double d = distance_to_V_value(*m, p);
    if (d > m->tube_radius)
      fail(ErrorKind::OutsideTube, "h evaluated outside the tube neighborhood of V");
    return d * d;
  };
  h.smoothness_margin = 0.0;
  return h;
}

ScalarField capped_squared_distance(const ManifoldModel& model, double cap) {
  if (!(cap > 0 && cap <= model.tube_radius))
    fail(ErrorKind::Parameter, "cap must lie in (0, tube_radius]");
  const ManifoldModel* m = &model;
  ScalarField h;
  h.name = "h_capped";
  h.evaluate = [m, cap](const ChartPoint& p) {
    double d = std::min(distance_to_V_value(*m, p), cap);
    return d * d;
  };
  return h;
}

HessianBlockReport hessian_h_on_V(const ManifoldModel& model, const ChartPoint& p_on_V,
                                  double step) {
  AdaptedChart ac = adapted_chart(model, p_on_V);
  ScalarField h = squared_distance(model);
  ScalarField h_ad = ac.pullback(h);
  ChartPoint origin(ac.center.chart, CVector::Zero(ac.center.dim()));
  HermitianForm form = complex_hessian(h_ad, origin, step);

  HessianBlockReport rep;
  const int n = ac.center.dim();
  const int k = ac.tangential_dim;
  double offmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i < k || j < k) offmax = std::max(offmax, std::abs(form.entries(i, j)));
  double cmean = 0.0;
  for (int i = k; i < n; ++i) cmean += form.entries(i, i).real();
  cmean /= std::max(1, n - k);
  double spread = 0.0;
  for (int i = k; i < n; ++i)
    for (int j = k; j < n; ++j) {
      Complex expect = (i == j) ? Complex(cmean, 0) : Complex(0, 0);
      spread = std::max(spread, std::abs(form.entries(i, j) - expect));
    }
  rep.form = std::move(form);
  rep.max_offblock = offmax;
  rep.normal_constant = cmean;
  rep.normal_spread = (cmean != 0.0) ? spread / std::abs(cmean) : spread;
  return rep;
}

RMatrix nearest_point_jacobian(const ManifoldModel& model, const ChartPoint& p_on_V,
                               double step) {
  AdaptedChart ac = adapted_chart(model, p_on_V);
  const int n = ac.center.dim();
  const int k = ac.tangential_dim;
  CMatrix Uinv = ac.basis.inverse();

  // foot map in adapted coordinates: zeta -> first k adapted coords of y(x).
  auto foot_adapted = [&](const RVector& zeta_real) {
    ChartPoint x = ac.point(to_complex(zeta_real));
    NearestPointResult r = nearest_point(model, x);
    auto foot_here = model.ambient.transition(r.foot, ac.center.chart);
    if (!foot_here) fail(ErrorKind::Domain, "foot left the adapted chart");
    CVector rel = Uinv * model.ambient.delta(ac.center, *foot_here);
    RVector out(2 * k);
    for (int i = 0; i < k; ++i) {
      out[2 * i] = rel[i].real();
      out[2 * i + 1] = rel[i].imag();
    }
    return out;
  };

  RMatrix J(2 * k, 2 * n);
  for (int a = 0; a < 2 * n; ++a) {
    RVector e = RVector::Zero(2 * n);
    e[a] = step;
    J.col(a) = (foot_adapted(e) - foot_adapted(-e)) / (2.0 * step);
  }
  return J;
}

} // namespace qpx
