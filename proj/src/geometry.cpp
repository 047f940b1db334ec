#include "qpx/geometry.hpp"

#include <Eigen/Eigenvalues>

namespace qpx {

RVector to_real(const CVector& z) {
  RVector x(2 * z.size());
  for (long i = 0; i < z.size(); ++i) {
    x[2 * i] = z[i].real();
    x[2 * i + 1] = z[i].imag();
  }
  return x;
}

CVector to_complex(const RVector& x) {
  CVector z(x.size() / 2);
  for (long i = 0; i < z.size(); ++i) z[i] = Complex(x[2 * i], x[2 * i + 1]);
  return z;
}

RMatrix real_metric(const CMatrix& g) {
  const long n = g.rows();
  CMatrix H = g.conjugate(); // |v|^2 = v^* H v
  RMatrix A = H.real(), B = H.imag();
  RMatrix G(2 * n, 2 * n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      G(2 * i, 2 * j) = A(i, j);
      G(2 * i, 2 * j + 1) = -B(i, j);
      G(2 * i + 1, 2 * j) = B(i, j);
      G(2 * i + 1, 2 * j + 1) = A(i, j);
    }
  return G;
}

double metric_norm_sq(const CMatrix& g, const CVector& v) {
  return (v.adjoint() * g.conjugate() * v)(0, 0).real();
}

namespace {

void check_fd_admissible(const ScalarField& f, const ChartPoint& p, double step) {
  if (!(step > 0)) fail(ErrorKind::Parameter, "finite-difference step must be > 0");
  if (step < 1e-8)
    fail(ErrorKind::Parameter, "finite-difference step below coordinate resolution");
  double guard = std::max(f.smoothness_margin, 2.0 * step);
  double prox = f.proximity_sq(p);
  if (prox < guard * guard)
    fail(ErrorKind::Domain,
         "refusing Hessian sample: point within " + std::to_string(guard) +
             " of the singular locus of field '" + f.name + "'");
}

} // namespace

RMatrix real_hessian(const ScalarField& f, const ChartPoint& p, double step) {
  check_fd_admissible(f, p, step);
  const int n2 = 2 * p.dim();
  RVector x0 = to_real(p.coords);
  auto F = [&](const RVector& x) {
    return f.evaluate(ChartPoint(p.chart, to_complex(x)));
  };
  const double f0 = F(x0);
  RMatrix Hess(n2, n2);
  for (int a = 0; a < n2; ++a) {
    RVector ea = RVector::Zero(n2);
    ea[a] = step;
    Hess(a, a) = (F(x0 + ea) - 2.0 * f0 + F(x0 - ea)) / (step * step);
    for (int b = a + 1; b < n2; ++b) {
      RVector eb = RVector::Zero(n2);
      eb[b] = step;
      double v = (F(x0 + ea + eb) - F(x0 + ea - eb) - F(x0 - ea + eb) +
                  F(x0 - ea - eb)) /
                 (4.0 * step * step);
      Hess(a, b) = Hess(b, a) = v;
    }
  }
  return Hess;
}

HermitianForm complex_hessian(const ScalarField& f, const ChartPoint& p, double step) {
  RMatrix R = real_hessian(f, p, step);
  const int n = p.dim();
  CMatrix H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
      H(i, j) = 0.25 * Complex(R(xi, xj) + R(yi, yj), R(xi, yj) - R(yi, xj));
    }
  HermitianForm out{p, std::move(H)};
  out.symmetrize();
  return out;
}

double min_generalized_eigenvalue(const CMatrix& H, const CMatrix& G) {
  if (H.rows() != G.rows() || H.cols() != G.cols() || H.rows() != H.cols())
    fail(ErrorKind::Parameter, "generalized eigenvalue: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> gchk(G);
  if (gchk.eigenvalues().minCoeff() <= 0)
    fail(ErrorKind::Parameter, "generalized eigenvalue: G is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> solver(G + H, G,
                                                           Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double min_generalized_eigenvalue(const HermitianForm& H, const HermitianForm& G) {
  if (!same_point(H.base, G.base))
    fail(ErrorKind::Parameter, "generalized eigenvalue: base points differ");
  return min_generalized_eigenvalue(H.entries, G.entries);
}

HermitianForm metric_at(const ManifoldModel& model, const ChartPoint& p) {
  model.ambient.require_inside(p);
  CMatrix g = model.ambient.metric(p);
  HermitianForm form = make_hermitian(p, std::move(g));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(form.entries, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0)
    fail(ErrorKind::ModelDefinition, "metric is not positive definite at sample");
  return form;
}

ScalarField AdaptedChart::pullback(const ScalarField& f) const {
  ScalarField g;
  ChartPoint c = center;
  CMatrix U = basis;
  auto inner = f;
  g.evaluate = [c, U, inner](const ChartPoint& zeta) {
    return inner.evaluate(ChartPoint(c.chart, c.coords + U * zeta.coords));
  };
  if (inner.singular_proximity_sq) {
    g.singular_proximity_sq = [c, U, inner](const ChartPoint& zeta) {
      return inner.singular_proximity_sq(ChartPoint(c.chart, c.coords + U * zeta.coords));
    };
  }
  g.smoothness_margin = f.smoothness_margin;
  g.name = f.name + "|adapted";
  return g;
}

AdaptedChart adapted_chart(const ManifoldModel& model, const ChartPoint& p_on_V) {
  // Host chart: one in which V is affine-linear and that contains p.
  ChartPoint p = p_on_V;
  auto it = model.V.linear_charts.find(p.chart);
  if (it == model.V.linear_charts.end()) {
    for (const auto& [chart_id, data] : model.V.linear_charts) {
      auto moved = model.ambient.transition(p, chart_id);
      if (moved) {
        p = *moved;
        it = model.V.linear_charts.find(chart_id);
        break;
      }
    }
  }
  if (it == model.V.linear_charts.end())
    fail(ErrorKind::Domain, "no chart with linear V contains the point");
  if (!model.V.contains(p, 1e-9))
    fail(ErrorKind::Precondition, "adapted_chart: point is not on V");

  const auto& lin = it->second;
  const int n = p.dim();
  const int k = static_cast<int>(lin.tangential.size());
  CMatrix g = model.ambient.metric(p);
  CMatrix H = g.conjugate(); // |v|^2 = v^* H v

  // Frame: coordinate directions, tangential first, then Gram-Schmidt in H.
  CMatrix frame = CMatrix::Zero(n, n);
  int col = 0;
  for (int idx : lin.tangential) frame(idx, col++) = 1.0;
  for (int idx : lin.normal) frame(idx, col++) = 1.0;
  CMatrix U = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    CVector u = frame.col(j);
    for (int i = 0; i < j; ++i) {
      Complex proj = (U.col(i).adjoint() * H * u)(0, 0);
      u -= proj * U.col(i);
    }
    double norm = std::sqrt((u.adjoint() * H * u)(0, 0).real());
    if (!(norm > 0)) fail(ErrorKind::ModelDefinition, "degenerate metric frame");
    U.col(j) = u / norm;
  }
  AdaptedChart out;
  out.center = p;
  out.basis = std::move(U);
  out.tangential_dim = k;
  return out;
}

} // namespace qpx
