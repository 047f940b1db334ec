#include "qpx/models.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "qpx/distance.hpp"
#include "qpx/geodesics.hpp"
#include "qpx/geometry.hpp"
#include "qpx/grid.hpp"

namespace qpx {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------- torus ----

struct TorusOps {
  Complex tau;

  // Centered fundamental-domain representative; deterministic tie-break.
  Complex reduce(Complex z, Complex* lambda_out = nullptr) const {
    double nf = z.imag() / tau.imag();
    long n0 = std::lround(nf);
    double mf = z.real() - nf * tau.real();
    long m0 = std::lround(mf);
    Complex best_lambda(0, 0);
    double best = std::numeric_limits<double>::infinity();
    for (long dn = -1; dn <= 1; ++dn)
      for (long dm = -1; dm <= 1; ++dm) {
        Complex lambda = Complex(double(m0 + dm), 0) + double(n0 + dn) * tau;
        double d = std::abs(z - lambda);
        if (d < best - 1e-15) {
          best = d;
          best_lambda = lambda;
        }
      }
    if (lambda_out) *lambda_out = best_lambda;
    return z - best_lambda;
  }

  double dist(Complex a, Complex b) const { return std::abs(reduce(b - a)); }

  // Distance from a reduced point to the Voronoi cell boundary (cut locus).
  double cut_proximity(Complex z) const {
    double best = std::numeric_limits<double>::infinity();
    for (long n = -1; n <= 1; ++n)
      for (long m = -1; m <= 1; ++m) {
        if (m == 0 && n == 0) continue;
        Complex lambda = Complex(double(m), 0) + double(n) * tau;
        double L = std::abs(lambda);
        double d = (0.5 * L * L - (z * std::conj(lambda)).real()) / L;
        best = std::min(best, std::abs(d));
      }
    return best;
  }

  double half_re() const { return 0.5 * (1.0 + std::abs(tau.real())); }
  double half_im() const { return 0.5 * tau.imag(); }
};

// ------------------------------------------------------------------ P^1 ----

// Fubini-Study potential log(1+|w|^2); charts "a" (w) and "b" (1/w).
struct P1Ops {
  double box = 1.25;

  static double metric_coeff(Complex w) {
    double q = std::norm(w);
    return 1.0 / ((1.0 + q) * (1.0 + q));
  }
  // arccos of the normalized homogeneous pairing; [1:w] in chart a, [v:1] in b.
  static double dist_homog(Complex x0, Complex y0, Complex x1, Complex y1) {
    double n0 = std::sqrt(std::norm(x0) + std::norm(y0));
    double n1 = std::sqrt(std::norm(x1) + std::norm(y1));
    double c = std::abs(x0 * std::conj(x1) + y0 * std::conj(y1)) / (n0 * n1);
    return std::acos(std::min(1.0, std::max(0.0, c)));
  }
};

// ------------------------------------------------------- factor plumbing ---

struct FactorOps {
  std::string kind; // "p1" | "torus"
  TorusOps torus;
  P1Ops p1;

  int chart_count() const { return kind == "p1" ? 2 : 1; }
  std::string chart_suffix(int i) const {
    if (kind == "p1") return i == 0 ? "a" : "b";
    return "t";
  }
  double half_width_re(int) const {
    return kind == "p1" ? p1.box : torus.half_re() + 0.25;
  }
  double half_width_im(int) const {
    return kind == "p1" ? p1.box : torus.half_im() + 0.25;
  }
  double metric_coeff(int chart_idx, Complex v) const {
    (void)chart_idx;
    return kind == "p1" ? P1Ops::metric_coeff(v) : 1.0;
  }
  double potential(int chart_idx, Complex v) const {
    (void)chart_idx;
    return kind == "p1" ? std::log1p(std::norm(v)) : std::norm(v);
  }
  // canonical chart index + reduced coordinate
  std::pair<int, Complex> canonicalize(int chart_idx, Complex v) const {
    if (kind == "torus") return {0, torus.reduce(v)};
    if (chart_idx == 0) return std::norm(v) <= 1.0 ? std::make_pair(0, v)
                                                   : std::make_pair(1, 1.0 / v);
    return std::norm(v) <= 1.0 ? std::make_pair(1, v) : std::make_pair(0, 1.0 / v);
  }
  std::optional<Complex> transition(int from, int to, Complex v) const {
    if (from == to) return v;
    if (kind != "p1") return std::nullopt;
    if (std::abs(v) < 1e-12) return std::nullopt;
    return 1.0 / v;
  }
  double dist(int ca, Complex va, int cb, Complex vb) const {
    if (kind == "torus") return torus.dist(va, vb);
    Complex x0 = ca == 0 ? Complex(1, 0) : va;
    Complex y0 = ca == 0 ? va : Complex(1, 0);
    Complex x1 = cb == 0 ? Complex(1, 0) : vb;
    Complex y1 = cb == 0 ? vb : Complex(1, 0);
    return P1Ops::dist_homog(x0, y0, x1, y1);
  }
};

FactorOps make_factor(const ProductFactor& f) {
  FactorOps ops;
  ops.kind = f.kind;
  if (f.kind == "torus") {
    if (!(f.tau.imag() > 0))
      fail(ErrorKind::Parameter, "torus modulus must satisfy Im(tau) > 0");
    ops.torus.tau = f.tau;
  } else if (f.kind != "p1") {
    fail(ErrorKind::Parameter, "unknown product factor kind '" + f.kind + "'");
  }
  return ops;
}

void run_load_time_checks(const ManifoldModel& model) {
  auto checks = validate_model(model);
  for (const auto& c : checks)
    if (!c.pass)
      fail(ErrorKind::ModelDefinition,
           "model invariant '" + c.name + "' failed: " + c.detail);
}

// ------------------------------------------------------------------ flat ---

ScalarField model_h_field(const ManifoldModel* m); // below

} // namespace

ManifoldModel build_flat_model(const FlatModelParams& params) {
  if (!(params.a1 > 0 && params.a2 > 0))
    fail(ErrorKind::Parameter, "flat model scales must be positive");
  auto model = ManifoldModel{};
  model.kind = "flat2d";
  const double a1 = params.a1, a2 = params.a2;

  Chart c0 = make_box_chart("c0", 2, params.box);
  model.ambient.charts = {c0};
  model.ambient.metric = [a1, a2](const ChartPoint&) {
    CMatrix g(2, 2);
    g << a1, 0, 0, a2;
    return g;
  };
  model.ambient.potential = [a1, a2](const ChartPoint& p) {
    return a1 * std::norm(p.coords[0]) + a2 * std::norm(p.coords[1]);
  };
  model.ambient.canonicalize = [](const ChartPoint& p) { return p; };
  model.ambient.transition = [](const ChartPoint& p, const std::string& chart)
      -> std::optional<ChartPoint> {
    if (chart == p.chart) return p;
    return std::nullopt;
  };

  Chart v0 = make_box_chart("v0", 1, params.box);
  model.V.intrinsic.charts = {v0};
  model.V.intrinsic.metric = [a1](const ChartPoint&) {
    CMatrix g(1, 1);
    g << a1;
    return g;
  };
  model.V.intrinsic.potential = [a1](const ChartPoint& p) {
    return a1 * std::norm(p.coords[0]);
  };
  model.V.intrinsic.canonicalize = [](const ChartPoint& p) { return p; };
  model.V.intrinsic.transition =
      [](const ChartPoint& p, const std::string& chart) -> std::optional<ChartPoint> {
    if (chart == p.chart) return p;
    return std::nullopt;
  };
  model.V.include = [](const ChartPoint& p) {
    return ChartPoint("c0", {p.coords[0], 0.0});
  };
  model.V.contains = [](const ChartPoint& p, double tol) {
    return std::abs(p.coords[1]) <= tol;
  };
  model.V.coordinates_on_V = [](const ChartPoint& p) {
    return ChartPoint("v0", {p.coords[0]});
  };
  model.V.linear_charts["c0"] = {{0}, {1}, CVector::Zero(1)};

  model.retraction = [](const ChartPoint& p) {
    return ChartPoint("v0", {p.coords[0]});
  };
  model.tube_radius = params.tube_radius;
  model.metric_positivity_threshold = params.positivity_threshold;
  model.closed_distance = [a1, a2](const ChartPoint& x, const ChartPoint& y) {
    Complex d1 = y.coords[0] - x.coords[0], d2 = y.coords[1] - x.coords[1];
    return std::sqrt(a1 * std::norm(d1) + a2 * std::norm(d2));
  };
  model.closed_nearest = [a2](const ManifoldModel& m, const ChartPoint& x) {
    NearestPointResult r;
    r.query = x;
    r.foot = ChartPoint("c0", {x.coords[0], 0.0});
    r.foot_on_V = ChartPoint("v0", {x.coords[0]});
    CVector v(2);
    v << 0.0, -x.coords[1];
    r.exp_inverse = v;
    r.distance = std::sqrt(a2) * std::abs(x.coords[1]);
    (void)m;
    return r;
  };
  model.distance_to_V = [a2](const ChartPoint& x) {
    return std::sqrt(a2) * std::abs(x.coords[1]);
  };
  model.metric_on_V = [a1](const ChartPoint&) {
    CMatrix g(1, 1);
    g << a1;
    return g;
  };
  const double box = params.box;
  model.tube_shell_samples = [a2, box](double d, int n_v, int n_phase) {
    std::vector<ChartPoint> out;
    double r = d / std::sqrt(a2);
    for (int i = 0; i < n_v; ++i) {
      double t = n_v == 1 ? 0.0 : -0.8 * box + 1.6 * box * i / (n_v - 1);
      for (int j = 0; j < n_phase; ++j) {
        double th = 2 * kPi * j / n_phase;
        out.emplace_back("c0", std::initializer_list<Complex>{
                                   Complex(t, 0.3 * t), r * std::exp(Complex(0, th))});
      }
    }
    return out;
  };
  run_load_time_checks(model);
  return model;
}

// --------------------------------------------------------------- product ---

ManifoldModel build_product_model(const ProductModelParams& params) {
  FactorOps f1 = make_factor(params.first);
  FactorOps f2 = make_factor(params.second);
  if (f2.kind != "torus")
    fail(ErrorKind::Parameter, "second product factor must be a torus (marked point 0)");

  auto model = ManifoldModel{};
  model.kind = "product";
  const int nc = f1.chart_count();
  for (int i = 0; i < nc; ++i) {
    Chart c;
    c.id = f1.chart_suffix(i);
    c.dim = 2;
    c.lo = RVector(4);
    c.hi = RVector(4);
    c.lo << -f1.half_width_re(i), -f1.half_width_im(i), -f2.half_width_re(0),
        -f2.half_width_im(0);
    c.hi = -c.lo;
    model.ambient.charts.push_back(c);
  }
  auto chart_index = [f1](const std::string& id) {
    for (int i = 0; i < f1.chart_count(); ++i)
      if (f1.chart_suffix(i) == id) return i;
    fail(ErrorKind::Domain, "unknown chart '" + id + "'");
  };

  model.ambient.metric = [f1, f2, chart_index](const ChartPoint& p) {
    int ci = chart_index(p.chart);
    CMatrix g = CMatrix::Zero(2, 2);
    g(0, 0) = f1.metric_coeff(ci, p.coords[0]);
    g(1, 1) = f2.metric_coeff(0, p.coords[1]);
    return g;
  };
  model.ambient.potential = [f1, f2, chart_index](const ChartPoint& p) {
    return f1.potential(chart_index(p.chart), p.coords[0]) +
           f2.potential(0, p.coords[1]);
  };
  model.ambient.canonicalize = [f1, f2, chart_index](const ChartPoint& p) {
    auto [ci, v] = f1.canonicalize(chart_index(p.chart), p.coords[0]);
    Complex z = f2.torus.reduce(p.coords[1]);
    return ChartPoint(f1.chart_suffix(ci), {v, z});
  };
  model.ambient.transition = [f1, chart_index](const ChartPoint& p,
                                               const std::string& chart)
      -> std::optional<ChartPoint> {
    auto v = f1.transition(chart_index(p.chart), chart_index(chart), p.coords[0]);
    if (!v) return std::nullopt;
    return ChartPoint(chart, {*v, p.coords[1]});
  };
  model.ambient.displacement = [f2](const ChartPoint& a, const ChartPoint& b) {
    if (a.chart != b.chart) fail(ErrorKind::Domain, "displacement across charts");
    CVector d(2);
    d << b.coords[0] - a.coords[0], f2.torus.reduce(b.coords[1] - a.coords[1]);
    return d;
  };
  const Complex tau2 = f2.torus.tau;
  model.ambient.identifications = {
      [](const ChartPoint& p) {
        return ChartPoint(p.chart, {p.coords[0], p.coords[1] + 1.0});
      },
      [tau2](const ChartPoint& p) {
        return ChartPoint(p.chart, {p.coords[0], p.coords[1] + tau2});
      }};

  // V = first factor x {0}
  for (int i = 0; i < nc; ++i) {
    Chart c;
    c.id = "v" + f1.chart_suffix(i);
    c.dim = 1;
    c.lo = RVector(2);
    c.hi = RVector(2);
    c.lo << -f1.half_width_re(i), -f1.half_width_im(i);
    c.hi = -c.lo;
    model.V.intrinsic.charts.push_back(c);
  }
  auto v_chart_index = [f1](const std::string& id) {
    for (int i = 0; i < f1.chart_count(); ++i)
      if ("v" + f1.chart_suffix(i) == id) return i;
    fail(ErrorKind::Domain, "unknown V chart '" + id + "'");
  };
  model.V.intrinsic.metric = [f1, v_chart_index](const ChartPoint& p) {
    CMatrix g(1, 1);
    g << f1.metric_coeff(v_chart_index(p.chart), p.coords[0]);
    return g;
  };
  model.V.intrinsic.potential = [f1, v_chart_index](const ChartPoint& p) {
    return f1.potential(v_chart_index(p.chart), p.coords[0]);
  };
  model.V.intrinsic.canonicalize = [f1, v_chart_index](const ChartPoint& p) {
    auto [ci, v] = f1.canonicalize(v_chart_index(p.chart), p.coords[0]);
    return ChartPoint("v" + f1.chart_suffix(ci), {v});
  };
  model.V.intrinsic.transition = [f1, v_chart_index](const ChartPoint& p,
                                                     const std::string& chart)
      -> std::optional<ChartPoint> {
    auto v = f1.transition(v_chart_index(p.chart), v_chart_index(chart), p.coords[0]);
    if (!v) return std::nullopt;
    return ChartPoint(chart, {*v});
  };
  model.V.intrinsic.displacement = [f1](const ChartPoint& a, const ChartPoint& b) {
    if (a.chart != b.chart) fail(ErrorKind::Domain, "displacement across charts");
    CVector d(1);
    d << (f1.kind == "torus" ? f1.torus.reduce(b.coords[0] - a.coords[0])
                             : b.coords[0] - a.coords[0]);
    return d;
  };
  model.V.include = [](const ChartPoint& p) {
    return ChartPoint(p.chart.substr(1), {p.coords[0], 0.0});
  };
  model.V.contains = [f2](const ChartPoint& p, double tol) {
    return std::abs(f2.torus.reduce(p.coords[1])) <= tol;
  };
  model.V.coordinates_on_V = [](const ChartPoint& p) {
    return ChartPoint("v" + p.chart, {p.coords[0]});
  };
  for (int i = 0; i < nc; ++i)
    model.V.linear_charts[f1.chart_suffix(i)] = {{0}, {1}, CVector::Zero(1)};
  if (f1.kind == "torus") {
    TorusOps t1 = f1.torus;
    model.V.cut_locus_proximity_sq = [t1](const ChartPoint& p) {
      double d = t1.cut_proximity(t1.reduce(p.coords[0]));
      return d * d;
    };
  } else {
    model.V.chart_seam_proximity_sq = [](const ChartPoint& p) {
      double d = std::abs(std::abs(p.coords[0]) - 1.0);
      return d * d;
    };
  }

  model.retraction = [f1, chart_index](const ChartPoint& p) {
    auto [ci, v] = f1.canonicalize(chart_index(p.chart), p.coords[0]);
    return ChartPoint("v" + f1.chart_suffix(ci), {v});
  };
  model.tube_radius = params.tube_radius;
  model.metric_positivity_threshold = params.positivity_threshold;
  if (model.tube_radius >= 0.49 * std::min(1.0, std::abs(tau2)))
    fail(ErrorKind::Parameter, "tube radius must stay below half the torus systole");

  model.closed_distance = [f1, f2, chart_index](const ChartPoint& x,
                                                const ChartPoint& y) {
    double d1 = f1.dist(chart_index(x.chart), x.coords[0], chart_index(y.chart),
                        y.coords[0]);
    double d2 = f2.torus.dist(x.coords[1], y.coords[1]);
    return std::sqrt(d1 * d1 + d2 * d2);
  };
  model.closed_nearest = [f2](const ManifoldModel& m, const ChartPoint& x) {
    (void)m;
    NearestPointResult r;
    r.query = x;
    Complex zr = f2.torus.reduce(x.coords[1]);
    r.foot = ChartPoint(x.chart, {x.coords[0], 0.0});
    r.foot_on_V = ChartPoint("v" + x.chart, {x.coords[0]});
    CVector v(2);
    v << 0.0, -zr;
    r.exp_inverse = v;
    r.distance = std::abs(zr);
    return r;
  };
  model.distance_to_V = [f2](const ChartPoint& x) {
    return std::abs(f2.torus.reduce(x.coords[1]));
  };
  model.metric_on_V = [f1, v_chart_index](const ChartPoint& p) {
    CMatrix g(1, 1);
    g << f1.metric_coeff(v_chart_index(p.chart), p.coords[0]);
    return g;
  };
  model.tube_shell_samples = [f1](double d, int n_v, int n_phase) {
    std::vector<ChartPoint> out;
    for (int ci = 0; ci < f1.chart_count(); ++ci) {
      double hw = 0.8 * f1.half_width_re(ci);
      for (int i = 0; i < n_v; ++i) {
        double t = n_v == 1 ? 0.0 : -hw + 2 * hw * i / (n_v - 1);
        for (int j = 0; j < n_phase; ++j) {
          double th = 2 * kPi * (j + 0.13) / n_phase;
          out.emplace_back(f1.chart_suffix(ci),
                           std::initializer_list<Complex>{
                               Complex(t, 0.23 * t), d * std::exp(Complex(0, th))});
        }
      }
    }
    return out;
  };
  run_load_time_checks(model);
  return model;
}

// ----------------------------------------------------------------- Serre ---

namespace {

struct SerreOps {
  Complex tau;
  double kappa = 0.5;
  TorusOps torus;

  // Hermitian metric in the s chart: potential |z|^2 + kappa log Q,
  // Q = |s|^2 + |1 - s conj(z)|^2.
  CMatrix metric_s(Complex s, Complex z) const {
    Complex a = 1.0 - s * std::conj(z);
    double Q = std::norm(s) + std::norm(a);
    Complex Qs = std::conj(s) - std::conj(z) * std::conj(a);
    Complex Qz = -std::conj(s) * a;
    double Qssb = 1.0 + std::norm(z);
    Complex Qszb = -std::conj(a);
    double Qzzb = std::norm(s);
    Complex pss = Qssb / Q - Qs * std::conj(Qs) / (Q * Q);
    Complex psz = Qszb / Q - Qs * std::conj(Qz) / (Q * Q);
    Complex pzz = Qzzb / Q - Qz * std::conj(Qz) / (Q * Q);
    CMatrix g(2, 2);
    g(0, 0) = kappa * pss;
    g(0, 1) = kappa * psz;
    g(1, 0) = std::conj(g(0, 1));
    g(1, 1) = 1.0 + kappa * pzz;
    return g;
  }
  // w chart: potential |z|^2 + kappa log(1+|u|^2), u = w - conj(z).
  CMatrix metric_w(Complex w, Complex z) const {
    Complex u = w - std::conj(z);
    double N = 1.0 + std::norm(u);
    CMatrix g(2, 2);
    g(0, 0) = kappa / (N * N);
    g(0, 1) = kappa * std::conj(u) * std::conj(u) / (N * N);
    g(1, 0) = std::conj(g(0, 1));
    g(1, 1) = 1.0 + kappa / (N * N);
    return g;
  }
  Complex sigma(const ChartPoint& p) const {
    if (p.chart == "s") {
      Complex den = 1.0 - p.coords[0] * std::conj(p.coords[1]);
      if (std::abs(den) < 1e-14) return Complex(1e14, 0);
      return p.coords[0] / den;
    }
    Complex den = p.coords[0] - std::conj(p.coords[1]);
    if (std::abs(den) < 1e-14) return Complex(1e14, 0);
    return 1.0 / den;
  }
  // Radial coefficient of the quotient metric at |sigma| = t (theta = 0 ray).
  double alpha(double t) const {
    CMatrix g = metric_s(Complex(t, 0), Complex(0, 0));
    RMatrix G = real_metric(g);
    RMatrix Ginv = G.inverse();
    RMatrix J(2, 4);
    double t2 = t * t;
    J << 1, 0, t2, 0, 0, 1, 0, -t2;
    RMatrix C = J * Ginv * J.transpose();
    double det = C(0, 0) * C(1, 1) - C(0, 1) * C(1, 0);
    return C(1, 1) / det;
  }
};

// Chebyshev interpolant on [0, umax].
struct Cheb {
  double umax = 1.0;
  std::vector<double> coeff;

  double eval(double u) const {
    double x = 2.0 * std::min(std::max(u, 0.0), umax) / umax - 1.0;
    double b1 = 0.0, b2 = 0.0;
    for (size_t k = coeff.size(); k-- > 1;) {
      double b0 = 2.0 * x * b1 - b2 + coeff[k];
      b2 = b1;
      b1 = b0;
    }
    return x * b1 - b2 + 0.5 * coeff[0];
  }
};

Cheb fit_cheb(double umax, int n, const std::function<double(double)>& f) {
  std::vector<double> vals(n);
  for (int j = 0; j < n; ++j) {
    double xj = std::cos(kPi * (j + 0.5) / n);
    vals[j] = f(0.5 * umax * (xj + 1.0));
  }
  Cheb c;
  c.umax = umax;
  c.coeff.resize(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += vals[j] * std::cos(kPi * k * (j + 0.5) / n);
    c.coeff[k] = 2.0 * s / n;
  }
  return c;
}

// 64-point Gauss-Legendre nodes/weights on [0,1] (generated from the
// symmetric 32 pairs; accurate to ~1e-15 for smooth integrands).
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  // Newton iteration on Legendre polynomials, standard construction.
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double t1 = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      t1 = t;
      t = t - p1 / dp;
      if (std::abs(t - t1) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 - t);
    x[n - 1 - i] = 0.5 * (1.0 + t);
    w[i] = w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

} // namespace

ManifoldModel build_serre_model(const SerreParameters& params) {
  if (!(params.tau.imag() > 0))
    fail(ErrorKind::Parameter, "Serre model requires Im(tau) > 0");
  if (!(params.kappa > 0))
    fail(ErrorKind::Parameter, "Serre model requires kappa > 0");

  SerreOps ops;
  ops.tau = params.tau;
  ops.kappa = params.kappa;
  ops.torus.tau = params.tau;

  auto model = ManifoldModel{};
  model.kind = "serre";

  const double zb_re = ops.torus.half_re() + params.z_margin;
  const double zb_im = ops.torus.half_im() + params.z_margin;
  for (const char* id : {"w", "s"}) {
    Chart c;
    c.id = id;
    c.dim = 2;
    c.lo = RVector(4);
    c.hi = RVector(4);
    c.lo << -params.box, -params.box, -zb_re, -zb_im;
    c.hi = -c.lo;
    model.ambient.charts.push_back(c);
  }

  model.ambient.metric = [ops](const ChartPoint& p) {
    if (p.chart == "s") return ops.metric_s(p.coords[0], p.coords[1]);
    if (p.chart == "w") return ops.metric_w(p.coords[0], p.coords[1]);
    fail(ErrorKind::Domain, "unknown chart '" + p.chart + "'");
  };
  const double kp = params.kappa;
  model.ambient.potential = [kp](const ChartPoint& p) {
    Complex z = p.coords[1];
    if (p.chart == "s") {
      Complex s = p.coords[0];
      Complex a = 1.0 - s * std::conj(z);
      return std::norm(z) + kp * std::log(std::norm(s) + std::norm(a));
    }
    Complex u = p.coords[0] - std::conj(z);
    return std::norm(z) + kp * std::log1p(std::norm(u));
  };
  // Deck reduction (w + conj(lambda), z + lambda), then chart choice |s|<=1.
  model.ambient.canonicalize = [ops](const ChartPoint& p) {
    Complex lambda;
    Complex z = ops.torus.reduce(p.coords[1], &lambda);
    if (p.chart == "w") {
      Complex w = p.coords[0] - std::conj(lambda);
      if (std::norm(w) >= 1.0) return ChartPoint("s", {1.0 / w, z});
      return ChartPoint("w", {w, z});
    }
    Complex s = p.coords[0] / (1.0 - std::conj(lambda) * p.coords[0]);
    if (std::norm(s) <= 1.0) return ChartPoint("s", {s, z});
    return ChartPoint("w", {1.0 / s, z});
  };
  model.ambient.transition = [ops](const ChartPoint& p, const std::string& chart)
      -> std::optional<ChartPoint> {
    Complex z = p.coords[1];
    if (p.chart == chart) return p;
    if (std::abs(p.coords[0]) < 1e-13) return std::nullopt;
    return ChartPoint(chart, {1.0 / p.coords[0], z});
  };
  model.ambient.displacement = [ops](const ChartPoint& a, const ChartPoint& b) {
    if (a.chart != b.chart) fail(ErrorKind::Domain, "displacement across charts");
    Complex lambda;
    ops.torus.reduce(b.coords[1] - a.coords[1], &lambda);
    CVector d(2);
    if (a.chart == "w") {
      d << (b.coords[0] - std::conj(lambda)) - a.coords[0],
          (b.coords[1] - lambda) - a.coords[1];
    } else {
      Complex sb = b.coords[0] / (1.0 - std::conj(lambda) * b.coords[0]);
      d << sb - a.coords[0], (b.coords[1] - lambda) - a.coords[1];
    }
    return d;
  };
  const Complex tau = params.tau;
  model.ambient.identifications = {
      [](const ChartPoint& p) {
        if (p.chart != "w") fail(ErrorKind::Domain, "identification given in w chart");
        return ChartPoint("w", {p.coords[0] + 1.0, p.coords[1] + 1.0});
      },
      [tau](const ChartPoint& p) {
        if (p.chart != "w") fail(ErrorKind::Domain, "identification given in w chart");
        return ChartPoint("w", {p.coords[0] + std::conj(tau), p.coords[1] + tau});
      }};

  // V = {s = 0}, an elliptic curve with coordinate z.
  {
    Chart vt;
    vt.id = "vt";
    vt.dim = 1;
    vt.lo = RVector(2);
    vt.hi = RVector(2);
    vt.lo << -zb_re, -zb_im;
    vt.hi = -vt.lo;
    model.V.intrinsic.charts = {vt};
  }
  TorusOps vtorus = ops.torus;
  model.V.intrinsic.metric = [](const ChartPoint&) {
    CMatrix g(1, 1);
    g << 1.0;
    return g;
  };
  model.V.intrinsic.potential = [](const ChartPoint& p) { return std::norm(p.coords[0]); };
  model.V.intrinsic.canonicalize = [vtorus](const ChartPoint& p) {
    return ChartPoint("vt", {vtorus.reduce(p.coords[0])});
  };
  model.V.intrinsic.transition =
      [](const ChartPoint& p, const std::string& chart) -> std::optional<ChartPoint> {
    if (chart == p.chart) return p;
    return std::nullopt;
  };
  model.V.intrinsic.displacement = [vtorus](const ChartPoint& a, const ChartPoint& b) {
    CVector d(1);
    d << vtorus.reduce(b.coords[0] - a.coords[0]);
    return d;
  };
  model.V.include = [](const ChartPoint& p) {
    return ChartPoint("s", {0.0, p.coords[0]});
  };
  model.V.contains = [](const ChartPoint& p, double tol) {
    if (p.chart == "s") return std::abs(p.coords[0]) <= tol;
    return std::abs(p.coords[0]) >= 1.0 / std::max(tol, 1e-300);
  };
  model.V.coordinates_on_V = [vtorus](const ChartPoint& p) {
    return ChartPoint("vt", {vtorus.reduce(p.coords[1])});
  };
  model.V.linear_charts["s"] = {{1}, {0}, CVector::Zero(1)};
  model.V.cut_locus_proximity_sq = [vtorus](const ChartPoint& p) {
    double d = vtorus.cut_proximity(vtorus.reduce(p.coords[0]));
    return d * d;
  };

  model.retraction = [vtorus](const ChartPoint& p) {
    return ChartPoint("vt", {vtorus.reduce(p.coords[1])});
  };
  model.metric_positivity_threshold = params.positivity_threshold;

  // Radial profile D(rho) = rho * q(rho^2), q fitted on [0, umax].
  const double sigma_max = params.sigma_tube * 1.2;
  const double umax = sigma_max * sigma_max;
  std::vector<double> gx, gw;
  gauss_legendre_01(64, gx, gw);
  auto q_of_u = [ops, &gx, &gw](double u) {
    double rho = std::sqrt(std::max(u, 0.0));
    double s = 0.0;
    for (size_t i = 0; i < gx.size(); ++i) s += gw[i] * std::sqrt(ops.alpha(rho * gx[i]));
    return s;
  };
  auto cheb = std::make_shared<Cheb>(fit_cheb(umax, 48, q_of_u));
  auto D_of_rho = [cheb](double rho) {
    double u = rho * rho;
    return rho * cheb->eval(u);
  };
  model.tube_radius = 0.999 * D_of_rho(params.sigma_tube);

  auto sigma_of = [ops](const ChartPoint& p) { return ops.sigma(p); };

  auto lift_matrix = [ops](const RVector& x) {
    // horizontal lift operator at an s-chart real point: xi = Ginv J^T (J Ginv J^T)^{-1}
    Complex s(x[0], x[1]), z(x[2], x[3]);
    Complex den = 1.0 - s * std::conj(z);
    Complex A = 1.0 / (den * den);
    Complex B = s * s / (den * den);
    RMatrix J(2, 4);
    J << A.real(), -A.imag(), B.real(), B.imag(), A.imag(), A.real(), B.imag(),
        -B.real();
    RMatrix G = real_metric(ops.metric_s(s, z));
    RMatrix Ginv = G.inverse();
    RMatrix M = J * Ginv * J.transpose();
    return std::pair<RMatrix, RMatrix>(Ginv * J.transpose() * M.inverse(), G);
  };

  model.closed_nearest = [ops, sigma_of, D_of_rho, lift_matrix, sigma_max](
                             const ManifoldModel& m, const ChartPoint& x_in) {
    ChartPoint x = m.ambient.canonicalize(x_in);
    auto xs = m.ambient.transition(x, "s");
    if (!xs)
      fail(ErrorKind::Precondition, "nearest_point: point not representable near V");
    Complex sig0 = sigma_of(*xs);
    double rho0 = std::abs(sig0);
    NearestPointResult r;
    r.query = x_in;
    if (rho0 < 1e-14) {
      r.foot = *xs;
      r.foot_on_V = m.V.coordinates_on_V(*xs);
      r.exp_inverse = CVector::Zero(2);
      r.distance = 0.0;
      return r;
    }
    if (rho0 > sigma_max)
      fail(ErrorKind::Precondition, "nearest_point: outside the tube neighborhood");

    // Horizontal lift of the radial base path sigma(t) = (1-t) sigma0.
    RVector y = to_real(xs->coords);
    const int steps = 64;
    const double dt = 1.0 / steps;
    RVector sdot(2);
    sdot << -sig0.real(), -sig0.imag();
    auto rhs = [&](const RVector& state) {
      auto [L, G] = lift_matrix(state);
      (void)G;
      return RVector(L * sdot);
    };
    for (int i = 0; i < steps; ++i) {
      RVector k1 = rhs(y);
      RVector k2 = rhs(y + 0.5 * dt * k1);
      RVector k3 = rhs(y + 0.5 * dt * k2);
      RVector k4 = rhs(y + dt * k3);
      y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    ChartPoint foot_s("s", to_complex(y));
    foot_s.coords[0] = 0.0; // endpoint lies on V up to integrator error
    r.foot = foot_s;
    r.foot_on_V = m.V.coordinates_on_V(foot_s);
    r.distance = D_of_rho(rho0);

    // exp-inverse: distance times the unit inward horizontal direction,
    // expressed in the coordinates of the original query point.
    auto [L0, G0] = lift_matrix(to_real(xs->coords));
    (void)G0;
    RVector eta(2);
    eta << -sig0.real() / rho0, -sig0.imag() / rho0;
    RVector unit = L0 * eta / std::sqrt(ops.alpha(rho0));
    RVector v_real = r.distance * unit;
    CVector v_s = to_complex(v_real);
    Complex lambda;
    ops.torus.reduce(x_in.coords[1], &lambda);
    Complex s_canon = xs->coords[0];
    if (x_in.chart == "s") {
      // s_in = s_canon / (1 + conj(lambda) s_canon)
      Complex den = 1.0 + std::conj(lambda) * s_canon;
      v_s[0] = v_s[0] / (den * den);
    } else {
      // w_in = conj(lambda) + 1/s_canon
      v_s[0] = -v_s[0] / (s_canon * s_canon);
    }
    r.exp_inverse = v_s;
    return r;
  };

  model.metric_on_V = [](const ChartPoint&) {
    CMatrix g(1, 1);
    g << 1.0;
    return g;
  };
  model.distance_to_V = [sigma_of, D_of_rho, sigma_max](const ChartPoint& x_in) {
    ChartPoint p = x_in;
    double rho = std::abs(sigma_of(p));
    return D_of_rho(std::min(rho, sigma_max));
  };

  // invert D to place shell samples at exact distance d
  auto rho_of_d = [D_of_rho, sigma_max](double d) {
    double lo = 0.0, hi = sigma_max;
    for (int i = 0; i < 80; ++i) {
      double mid = 0.5 * (lo + hi);
      (D_of_rho(mid) < d ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  TorusOps storus = ops.torus;
  model.tube_shell_samples = [rho_of_d, storus](double d, int n_v, int n_phase) {
    std::vector<ChartPoint> out;
    double rho = rho_of_d(d);
    double hre = 0.95 * storus.half_re(), him = 0.95 * storus.half_im();
    for (int i = 0; i < n_v; ++i) {
      double fr = n_v == 1 ? 0.0 : -1.0 + 2.0 * i / (n_v - 1);
      Complex z(fr * hre, 0.37 * fr * him);
      for (int j = 0; j < n_phase; ++j) {
        double th = 2 * kPi * (j + 0.29) / n_phase;
        Complex sig = rho * std::exp(Complex(0, th));
        Complex s = sig / (1.0 + sig * std::conj(z));
        out.emplace_back("s", std::initializer_list<Complex>{s, z});
      }
    }
    return out;
  };

  run_load_time_checks(model);

  // Certify the radial profile against direct quadrature at sample radii.
  for (double rho : {0.1 * params.sigma_tube, 0.5 * params.sigma_tube, params.sigma_tube}) {
    double direct = 0.0;
    for (size_t i = 0; i < gx.size(); ++i)
      direct += gw[i] * std::sqrt(ops.alpha(rho * gx[i]));
    direct *= rho;
    if (std::abs(direct - D_of_rho(rho)) > 1e-11)
      fail(ErrorKind::ModelDefinition, "radial profile interpolation drift");
  }
  // Ray-independence of the quotient metric (rotational symmetry).
  for (double t : {0.2, 0.5}) {
    for (double th : {0.9, 2.3}) {
      Complex sig = t * std::exp(Complex(0, th));
      ChartPoint p("s", {sig, 0.0});
      // radial coefficient along this ray via the generic construction
      Complex s = sig;
      Complex den = 1.0 - s * std::conj(Complex(0, 0));
      (void)den;
      RMatrix G = real_metric(ops.metric_s(s, 0.0));
      RMatrix Ginv = G.inverse();
      Complex A = 1.0, B = s * s;
      RMatrix J(2, 4);
      J << A.real(), -A.imag(), B.real(), B.imag(), A.imag(), A.real(), B.imag(),
          -B.real();
      RMatrix C = J * Ginv * J.transpose();
      RMatrix Q = C.inverse();
      RVector e(2);
      e << std::cos(th), std::sin(th);
      double a_ray = e.dot(Q * e);
      if (std::abs(a_ray - ops.alpha(t)) > 1e-9)
        fail(ErrorKind::ModelDefinition, "quotient metric is not rotationally symmetric");
      (void)p;
    }
  }
  return model;
}

namespace {

// h as a plain field for validation purposes (uses model closed paths).
ScalarField model_h_field(const ManifoldModel* m) { return squared_distance(*m); }

} // namespace

// ------------------------------------------------------------ validation ---

std::vector<ModelCheck> validate_model(const ManifoldModel& model) {
  std::vector<ModelCheck> checks;
  auto add = [&](std::string name, bool pass, double worst, std::string detail) {
    checks.push_back({std::move(name), pass, worst, std::move(detail)});
  };

  // sample grid per chart (coarse)
  std::vector<ChartPoint> samples;
  for (const auto& chart : model.ambient.charts) {
    GridSpec spec;
    spec.chart = chart.id;
    spec.counts.assign(chart.dim, {4, 4});
    spec.margin = 0.05 * chart.min_resolution();
    auto pts = sample_grid(chart, spec);
    samples.insert(samples.end(), pts.begin(), pts.end());
  }

  // 1. metric positive definite with margin
  {
    double worst = std::numeric_limits<double>::infinity();
    std::string where;
    for (const auto& p : samples) {
      CMatrix g = model.ambient.metric(p);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (g + g.adjoint()),
                                                Eigen::EigenvaluesOnly);
      double ev = es.eigenvalues().minCoeff();
      if (ev < worst) {
        worst = ev;
        where = p.chart;
      }
    }
    add("metric-positivity", worst >= model.metric_positivity_threshold, worst,
        "min metric eigenvalue " + std::to_string(worst) + " on chart " + where +
            " (threshold " + std::to_string(model.metric_positivity_threshold) + ")");
  }

  // 2. transitions are biholomorphic on overlaps: round-trip error
  {
    double worst = 0.0;
    long used = 0;
    for (const auto& p : samples) {
      for (const auto& chart : model.ambient.charts) {
        if (chart.id == p.chart) continue;
        auto q = model.ambient.transition(p, chart.id);
        if (!q || !chart.contains(q->coords)) continue;
        auto back = model.ambient.transition(*q, p.chart);
        if (!back) continue;
        ++used;
        worst = std::max(worst, (back->coords - p.coords).cwiseAbs().maxCoeff());
      }
    }
    add("transition-round-trip", worst <= 1e-10, worst,
        std::to_string(used) + " overlap samples, worst round-trip " +
            std::to_string(worst));
  }

  // 3. metric chart-consistency under transitions: g_a = J^T g_b(T) conj(J)
  {
    double worst = 0.0;
    for (const auto& p : samples) {
      for (const auto& chart : model.ambient.charts) {
        if (chart.id == p.chart) continue;
        auto q = model.ambient.transition(p, chart.id);
        if (!q || !chart.contains(q->coords, -0.05)) continue;
        const int n = p.dim();
        CMatrix J(n, n);
        const double h = 1e-6;
        bool ok = true;
        for (int j = 0; j < n && ok; ++j) {
          CVector cp = p.coords, cm = p.coords;
          cp[j] += h;
          cm[j] -= h;
          auto qp = model.ambient.transition(ChartPoint(p.chart, cp), chart.id);
          auto qm = model.ambient.transition(ChartPoint(p.chart, cm), chart.id);
          if (!qp || !qm) {
            ok = false;
            break;
          }
          J.col(j) = (qp->coords - qm->coords) / (2.0 * h);
        }
        if (!ok) continue;
        CMatrix gb = model.ambient.metric(*q);
        CMatrix ga = model.ambient.metric(p);
        CMatrix pulled = J.transpose() * gb * J.conjugate();
        worst = std::max(worst, (ga - pulled).cwiseAbs().maxCoeff());
      }
    }
    add("metric-transition-consistency", worst <= 1e-6, worst,
        "worst |g - T*g| = " + std::to_string(worst));
  }

  // 4. retraction restricted to V is the identity
  {
    double worst = 0.0;
    for (const auto& vchart : model.V.intrinsic.charts) {
      GridSpec spec;
      spec.chart = vchart.id;
      spec.counts.assign(vchart.dim, {5, 5});
      spec.margin = 0.05 * vchart.min_resolution();
      for (const auto& vp : sample_grid(vchart, spec)) {
        ChartPoint amb = model.V.include(vp);
        ChartPoint back = model.retraction(amb);
        ChartPoint canon = model.V.intrinsic.canonicalize
                               ? model.V.intrinsic.canonicalize(vp)
                               : vp;
        auto same = model.V.intrinsic.transition(back, canon.chart);
        if (!same) continue;
        worst = std::max(
            worst,
            to_real(model.V.intrinsic.delta(canon, *same)).cwiseAbs().maxCoeff());
      }
    }
    add("retraction-identity-on-V", worst <= 1e-10, worst,
        "worst |pi(v) - v| = " + std::to_string(worst));
  }

  // 5. retraction idempotence and holomorphy on tube samples
  {
    double worst_idem = 0.0, worst_dbar = 0.0;
    auto shell = model.tube_shell_samples
                     ? model.tube_shell_samples(0.5 * model.tube_radius, 4, 4)
                     : std::vector<ChartPoint>{};
    for (const auto& p : shell) {
      ChartPoint v1 = model.retraction(p);
      ChartPoint v2 = model.retraction(model.V.include(v1));
      auto moved = model.V.intrinsic.transition(v2, v1.chart);
      if (moved)
        worst_idem = std::max(
            worst_idem, to_real(model.V.intrinsic.delta(v1, *moved)).cwiseAbs().maxCoeff());

      // dbar residual by finite differences of the intrinsic coordinates
      const double h = 1e-5;
      const int n = p.dim();
      for (int j = 0; j < n; ++j) {
        CVector cpr = p.coords, cmr = p.coords, cpi = p.coords, cmi = p.coords;
        cpr[j] += h;
        cmr[j] -= h;
        cpi[j] += Complex(0, h);
        cmi[j] -= Complex(0, h);
        ChartPoint base = model.retraction(p);
        auto val = [&](const CVector& c) -> CVector {
          ChartPoint out = model.retraction(ChartPoint(p.chart, c));
          auto here = model.V.intrinsic.transition(out, base.chart);
          if (!here) return base.coords;
          return base.coords + model.V.intrinsic.delta(base, *here);
        };
        CVector dre = (val(cpr) - val(cmr)) / (2.0 * h);
        CVector dim = (val(cpi) - val(cmi)) / (2.0 * h);
        // d/dzbar = (d/dx + i d/dy)/2
        CVector dbar = 0.5 * (dre + Complex(0, 1) * dim);
        worst_dbar = std::max(worst_dbar, dbar.cwiseAbs().maxCoeff());
      }
    }
    add("retraction-idempotence", worst_idem <= 1e-9, worst_idem,
        "worst |pi(pi(x)) - pi(x)| = " + std::to_string(worst_idem));
    add("retraction-holomorphy", worst_dbar <= 1e-6, worst_dbar,
        "worst dbar residual " + std::to_string(worst_dbar));
  }

  // 6. deck invariance of the metric and of h at identified points
  if (!model.ambient.identifications.empty()) {
    double worst = 0.0;
    ScalarField h = model_h_field(&model);
    auto shell = model.tube_shell_samples(0.6 * model.tube_radius, 3, 3);
    for (const auto& p : shell) {
      auto pw = model.ambient.transition(p, model.ambient.charts.front().id);
      if (!pw) continue;
      for (const auto& ident : model.ambient.identifications) {
        ChartPoint q = ident(*pw);
        double hv1 = h.evaluate(*pw);
        double hv2 = h.evaluate(q);
        worst = std::max(worst, std::abs(hv1 - hv2));
        CMatrix g1 = model.ambient.metric(model.ambient.canonicalize(*pw));
        CMatrix g2 = model.ambient.metric(model.ambient.canonicalize(q));
        // canonical representatives coincide, so the metric matrices must too
        worst = std::max(worst, (g1 - g2).cwiseAbs().maxCoeff());
      }
    }
    add("deck-invariance", worst <= 1e-9, worst,
        "worst field/metric mismatch at identified points " + std::to_string(worst));
  }

  // 7. h consistency: h(x) vs delta(x, foot)^2 by independent shooting
  {
    double worst = 0.0;
    auto shell = model.tube_shell_samples
                     ? model.tube_shell_samples(0.45 * model.tube_radius, 2, 2)
                     : std::vector<ChartPoint>{};
    int count = 0;
    for (const auto& p : shell) {
      if (++count > 3) break;
      NearestPointResult r = nearest_point(model, p);
      double d = geodesic_distance(model, p, r.foot);
      worst = std::max(worst, std::abs(d * d - r.distance * r.distance));
    }
    add("h-shooting-consistency", worst <= 1e-8, worst,
        "worst |delta(x,foot)^2 - h| = " + std::to_string(worst));
  }

  return checks;
}

// ---------------------------------------------------- reference function ---

ReferenceFunction reference_function(const ManifoldModel& model,
                                     const ReferenceOptions& opts) {
  if (!(opts.c > 0)) fail(ErrorKind::Parameter, "reference function needs c > 0");
  if (!(opts.cap_radius > 0 && opts.cap_radius < model.tube_radius))
    fail(ErrorKind::Parameter, "cap radius must lie inside the tube");

  const double c = opts.c;
  const double cap = opts.cap_radius;
  const double K = c * std::log(cap * cap) + 1.0;

  ScalarField hcap = capped_squared_distance(model, cap);
  const ManifoldModel* m = &model;
  ScalarField F;
  F.name = "F";
  F.evaluate = [hcap, c, K](const ChartPoint& p) {
    double h = hcap.evaluate(p);
    if (h <= 0.0) return kNegInf;
    return c * std::log(h) - K;
  };
  F.singular_proximity_sq = [m, cap](const ChartPoint& p) {
    double dv = m->distance_to_V ? m->distance_to_V(p) : nearest_point(*m, p).distance;
    double dseam = std::abs(dv - cap);
    return std::min(dv * dv, dseam * dseam);
  };
  F.smoothness_margin = 0.0;

  // certification sweep
  double eps = std::numeric_limits<double>::infinity();
  long used = 0;
  for (const auto& chart : model.ambient.charts) {
    GridSpec spec;
    spec.chart = chart.id;
    spec.counts.assign(chart.dim, {opts.grid_per_axis, opts.grid_per_axis});
    spec.margin = 3.0 * opts.hessian_step;
    auto dist_v = [m](const ChartPoint& p) {
      return m->distance_to_V ? m->distance_to_V(p) : nearest_point(*m, p).distance;
    };
    std::vector<Exclusion> excl;
    excl.push_back({[dist_v](const ChartPoint& p) {
                      double d = dist_v(p);
                      return d * d;
                    },
                    opts.collar_v, "V-collar"});
    excl.push_back({[dist_v, cap](const ChartPoint& p) {
                      double d = std::abs(dist_v(p) - cap);
                      return d * d;
                    },
                    opts.collar_seam, "seam-collar"});
    for (const auto& p : sample_grid(chart, spec, excl)) {
      HermitianForm G = metric_at(model, p);
      HermitianForm H = complex_hessian(F, p, opts.hessian_step);
      double ev = min_generalized_eigenvalue(H, G);
      eps = std::min(eps, ev);
      ++used;
    }
  }
  if (used == 0) fail(ErrorKind::Construction, "reference certification grid is empty");
  if (eps < opts.eps_target)
    fail(ErrorKind::Construction,
         "reference function certification failed: best margin " +
             std::to_string(eps) + " < target " + std::to_string(opts.eps_target) +
             " at c = " + std::to_string(c));

  ReferenceFunction out;
  out.F = std::move(F);
  out.c = c;
  out.K = K;
  out.epsilon = eps;
  out.cap_radius = cap;
  out.certified_samples = used;
  return out;
}

ReferenceFunction find_reference_c(const ManifoldModel& model,
                                   const std::vector<double>& candidates,
                                   ReferenceOptions base) {
  double best_eps = -std::numeric_limits<double>::infinity();
  double best_c = 0.0;
  for (double c : candidates) {
    base.c = c;
    try {
      return reference_function(model, base);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Construction) throw;
      // remember the best margin for the failure report
      std::string msg = e.what();
      auto pos = msg.find("best margin ");
      if (pos != std::string::npos) {
        double eps = std::atof(msg.c_str() + pos + 12);
        if (eps > best_eps) {
          best_eps = eps;
          best_c = c;
        }
      }
    }
  }
  fail(ErrorKind::Construction,
       "no c in the configured range certified the reference function; best (c, eps) = (" +
           std::to_string(best_c) + ", " + std::to_string(best_eps) + ")");
}

} // namespace qpx
