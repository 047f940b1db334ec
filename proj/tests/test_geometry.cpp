#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qpx/geometry.hpp"
#include "qpx/models.hpp"

using namespace qpx;

namespace {

ScalarField field_of(double (*fn)(const CVector&), const char* name) {
  ScalarField f;
  f.evaluate = [fn](const ChartPoint& p) { return fn(p.coords); };
  f.name = name;
  return f;
}

} // namespace

TEST_CASE("metric_at: flat, Fubini-Study at 0, torus") {
  ManifoldModel flat = build_flat_model();
  ChartPoint p("c0", {Complex(0.3, 0.1), Complex(-0.2, 0.4)});
  HermitianForm g = metric_at(flat, p);
  CHECK((g.entries - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  ManifoldModel prod = build_product_model();
  // P^1 factor with potential log(1+|w|^2): g_ww(0) = 1 (symbolic oracle:
  // d^2/dw dwbar log(1+q) = 1/(1+q)^2 at q=0).
  ChartPoint origin("a", {Complex(0, 0), Complex(0.1, 0.1)});
  HermitianForm gp = metric_at(prod, origin);
  CHECK(std::abs(gp.entries(0, 0) - Complex(1, 0)) < 1e-12);
  CHECK(std::abs(gp.entries(1, 1) - Complex(1, 0)) < 1e-12); // flat torus factor

  // general point: 1/(1+|w|^2)^2
  Complex w(0.7, -0.4);
  ChartPoint q("a", {w, Complex(0, 0)});
  double expect = 1.0 / std::pow(1.0 + std::norm(w), 2);
  CHECK(std::abs(metric_at(prod, q).entries(0, 0) - Complex(expect, 0)) < 1e-12);
}

TEST_CASE("complex_hessian: quadratic, pluriharmonic, FS potential") {
  ScalarField f1 = field_of([](const CVector& z) { return std::norm(z[0]); }, "|z1|^2");
  ChartPoint p0("c", CVector::Zero(2));
  HermitianForm H = complex_hessian(f1, p0, 1e-3);
  CHECK(std::abs(H.entries(0, 0) - Complex(1, 0)) < 1e-6);
  CHECK(std::abs(H.entries(1, 1)) < 1e-6);
  CHECK(std::abs(H.entries(0, 1)) < 1e-6);

  ScalarField f2 = field_of(
      [](const CVector& z) { return (z[0] * z[0]).real(); }, "Re z1^2");
  HermitianForm H2 = complex_hessian(f2, p0, 1e-3);
  CHECK(H2.entries.cwiseAbs().maxCoeff() < 1e-6);

  ScalarField f3 = field_of(
      [](const CVector& z) { return std::log1p(std::norm(z[0])); }, "log(1+|w|^2)");
  ChartPoint p1("c", CVector::Zero(1));
  HermitianForm H3 = complex_hessian(f3, p1, 1e-3);
  CHECK(std::abs(H3.entries(0, 0) - Complex(1, 0)) < 1e-5);
  // symbolic oracle at a generic point: 1/(1+q)^2
  Complex w(0.35, -0.6);
  ChartPoint p2("c", {w});
  HermitianForm H4 = complex_hessian(f3, p2, 1e-3);
  CHECK(std::abs(H4.entries(0, 0).real() - 1.0 / std::pow(1.0 + std::norm(w), 2)) < 1e-5);
}

TEST_CASE("complex_hessian: off-diagonal orientation |z1 + i z2|^2") {
  // f = |g|^2 with g = z1 + i z2 holomorphic: H_ij = (dg/dz_i) conj(dg/dz_j),
  // so H_12 = 1 * conj(i) = -i. Pins down the sign convention of the
  // quarter-formula.
  ScalarField f = field_of(
      [](const CVector& z) { return std::norm(z[0] + Complex(0, 1) * z[1]); },
      "|z1+iz2|^2");
  HermitianForm H = complex_hessian(f, ChartPoint("c", CVector::Zero(2)), 1e-3);
  CHECK(std::abs(H.entries(0, 1) - Complex(0, -1)) < 1e-6);
  CHECK(std::abs(H.entries(1, 0) - Complex(0, 1)) < 1e-6);
}

TEST_CASE("complex_hessian: order-2 convergence on |z1|^4") {
  ScalarField f = field_of(
      [](const CVector& z) { return std::norm(z[0]) * std::norm(z[0]); }, "|z1|^4");
  ChartPoint p0("c", CVector::Zero(1));
  double e1 = std::abs(complex_hessian(f, p0, 2e-2).entries(0, 0));
  double e2 = std::abs(complex_hessian(f, p0, 1e-2).entries(0, 0));
  CHECK(e1 / e2 >= 3.0);
}

TEST_CASE("complex_hessian: refusal near singular locus, step validation") {
  ScalarField f;
  f.evaluate = [](const ChartPoint& p) { return std::log(std::norm(p.coords[0])); };
  f.singular_proximity_sq = [](const ChartPoint& p) { return std::norm(p.coords[0]); };
  f.smoothness_margin = 0.05;
  f.name = "log|z|^2";
  ChartPoint close("c", {Complex(0.01, 0)});
  CHECK_THROWS_AS(complex_hessian(f, close, 1e-3), Error);
  ChartPoint fine("c", {Complex(0.5, 0)});
  CHECK_NOTHROW(complex_hessian(f, fine, 1e-3));
  CHECK_THROWS_AS(complex_hessian(f, fine, 0.0), Error);
  CHECK_THROWS_AS(complex_hessian(f, fine, 1e-12), Error);
}

TEST_CASE("hermitian symmetry is exact after symmetrization") {
  std::mt19937_64 rng(7);
  ScalarField f = field_of(
      [](const CVector& z) {
        return std::norm(z[0]) * (1.0 + z[1].real()) + std::exp(z[0].real()) * z[1].imag();
      },
      "generic");
  for (int t = 0; t < 5; ++t) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    ChartPoint p("c", {Complex(u(rng), u(rng)), Complex(u(rng), u(rng))});
    HermitianForm H = complex_hessian(f, p, 1e-3);
    CHECK(H.hermitian_defect() == 0.0);
  }
}

TEST_CASE("min_generalized_eigenvalue: trivial and diagonal") {
  ChartPoint p("c", CVector::Zero(2));
  HermitianForm zero{p, CMatrix::Zero(2, 2)};
  HermitianForm eye{p, CMatrix::Identity(2, 2)};
  CHECK(std::abs(min_generalized_eigenvalue(zero, eye) - 1.0) < 1e-12);

  CMatrix d(2, 2);
  d << 1, 0, 0, 2;
  HermitianForm diag{p, d};
  CHECK(std::abs(min_generalized_eigenvalue(diag, eye) - 2.0) < 1e-12);
}

TEST_CASE("min_generalized_eigenvalue: 3x3 vs characteristic-polynomial oracle") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 12; ++t) {
    CMatrix H = oracles::random_hermitian(3, rng);
    CMatrix G = oracles::random_spd(3, rng);
    ChartPoint p("c", CVector::Zero(3));
    double got = min_generalized_eigenvalue(HermitianForm{p, H}, HermitianForm{p, G});
    double oracle = oracles::min_pencil_root(H, G);
    CHECK(std::abs(got - oracle) < 1e-10);
  }
}

TEST_CASE("min_generalized_eigenvalue: congruence invariance") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    CMatrix H = oracles::random_hermitian(3, rng);
    CMatrix G = oracles::random_spd(3, rng);
    CMatrix P(3, 3);
    do {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) P(i, j) = Complex(g(rng), g(rng));
    } while (std::abs(P.determinant()) < 0.1);
    double base = min_generalized_eigenvalue(H, G);
    double conj = min_generalized_eigenvalue((P.adjoint() * H * P).eval(),
                                             (P.adjoint() * G * P).eval());
    CHECK(std::abs(base - conj) < 1e-9 * std::max(1.0, std::abs(base)));
  }
}

TEST_CASE("min_generalized_eigenvalue: error paths") {
  ChartPoint p("c", CVector::Zero(2));
  HermitianForm eye{p, CMatrix::Identity(2, 2)};
  HermitianForm small{p, CMatrix::Identity(3, 3)};
  CHECK_THROWS_AS(min_generalized_eigenvalue(small, eye), Error);
  CMatrix neg = -CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(min_generalized_eigenvalue(eye, HermitianForm{p, neg}), Error);
}

TEST_CASE("adapted_chart: flat identity and anisotropic scaling") {
  ManifoldModel flat = build_flat_model();
  ChartPoint p("c0", {Complex(0, 0), Complex(0, 0)});
  AdaptedChart ac = adapted_chart(flat, p);
  CHECK((ac.basis - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  // metric 4|dz1|^2 + |dz2|^2: the Cholesky oracle gives u1 = e1/2
  FlatModelParams fp;
  fp.a1 = 4.0;
  ManifoldModel aniso = build_flat_model(fp);
  AdaptedChart ac2 = adapted_chart(aniso, p);
  CHECK(std::abs(ac2.basis(0, 0) - Complex(0.5, 0)) < 1e-14);
  CHECK(std::abs(ac2.basis(1, 1) - Complex(1.0, 0)) < 1e-14);
  CHECK(std::abs(ac2.basis(0, 1)) < 1e-14);

  // re-evaluating the metric in adapted coordinates yields the identity
  CMatrix g = aniso.ambient.metric(p).conjugate();
  CMatrix gnew = ac2.basis.adjoint() * g * ac2.basis;
  CHECK((gnew - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adapted_chart: Serre model normalizes the metric at p") {
  ManifoldModel serre = build_serre_model();
  ChartPoint p("s", {Complex(0, 0), Complex(0.2, -0.1)});
  AdaptedChart ac = adapted_chart(serre, p);
  CHECK(ac.tangential_dim == 1);
  // numerical re-check g(0) = I in the new frame (|v|^2 = v^* conj(g) v)
  CMatrix H = serre.ambient.metric(p).conjugate();
  CMatrix gnew = ac.basis.adjoint() * H * ac.basis;
  CHECK((gnew - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);
  // tangential column stays inside V: s-component zero
  CHECK(std::abs(ac.basis(0, 0)) < 1e-14);
}

TEST_CASE("adapted_chart: rejects points off V") {
  ManifoldModel flat = build_flat_model();
  ChartPoint off("c0", {Complex(0.1, 0), Complex(0.2, 0)});
  CHECK_THROWS_AS(adapted_chart(flat, off), Error);
}

TEST_CASE("real metric convention: g = I gives G = I, antisymmetric part sign") {
  CMatrix g(2, 2);
  g << 1, Complex(0, -1), Complex(0, 1), 1; // Hessian of |z1 + i z2|^2
  RMatrix G = real_metric(g);
  // |(1,0,0,-1)|^2 direction must vanish ((x1 - x4)^2 + (x2 + x3)^2 form)
  RVector v(4);
  v << 1, 0, 0, 1;
  CHECK(std::abs(v.dot(G * v)) < 1e-14);
  RVector u(4);
  u << 1, 0, 0, -1;
  CHECK(std::abs(u.dot(G * u) - 4.0) < 1e-12);
}
