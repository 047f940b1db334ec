#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracles.hpp"
#include "qpx/distance.hpp"
#include "qpx/geometry.hpp"
#include "qpx/models.hpp"

using namespace qpx;

namespace {

const ManifoldModel& product_model() {
  static ManifoldModel m = build_product_model();
  return m;
}
const ManifoldModel& serre_model() {
  static ManifoldModel m = build_serre_model();
  return m;
}

} // namespace

TEST_CASE("product model: retraction is the projection, idempotent on samples") {
  const auto& m = product_model();
  ChartPoint p("a", {Complex(0.3, -0.2), Complex(0.1, 0.2)});
  ChartPoint v = m.retraction(p);
  CHECK(std::abs(v.coords[0] - Complex(0.3, -0.2)) < 1e-14);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int t = 0; t < 100; ++t) {
    ChartPoint x("a", {Complex(u(rng), u(rng)), Complex(0.4 * u(rng), 0.4 * u(rng))});
    ChartPoint v1 = m.retraction(x);
    ChartPoint v2 = m.retraction(m.V.include(v1));
    CHECK(to_real(m.V.intrinsic.delta(v1, v2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("product model: omega positive definite on a sample sweep") {
  const auto& m = product_model();
  double min_ev = 1e9;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    ChartPoint p(t % 2 ? "a" : "b",
                 {Complex(1.2 * u(rng), 1.2 * u(rng)), Complex(0.7 * u(rng), 0.7 * u(rng))});
    HermitianForm g = metric_at(m, p);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g.entries, Eigen::EigenvaluesOnly);
    min_ev = std::min(min_ev, es.eigenvalues().minCoeff());
  }
  CHECK(min_ev > 0.0);
  // the FS coefficient at the box corner pins the scale: 1/(1+2*1.25^2)^2
  double corner = 1.0 / std::pow(1.0 + 2 * 1.25 * 1.25, 2);
  CHECK(min_ev >= corner - 1e-12);
}

TEST_CASE("serre model: identified points give the same canonical point and fields") {
  const auto& m = serre_model();
  ChartPoint p("w", {Complex(0.2, 0), Complex(0.3, 0)});
  ChartPoint q("w", {Complex(1.2, 0), Complex(1.3, 0)}); // (w+1, z+1)
  ChartPoint cp = m.ambient.canonicalize(p);
  ChartPoint cq = m.ambient.canonicalize(q);
  CHECK(cp.chart == cq.chart);
  CHECK((cp.coords - cq.coords).cwiseAbs().maxCoeff() < 1e-14);

  // any invariant field agrees: use the capped h (deck invariant)
  ScalarField h = capped_squared_distance(m, 0.9 * m.tube_radius);
  CHECK(std::abs(h.evaluate(p) - h.evaluate(q)) < 1e-12);

  // tau identification
  Complex tau(0, 1);
  ChartPoint r("w", {Complex(0.2, 0) + std::conj(tau), Complex(0.3, 0) + tau});
  CHECK(std::abs(h.evaluate(p) - h.evaluate(r)) < 1e-12);
}

TEST_CASE("serre model: |w - conj(z)| is invariant under both identifications") {
  auto invariant = [](const ChartPoint& p) {
    return std::abs(p.coords[0] - std::conj(p.coords[1]));
  };
  ChartPoint p("w", {Complex(0.2, 0.05), Complex(0.3, -0.1)});
  for (const auto& ident : serre_model().ambient.identifications) {
    ChartPoint q = ident(p);
    CHECK(std::abs(invariant(p) - invariant(q)) < 1e-14);
  }
}

TEST_CASE("serre model: retraction lands on V and is fixed by retraction") {
  const auto& m = serre_model();
  ChartPoint x("w", {Complex(0.7, 0), Complex(0.23, 0.11)});
  ChartPoint v = m.retraction(x);
  CHECK(v.chart == "vt");
  CHECK(std::abs(v.coords[0] - Complex(0.23, 0.11)) < 1e-14);
  ChartPoint again = m.retraction(m.V.include(v));
  CHECK(to_real(m.V.intrinsic.delta(v, again)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("serre model: metric consistency between the w and s charts") {
  const auto& m = serre_model();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    Complex w(1.050 + 0.2 * std::abs(u(rng)), 0.2 * u(rng));
    Complex z(0.4 * u(rng), 0.4 * u(rng));
    ChartPoint pw("w", {w, z});
    ChartPoint ps("s", {1.0 / w, z});
    CMatrix gw = m.ambient.metric(pw);
    CMatrix gs = m.ambient.metric(ps);
    // pullback under s = 1/w: J = diag(-1/w^2, 1); g_w = J^T g_s conj(J)
    CMatrix J = CMatrix::Identity(2, 2);
    J(0, 0) = -1.0 / (w * w);
    CMatrix pulled = J.transpose() * gs * J.conjugate();
    worst = std::max(worst, (gw - pulled).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("serre model: positivity certification failures") {
  SerreParameters weak;
  weak.kappa = 1e-4; // metric degenerates in the fiber direction
  CHECK_THROWS_WITH_AS(build_serre_model(weak),
                       doctest::Contains("metric-positivity"), Error);

  SerreParameters strong;
  strong.kappa = 1.8; // genuinely indefinite far from V
  CHECK_THROWS_AS(build_serre_model(strong), Error);

  SerreParameters bad_tau;
  bad_tau.tau = Complex(0, -1);
  CHECK_THROWS_AS(build_serre_model(bad_tau), Error);
}

TEST_CASE("validate_model passes on all shipped models") {
  for (const ManifoldModel* m : {&product_model(), &serre_model()}) {
    auto checks = validate_model(*m);
    for (const auto& c : checks) {
      INFO(c.name, ": ", c.detail);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("reference function: product model, log h is harmonic off V") {
  const auto& m = product_model();
  // i ddbar log|z|^2 = 0 on the punctured flat chart: finite differences
  ScalarField logh;
  logh.name = "log h";
  ScalarField h = capped_squared_distance(m, 0.99 * m.tube_radius);
  logh.evaluate = [h](const ChartPoint& p) { return std::log(h.evaluate(p)); };
  ChartPoint p("a", {Complex(0.2, 0.1), Complex(0.2, 0.1)});
  double e1 = complex_hessian(logh, p, 1e-3).entries.cwiseAbs().maxCoeff();
  double e2 = complex_hessian(logh, p, 2.5e-4).entries.cwiseAbs().maxCoeff();
  CHECK(e1 < 2e-4);       // second-order truncation at this distance from V
  CHECK(e2 < 2e-5);       // refinement drives the residual toward zero
  CHECK(e2 < e1);
}

TEST_CASE("reference function: certification, negativity, log singularity") {
  const auto& m = product_model();
  ReferenceOptions ro;
  ro.c = 0.3;
  ro.cap_radius = 0.8 * m.tube_radius;
  ro.eps_target = 0.5;
  ReferenceFunction ref = reference_function(m, ro);
  CHECK(ref.epsilon >= 0.5);

  // F <= -1 on a sample sweep (global by the capped construction)
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    ChartPoint p(t % 2 ? "a" : "b",
                 {Complex(1.1 * u(rng), 1.1 * u(rng)), Complex(0.7 * u(rng), 0.7 * u(rng))});
    CHECK(ref.F.evaluate(p) <= -1.0 + 1e-12);
  }

  // F -> -inf along V: at distance 1e-4 the value is below c*log(1e-8) - K + eps
  ChartPoint close("a", {Complex(0.3, 0), Complex(1e-4, 0)});
  CHECK(ref.F.evaluate(close) < ref.c * std::log(1e-8) - ref.K + 1e-9);
  ChartPoint on_v("a", {Complex(0.3, 0), Complex(0, 0)});
  CHECK(ref.F.evaluate(on_v) == kNegInf);
}

TEST_CASE("reference function: certified epsilon is reproducible bit for bit") {
  const auto& m = serre_model();
  ReferenceOptions ro;
  ro.c = 0.25;
  ro.cap_radius = 0.8 * m.tube_radius;
  ro.eps_target = 0.01;
  ReferenceFunction a = reference_function(m, ro);
  ReferenceFunction b = reference_function(m, ro);
  CHECK(a.epsilon == b.epsilon);
  CHECK(a.K == b.K);
}

TEST_CASE("find_reference_c: returns the first certified candidate or fails with best") {
  const auto& m = product_model();
  ReferenceOptions ro;
  ro.cap_radius = 0.8 * m.tube_radius;
  ro.eps_target = 0.5;
  ReferenceFunction ref = find_reference_c(m, {0.4, 0.2, 0.1}, ro);
  CHECK(ref.c == 0.4); // harmonic log h: every candidate certifies, first wins

  ReferenceOptions impossible = ro;
  impossible.eps_target = 2.0; // cannot exceed the ambient margin 1
  CHECK_THROWS_AS(find_reference_c(m, {0.4, 0.2}, impossible), Error);
}

TEST_CASE("scalar fields are chart-transition consistent on overlaps") {
  const auto& m = serre_model();
  ScalarField h = capped_squared_distance(m, 0.9 * m.tube_radius);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    Complex w(1.1 + 0.1 * u(rng), 0.15 * u(rng));
    Complex z(0.45 * u(rng), 0.45 * u(rng));
    ChartPoint pw("w", {w, z});
    ChartPoint ps("s", {1.0 / w, z});
    double a = h.evaluate(pw), b = h.evaluate(ps);
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
  }
}
