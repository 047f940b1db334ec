#include <doctest.h>

#include <random>

#include "qpx/geometry.hpp"
#include "qpx/models.hpp"
#include "qpx/qpsh.hpp"

using namespace qpx;

namespace {

const ManifoldModel& torus2_model() {
  static ManifoldModel m = [] {
    ProductModelParams p;
    p.first.kind = "torus";
    return build_product_model(p);
  }();
  return m;
}
const ManifoldModel& product_model() {
  static ManifoldModel m = build_product_model();
  return m;
}

ExprContext torus_ctx() {
  ExprContext ctx;
  ctx.coord_names = {"z"};
  ctx.tau = Complex(0, 1);
  return ctx;
}

// phi = -10 + log|z|^2 on the torus V (elliptic coordinate in the
// fundamental domain).
QpshFunction torus_log_phi() {
  QpshFunction phi;
  phi.c = 1.0;
  QpshFunction::ChartData data;
  data.smooth = parse_expression("-10", torus_ctx());
  data.f = {parse_expression("z", torus_ctx())};
  phi.charts["vt"] = data;
  return phi;
}

QpshFunction constant_phi(double value) {
  QpshFunction phi;
  phi.c = 0.0;
  QpshFunction::ChartData data;
  data.smooth = parse_expression(std::to_string(value), torus_ctx());
  phi.charts["vt"] = data;
  return phi;
}

} // namespace

TEST_CASE("expressions: parsing, arithmetic, holomorphy flags") {
  ExprContext ctx;
  ctx.coord_names = {"z", "w"};
  CVector coords(2);
  coords << Complex(0.3, 0.4), Complex(-1, 2);

  auto e1 = parse_expression("z^2 + i*w - 0.5", ctx);
  Complex expect = Complex(0.3, 0.4) * Complex(0.3, 0.4) +
                   Complex(0, 1) * Complex(-1, 2) - 0.5;
  CHECK(std::abs(e1->eval(coords) - expect) < 1e-15);
  CHECK(e1->holomorphic());

  auto e2 = parse_expression("abs2(z) - re(w)*im(w)", ctx);
  CHECK(std::abs(e2->eval(coords) - (0.25 - (-1.0) * 2.0)) < 1e-15);
  CHECK(!e2->holomorphic());

  auto e3 = parse_expression("exp(2*z)", ctx);
  CHECK(std::abs(e3->eval(coords) - std::exp(Complex(0.6, 0.8))) < 1e-14);
  CHECK(e3->holomorphic());

  CHECK_THROWS_AS(parse_expression("nope(z)", ctx), Error);
  CHECK_THROWS_AS(parse_expression("z +", ctx), Error);
  CHECK_THROWS_AS(parse_expression("q", ctx), Error);
}

TEST_CASE("expressions: truncated theta1 vanishes on the lattice, quasi-periodic modulus") {
  Complex tau(0, 1);
  CHECK(std::abs(theta1(Complex(0, 0), tau)) < 1e-14);
  CHECK(std::abs(theta1(Complex(1, 0), tau)) < 1e-12);
  CHECK(std::abs(theta1(tau, tau)) < 1e-10);
  // |theta1(z+1)| = |theta1(z)|
  Complex z(0.23, 0.11);
  CHECK(std::abs(std::abs(theta1(z + 1.0, tau)) - std::abs(theta1(z, tau))) < 1e-12);
}

TEST_CASE("check_star: constant -10 certifies, +1 fails the sign bound") {
  const auto& m = torus2_model();
  StarOptions opts;
  ScalarField f10 = constant_phi(-10).field(m.V.intrinsic);
  StarCheckResult ok = check_star(f10, m, 2.0, 20.0, opts);
  CHECK(ok.ok);
  CHECK(std::abs(ok.certificate.min_margin - 1.0) < 1e-7); // i ddbar 0 vs flat metric

  StarCheckResult bad = check_star(constant_phi(1).field(m.V.intrinsic), m, 1.0, 1.0, opts);
  CHECK(!bad.ok);
  CHECK(bad.failure.find("-C/2") != std::string::npos);
}

TEST_CASE("check_star: Green-type function on the product V, grid sweep value") {
  // phi = 0.5 (log|w|^2 - log(1+|w|^2)) - 10: i ddbar phi = -0.5 omega_FS off
  // the pole, so the margin is exactly 0.5.
  const auto& m = product_model();
  QpshFunction phi;
  phi.c = 0.5;
  ExprContext ctx;
  ctx.coord_names = {"w"};
  QpshFunction::ChartData aff;
  aff.smooth = parse_expression("-10 - 0.5*log1p_abs2(w)", ctx);
  aff.f = {parse_expression("w", ctx)};
  phi.charts["va"] = aff;
  QpshFunction::ChartData inf;
  inf.smooth = parse_expression("-10 - 0.5*log1p_abs2(w)", ctx);
  inf.f = {parse_expression("1", ctx)};
  phi.charts["vb"] = inf;

  StarOptions opts;
  opts.singular_collar = 0.2;
  ScalarField f = phi.field(m.V.intrinsic);
  StarCheckResult res = check_star(f, m, 0.9, 18.0, opts);
  CHECK(res.ok);
  CHECK(std::abs(res.certificate.min_margin - 0.5) < 1e-4);

  // monotone in epsilon and C: strengthening flips pass to fail
  CHECK(!check_star(f, m, 1.2, 18.0, opts).ok);
  CHECK(!check_star(f, m, 0.9, 25.0, opts).ok);
}

TEST_CASE("qpsh: chart-transition consistency of the Green-type function") {
  const auto& m = product_model();
  QpshFunction phi;
  phi.c = 0.5;
  ExprContext ctx;
  ctx.coord_names = {"w"};
  QpshFunction::ChartData aff;
  aff.smooth = parse_expression("-10 - 0.5*log1p_abs2(w)", ctx);
  aff.f = {parse_expression("w", ctx)};
  phi.charts["va"] = aff;
  QpshFunction::ChartData inf;
  inf.smooth = parse_expression("-10 - 0.5*log1p_abs2(w)", ctx);
  inf.f = {parse_expression("1", ctx)};
  phi.charts["vb"] = inf;

  // evaluate through both chart descriptions on the overlap annulus
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  std::uniform_real_distribution<double> a(0, 6.283);
  for (int t = 0; t < 12; ++t) {
    Complex w = u(rng) * std::exp(Complex(0, a(rng)));
    double va = phi.evaluate(m.V.intrinsic, ChartPoint("va", {w}));
    double vb = phi.evaluate(m.V.intrinsic, ChartPoint("vb", {1.0 / w}));
    CHECK(std::abs(va - vb) <= 1e-9 * std::max(1.0, std::abs(va)));
  }
}

TEST_CASE("regularize: smooth functions are fixed points") {
  const auto& m = torus2_model();
  QpshFunction phi = constant_phi(-7);
  ScalarField f1 = regularize(phi, m.V.intrinsic, 1);
  ScalarField f9 = regularize(phi, m.V.intrinsic, 9);
  ChartPoint p("vt", {Complex(0.2, -0.3)});
  CHECK(f1.evaluate(p) == -7.0);
  CHECK(f9.evaluate(p) == -7.0);
}

TEST_CASE("regularize: monotone decreasing in m, above phi, exact gap bound") {
  const auto& m = torus2_model();
  QpshFunction phi = torus_log_phi();
  ScalarField base = phi.field(m.V.intrinsic);
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(-0.45, 0.45);
  std::vector<long> ms = {1, 2, 4, 8, 16};
  for (int t = 0; t < 25; ++t) {
    ChartPoint p("vt", {Complex(u(rng), u(rng))});
    double prev = std::numeric_limits<double>::infinity();
    double phival = base.evaluate(p);
    for (long mm : ms) {
      double v = regularize(phi, m.V.intrinsic, mm).evaluate(p);
      CHECK(v <= prev + 1e-12);
      CHECK(v >= phival);
      // |phi_m - phi| <= c log(1 + 1/(m q)) exactly (equality for one f)
      double q = std::norm(m.V.intrinsic.canonicalize(p).coords[0]);
      if (q > 0) {
        double bound = std::log1p(1.0 / (double(mm) * q));
        CHECK(v - phival <= bound + 1e-12);
      }
      prev = v;
    }
  }
}

TEST_CASE("regularize: refuses non-analytic descriptors") {
  const auto& m = torus2_model();
  QpshFunction blackbox = torus_log_phi();
  blackbox.analytic_form = false;
  CHECK_THROWS_AS(regularize(blackbox, m.V.intrinsic, 2), Error);
}

TEST_CASE("regularization_schedule: margins, eps_m decreasing, certified bounds hold") {
  const auto& m = torus2_model();
  QpshFunction phi = torus_log_phi();
  StarOptions opts;
  RegularizationTable table =
      regularization_schedule(phi, m, {1, 2, 4, 8, 16}, 1.0, opts);
  REQUIRE(table.rows.size() == 5);
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    // mollifying log sum |f|^2 never loses positivity on this class
    CHECK(row.margin >= 1.0 - 1e-9);
    CHECK(row.deficit == 0.0);
    // the certified bound epsilon - eps_m is honored by the measurement
    CHECK(row.margin >= table.epsilon - row.eps_m);
    CHECK(row.min_gap_phi >= 0.0);
    if (i > 0) {
      CHECK(row.eps_m < table.rows[i - 1].eps_m); // strictly decreasing
      CHECK(row.min_gap_prev >= -1e-12);          // monotone non-increasing
    }
  }
}

TEST_CASE("regularization_schedule: rejects bad schedules") {
  const auto& m = torus2_model();
  QpshFunction phi = torus_log_phi();
  StarOptions opts;
  CHECK_THROWS_AS(regularization_schedule(phi, m, {4}, 1.0, opts), Error);
  CHECK_THROWS_AS(regularization_schedule(phi, m, {4, 2}, 1.0, opts), Error);
}
