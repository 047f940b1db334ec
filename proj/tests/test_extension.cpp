#include <doctest.h>

#include <random>

#include "qpx/distance.hpp"
#include "qpx/extension.hpp"
#include "qpx/geometry.hpp"

using namespace qpx;

namespace {

const ManifoldModel& flat_model() {
  static ManifoldModel m = build_flat_model();
  return m;
}
const ManifoldModel& product_model() {
  static ManifoldModel m = build_product_model();
  return m;
}
const ManifoldModel& serre_model() {
  static ManifoldModel m = build_serre_model();
  return m;
}

QpshFunction constant_phi(const ManifoldModel& m, double value) {
  QpshFunction phi;
  phi.c = 0.0;
  ExprContext ctx;
  ctx.coord_names = {"z"};
  for (const auto& chart : m.V.intrinsic.charts) {
    QpshFunction::ChartData data;
    data.smooth = parse_expression(std::to_string(value), ctx);
    phi.charts[chart.id] = data;
  }
  return phi;
}

PipelineOptions small_options() {
  PipelineOptions po;
  po.epsilon = 1.0;
  po.C = 16.0;
  po.m_schedule = {1, 2, 4};
  po.star.grid_per_axis = 5;
  po.find_a.grid_n_v = 3;
  po.find_a.grid_n_phase = 4;
  po.find_a.grid_n_radial = 3;
  po.find_a.A_scan = 6;
  po.find_a.bisect_iters = 12;
  po.find_a.eps_prime_target = 0.2;
  po.nu.n_v = 5;
  po.nu.n_phase = 8;
  po.verify.grid_normal_axis = 8;
  po.verify.grid_v_axis = 3;
  po.verify.restriction_samples = 16;
  po.reference.grid_per_axis = 5;
  return po;
}

} // namespace

TEST_CASE("local_extend: restriction to V is exact, flat case is A|z2|^2") {
  const auto& m = flat_model();
  ScalarField zero = constant_field(0.0);
  ScalarField bar = local_extend(zero, m, 2.5);
  ChartPoint x("c0", {Complex(0.4, 0.1), Complex(0.3, -0.2)});
  CHECK(std::abs(bar.evaluate(x) - 2.5 * std::norm(Complex(0.3, -0.2))) < 1e-14);

  ScalarField phi;
  phi.evaluate = [](const ChartPoint& p) { return -3.0 + p.coords[0].real(); };
  phi.name = "affine";
  ScalarField bar2 = local_extend(phi, m, 1.0);
  ChartPoint on_v("c0", {Complex(0.7, -0.3), Complex(0, 0)});
  CHECK(bar2.evaluate(on_v) == phi.evaluate(m.retraction(on_v)));
}

TEST_CASE("local_extend: Serre sample matches component-wise recomputation") {
  const auto& m = serre_model();
  ScalarField phi;
  phi.evaluate = [&](const ChartPoint& p) {
    ChartPoint c = m.V.intrinsic.canonicalize(p);
    return -5.0 + 0.3 * c.coords[0].real();
  };
  phi.name = "test";
  double A = 1.7;
  ScalarField bar = local_extend(phi, m, A);
  ChartPoint x("s", {Complex(0.1, 0.05), Complex(0.2, -0.1)});
  double expect = phi.evaluate(m.retraction(x)) +
                  A * squared_distance(m).evaluate(x);
  CHECK(bar.evaluate(x) == expect);
}

TEST_CASE("find_A: product model margin is the family bound for every A") {
  FindAOptions fo;
  fo.eps_family = 1.0;
  fo.eps_prime_target = 0.5;
  fo.A_scan = 4;
  fo.grid_n_v = 3;
  fo.grid_n_phase = 4;
  fo.grid_n_radial = 3;
  LocalExtensionParams params = find_A(product_model(), fo);
  // tangential directions pin the margin at eps_family for any A >= 0, so the
  // smallest scanned A wins and the certified margin sits at 1.0 (FD noise).
  CHECK(params.A == fo.A_min);
  CHECK(params.epsilon_prime >= 0.5);
  CHECK(std::abs(params.epsilon_prime - 1.0) < 1e-3);
}

TEST_CASE("find_A: degenerate target above ambient positivity fails with curve") {
  FindAOptions fo;
  fo.eps_family = 1.0;
  fo.eps_prime_target = 1.5; // cannot exceed the ambient margin
  fo.A_scan = 4;
  fo.grid_n_v = 2;
  fo.grid_n_phase = 3;
  fo.grid_n_radial = 2;
  fo.w_attempts = 2;
  CHECK_THROWS_WITH_AS(find_A(product_model(), fo),
                       doctest::Contains("margin curve"), Error);
}

TEST_CASE("find_A: independence contract, bit-identical across star families") {
  // three phi families sharing the same star certificate never enter find_A
  FindAOptions fo;
  fo.eps_family = 0.5;
  fo.eps_prime_target = 0.1;
  fo.A_scan = 5;
  fo.grid_n_v = 3;
  fo.grid_n_phase = 4;
  fo.grid_n_radial = 3;
  std::vector<std::string> runs;
  for (int family = 0; family < 3; ++family)
    runs.push_back(find_A(serre_model(), fo).serialize());
  CHECK(runs[0] == runs[1]);
  CHECK(runs[1] == runs[2]);
}

TEST_CASE("choose_nu: constants example and scale covariance") {
  const auto& m = flat_model();
  ScalarField phi1 = constant_field(-4.0, "phi_tilde_1");

  ReferenceFunction ref;
  ref.F = constant_field(-1.0, "F");
  ref.epsilon = 1.0; // curvature unconstrained
  ref.c = 0.1;
  ref.K = 1.0;
  NuOptions opts;
  opts.margin_fraction = 0.05;
  NuChoice nu = choose_nu(m, 0.5, phi1, ref, 0.3, opts);
  CHECK(std::abs(nu.C_dd - 4.0) < 1e-14);
  CHECK(std::abs(nu.nu_boundary_max - 2.0) < 1e-14);
  CHECK(std::abs(nu.nu - 2.0 * 0.95) < 1e-14);

  // F -> 2F: returned nu halves, the product nu*F is invariant
  ReferenceFunction ref2 = ref;
  ref2.F = constant_field(-2.0, "2F");
  ref2.epsilon = 2.0 * ref.epsilon - 1.0; // exact pencil shift for doubled H
  NuChoice nu2 = choose_nu(m, 0.5, phi1, ref2, 0.3, opts);
  CHECK(std::abs(nu2.nu - 0.5 * nu.nu) < 1e-15);
}

TEST_CASE("choose_nu: insufficient normalization is a construction error") {
  const auto& m = flat_model();
  ScalarField phi1 = constant_field(+1.0, "bad");
  ReferenceFunction ref;
  ref.F = constant_field(-1.0, "F");
  ref.epsilon = 1.0;
  NuOptions opts;
  CHECK_THROWS_WITH_AS(choose_nu(m, 0.5, phi1, ref, 0.3, opts),
                       doctest::Contains("insufficient"), Error);
}

TEST_CASE("glue: V restriction exact, outside W identically nu F, collar continuity") {
  const auto& m = product_model();
  ScalarField phi_mv = constant_field(-10.0, "phi_m");
  double A = 0.5, w_radius = 0.2;
  ScalarField tilde = local_extend(phi_mv, m, A);

  ReferenceOptions ro;
  ro.c = 0.3;
  ro.cap_radius = 0.5 * (w_radius + m.tube_radius);
  ro.eps_target = 0.3;
  ReferenceFunction ref = reference_function(m, ro);

  NuOptions no;
  NuChoice nu = choose_nu(m, w_radius, tilde, ref, 0.3, no);
  GluedExtension g = glue(tilde, 1, nu.nu, ref.F, m, w_radius, tilde, no);
  CHECK(g.boundary_margin > 0);

  // on V: Phi_m = phi_m exactly (nu F = -inf there)
  ChartPoint on_v("a", {Complex(0.4, -0.1), Complex(0, 0)});
  CHECK(g.field.evaluate(on_v) == tilde.evaluate(on_v));
  CHECK(g.field.evaluate(on_v) == -10.0);

  // outside W: identically nu F
  ChartPoint outside("a", {Complex(0.2, 0.1), Complex(0.30, 0.05)});
  CHECK(g.field.evaluate(outside) == g.reference_branch.evaluate(outside));

  // collar continuity: just inside the boundary the reference branch is the
  // active one, so the glued value agrees with nu F bitwise on both sides
  for (const auto& p : m.tube_shell_samples(w_radius * 0.999, 3, 4)) {
    CHECK(g.field.evaluate(p) == g.reference_branch.evaluate(p));
    CHECK(g.active_branch(m, p) == Branch::Reference);
  }
}

TEST_CASE("glue: monotone in the first argument on sampled pairs") {
  const auto& m = product_model();
  ScalarField lo = constant_field(-11.0, "lo");
  ScalarField hi = constant_field(-10.0, "hi");
  double A = 0.5, w_radius = 0.2;
  ScalarField tlo = local_extend(lo, m, A);
  ScalarField thi = local_extend(hi, m, A);

  ReferenceOptions ro;
  ro.c = 0.3;
  ro.cap_radius = 0.5 * (w_radius + m.tube_radius);
  ro.eps_target = 0.3;
  ReferenceFunction ref = reference_function(m, ro);
  NuOptions no;
  NuChoice nu = choose_nu(m, w_radius, thi, ref, 0.3, no);
  GluedExtension glo = glue(tlo, 1, nu.nu, ref.F, m, w_radius, thi, no);
  GluedExtension ghi = glue(thi, 1, nu.nu, ref.F, m, w_radius, thi, no);

  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    ChartPoint p("a", {Complex(u(rng), u(rng)), Complex(0.45 * u(rng), 0.45 * u(rng))});
    CHECK(glo.field.evaluate(p) <= ghi.field.evaluate(p) + 1e-15);
  }
}

TEST_CASE("glue: nonpositive boundary margin is rejected") {
  const auto& m = product_model();
  ScalarField phi_mv = constant_field(-10.0, "phi_m");
  ScalarField tilde = local_extend(phi_mv, m, 0.5);
  ScalarField F_weak = constant_field(-1e6, "too-negative");
  NuOptions no;
  CHECK_THROWS_WITH_AS(glue(tilde, 1, 1.0, F_weak, m, 0.2, tilde, no),
                       doctest::Contains("boundary margin"), Error);
}

TEST_CASE("branch dominance: glued Hessian equals the branch Hessian") {
  const auto& m = product_model();
  ScalarField phi_mv = constant_field(-10.0, "phi_m");
  double A = 0.5, w_radius = 0.2;
  ScalarField tilde = local_extend(phi_mv, m, A);
  ReferenceOptions ro;
  ro.c = 0.3;
  ro.cap_radius = 0.5 * (w_radius + m.tube_radius);
  ro.eps_target = 0.3;
  ReferenceFunction ref = reference_function(m, ro);
  NuOptions no;
  NuChoice nu = choose_nu(m, w_radius, tilde, ref, 0.3, no);
  GluedExtension g = glue(tilde, 1, nu.nu, ref.F, m, w_radius, tilde, no);

  // near V the local branch dominates by a large margin
  ChartPoint p("a", {Complex(0.3, 0.2), Complex(0.02, 0.01)});
  double gap = g.local_branch.evaluate(p) - g.reference_branch.evaluate(p);
  CHECK(gap > 1.0);
  HermitianForm glued_h = complex_hessian(g.field, p, 1e-3);
  HermitianForm branch_h = complex_hessian(g.local_branch, p, 1e-3);
  CHECK((glued_h.entries - branch_h.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pipeline: product model with constant phi passes all checks") {
  PipelineOptions po = small_options();
  PipelineResult res =
      run_extension_pipeline(product_model(), constant_phi(product_model(), -10.0), po);
  INFO(res.failed_stage, ": ", res.failure_message);
  CHECK(res.ok);
  CHECK(res.report.pass);
  CHECK(res.report.failures.empty());
  for (const auto& d : res.report.per_m) {
    CHECK(d.min_positivity >= res.local_params.epsilon_prime);
    CHECK(d.max_value <= 1e-12);
    CHECK(d.restriction_error <= 1e-12);
    CHECK(d.samples > 0);
  }
}

TEST_CASE("pipeline: nu-scale invariance of the glued fields") {
  // replacing F by 2F and nu by nu/2 leaves every Phi_m unchanged
  const auto& m = product_model();
  ScalarField phi_mv = constant_field(-10.0, "phi_m");
  double A = 0.5, w_radius = 0.2;
  ScalarField tilde = local_extend(phi_mv, m, A);
  ReferenceOptions ro;
  ro.c = 0.3;
  ro.cap_radius = 0.5 * (w_radius + m.tube_radius);
  ro.eps_target = 0.3;
  ReferenceFunction ref = reference_function(m, ro);
  NuOptions no;
  NuChoice nu = choose_nu(m, w_radius, tilde, ref, 0.3, no);

  ScalarField F2;
  ScalarField F1 = ref.F;
  F2.evaluate = [F1](const ChartPoint& p) { return 2.0 * F1.evaluate(p); };
  F2.name = "2F";
  GluedExtension a = glue(tilde, 1, nu.nu, ref.F, m, w_radius, tilde, no);
  GluedExtension b = glue(tilde, 1, 0.5 * nu.nu, F2, m, w_radius, tilde, no);

  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    ChartPoint p("a", {Complex(u(rng), u(rng)), Complex(0.45 * u(rng), 0.45 * u(rng))});
    double va = a.field.evaluate(p), vb = b.field.evaluate(p);
    CHECK(std::abs(va - vb) <= 1e-12 * std::max(1.0, std::abs(va)));
  }
}

TEST_CASE("pipeline: fault injection is reported, never a false pass") {
  PipelineOptions po = small_options();
  po.nu_override_factor = 2.0;
  PipelineResult res =
      run_extension_pipeline(product_model(), constant_phi(product_model(), -10.0), po);
  CHECK(!res.ok);
  CHECK(res.failed_stage == "verify_extension");
  bool boundary_named = false;
  for (const auto& f : res.report.failures)
    if (f.check.find("boundary") != std::string::npos) boundary_named = true;
  CHECK(boundary_named);

  PipelineOptions po2 = small_options();
  po2.find_a.eps_prime_target = 1.5;
  PipelineResult res2 =
      run_extension_pipeline(product_model(), constant_phi(product_model(), -10.0), po2);
  CHECK(!res2.ok);
  CHECK(res2.failed_stage == "find_A");
}

TEST_CASE("pipeline: star violation is caught at the check_star stage") {
  PipelineOptions po = small_options();
  PipelineResult res =
      run_extension_pipeline(product_model(), constant_phi(product_model(), 1.0), po);
  CHECK(!res.ok);
  CHECK(res.failed_stage == "check_star");
}
