#include "qpx/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qpx/distance.hpp"
#include "qpx/geometry.hpp"

namespace qpx {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double dist_to_V(const ManifoldModel& m, const ChartPoint& p) {
  if (m.distance_to_V) return m.distance_to_V(p);
  return nearest_point(m, p).distance;
}

} // namespace

// ------------------------------------------------------------ local step ---

ScalarField local_extend(const ScalarField& phi_m_on_V, const ManifoldModel& model,
                         double A) {
  if (!(A > 0)) fail(ErrorKind::Parameter, "local_extend requires A > 0");
  const ManifoldModel* m = &model;
  ScalarField h = squared_distance(model);
  ScalarField phi = phi_m_on_V;
  ScalarField out;
  out.name = phi.name + "_bar";
  out.evaluate = [m, phi, h, A](const ChartPoint& x) {
    ChartPoint v = m->retraction(x);
    return phi.evaluate(v) + A * h.evaluate(x);
  };
  if (phi.singular_proximity_sq) {
    out.singular_proximity_sq = [m, phi](const ChartPoint& x) {
      return phi.singular_proximity_sq(m->retraction(x));
    };
  }
  out.smoothness_margin = phi.smoothness_margin;
  return out;
}

std::string LocalExtensionParams::serialize() const {
  std::string s = "A=" + fmt17(A) + ";eps_prime=" + fmt17(epsilon_prime) +
                  ";w_radius=" + fmt17(w_radius) + ";samples=" +
                  std::to_string(certified_samples) + ";curve=";
  for (const auto& pr : margin_curve)
    s += "(" + fmt17(pr[0]) + "," + fmt17(pr[1]) + ")";
  return s;
}

namespace {

// Pullback r^*(omega|_V) at x: J^T g_V conj(J) with J = [d r_k / d z_i].
CMatrix retraction_pullback_form(const ManifoldModel& model, const ChartPoint& x,
                                 double step = 1e-6) {
  const int n = x.dim();
  ChartPoint base = model.retraction(x);
  const int k = base.dim();
  CMatrix J(k, n);
  for (int i = 0; i < n; ++i) {
    CVector cp = x.coords, cm = x.coords, cpi = x.coords, cmi = x.coords;
    cp[i] += step;
    cm[i] -= step;
    cpi[i] += Complex(0, step);
    cmi[i] -= Complex(0, step);
    auto value = [&](const CVector& c) -> CVector {
      ChartPoint out = model.retraction(ChartPoint(x.chart, c));
      auto here = model.V.intrinsic.transition(out, base.chart);
      if (!here) fail(ErrorKind::Domain, "retraction jumped charts inside a stencil");
      return base.coords + model.V.intrinsic.delta(base, *here);
    };
    CVector dx = (value(cp) - value(cm)) / (2.0 * step);
    CVector dy = (value(cpi) - value(cmi)) / (2.0 * step);
    // d/dz = (d/dx - i d/dy)/2
    J.col(i) = 0.5 * (dx - Complex(0, 1) * dy);
  }
  CMatrix gV = model.V.intrinsic.metric(base);
  return J.transpose() * gV * J.conjugate();
}

std::vector<ChartPoint> tube_grid(const ManifoldModel& model, double w_radius,
                                  int n_radial, int n_v, int n_phase) {
  std::vector<ChartPoint> pts;
  for (int r = 0; r < n_radial; ++r) {
    double d = w_radius * double(r) / double(n_radial - 1);
    if (r == 0) d = 1e-4 * w_radius; // just off V; h is smooth across V anyway
    auto shell = model.tube_shell_samples(d, n_v, n_phase);
    pts.insert(pts.end(), shell.begin(), shell.end());
  }
  return pts;
}

double surrogate_margin(const ManifoldModel& model, const std::vector<ChartPoint>& grid,
                        const ScalarField& h, double A, double eps_family,
                        double step) {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& x : grid) {
    HermitianForm G = metric_at(model, x);
    HermitianForm Hh = complex_hessian(h, x, step);
    CMatrix P = retraction_pullback_form(model, x);
    CMatrix extra = A * Hh.entries + (eps_family - 1.0) * P;
    worst = std::min(worst, min_generalized_eigenvalue(extra, G.entries));
  }
  return worst;
}

} // namespace

LocalExtensionParams find_A(const ManifoldModel& model, const FindAOptions& opts) {
  if (!(opts.eps_family > 0))
    fail(ErrorKind::Precondition, "find_A needs a certified family bound eps > 0");
  if (!(opts.A_min > 0 && opts.A_max > opts.A_min))
    fail(ErrorKind::Parameter, "find_A needs 0 < A_min < A_max");

  ScalarField h = squared_distance(model);
  double radius = opts.w_radius_fraction * model.tube_radius;

  LocalExtensionParams best;
  for (int attempt = 0; attempt < opts.w_attempts; ++attempt) {
    auto grid = tube_grid(model, radius, opts.grid_n_radial, opts.grid_n_v,
                          opts.grid_n_phase);
    std::vector<std::array<double, 2>> curve;
    double A_pass = -1.0, A_fail_below = -1.0;
    for (int i = 0; i < opts.A_scan; ++i) {
      double t = opts.A_scan == 1 ? 0.0 : double(i) / double(opts.A_scan - 1);
      double A = opts.A_min * std::pow(opts.A_max / opts.A_min, t);
      double margin = surrogate_margin(model, grid, h, A, opts.eps_family,
                                       opts.hessian_step);
      curve.push_back({A, margin});
      if (margin >= opts.eps_prime_target && A_pass < 0) {
        A_pass = A;
        A_fail_below = i == 0 ? -1.0 : curve[i - 1][0];
        break;
      }
    }
    if (A_pass < 0) {
      best.margin_curve = curve;
      best.w_radius = radius;
      radius *= opts.w_radius_shrink;
      continue;
    }
    // bisect for the smallest certified A in (A_fail_below, A_pass]
    double lo = A_fail_below > 0 ? A_fail_below : A_pass;
    double hi = A_pass;
    if (A_fail_below > 0) {
      for (int it = 0; it < opts.bisect_iters; ++it) {
        double mid = 0.5 * (lo + hi);
        double margin = surrogate_margin(model, grid, h, mid, opts.eps_family,
                                         opts.hessian_step);
        curve.push_back({mid, margin});
        (margin >= opts.eps_prime_target ? hi : lo) = mid;
      }
    }
    double A_star = hi;

    // enforce phi_bar <= -C/4: A * w_radius^2 <= C/4
    double final_radius = radius;
    if (opts.C_quarter_bound > 0) {
      double rmax = std::sqrt(opts.C_quarter_bound / (4.0 * A_star));
      if (final_radius > rmax) final_radius = 0.999 * rmax;
    }
    if (final_radius != radius)
      grid = tube_grid(model, final_radius, opts.grid_n_radial, opts.grid_n_v,
                       opts.grid_n_phase);
    double certified = surrogate_margin(model, grid, h, A_star, opts.eps_family,
                                        opts.hessian_step);
    if (certified < opts.eps_prime_target) {
      best.margin_curve = curve;
      best.w_radius = final_radius;
      radius *= opts.w_radius_shrink;
      continue;
    }
    LocalExtensionParams out;
    out.A = A_star;
    out.epsilon_prime = certified;
    out.w_radius = final_radius;
    out.margin_curve = std::move(curve);
    out.certified_samples = (long)grid.size();
    return out;
  }
  std::string msg = "find_A: no A in [" + fmt17(opts.A_min) + ", " + fmt17(opts.A_max) +
                    "] certified eps' target " + fmt17(opts.eps_prime_target) +
                    "; margin curve:";
  for (const auto& pr : best.margin_curve)
    msg += " (A=" + fmt17(pr[0]) + ", margin=" + fmt17(pr[1]) + ")";
  fail(ErrorKind::Construction, msg);
}

// ----------------------------------------------------------- global step ---

NuChoice choose_nu(const ManifoldModel& model, double w_radius,
                   const ScalarField& phi_tilde_1, const ReferenceFunction& ref,
                   double eps_prime, const NuOptions& opts) {
  auto boundary = model.tube_shell_samples(w_radius, opts.n_v, opts.n_phase);
  if (boundary.empty()) fail(ErrorKind::Parameter, "empty boundary sample set");

  double sup_phi1 = -std::numeric_limits<double>::infinity();
  double inf_F = std::numeric_limits<double>::infinity();
  double sup_F = -std::numeric_limits<double>::infinity();
  for (const auto& p : boundary) {
    sup_phi1 = std::max(sup_phi1, phi_tilde_1.evaluate(p));
    double f = ref.F.evaluate(p);
    inf_F = std::min(inf_F, f);
    sup_F = std::max(sup_F, f);
  }
  if (!(sup_F < 0))
    fail(ErrorKind::Precondition, "reference function is not negative near dW");
  double C_dd = -sup_phi1;
  if (!(C_dd > 0))
    fail(ErrorKind::Construction,
         "choose_nu: phi_tilde_1 is not negative on dW (C'' = " + fmt17(C_dd) +
             "); normalization constants were insufficient");

  NuChoice out;
  out.C_dd = C_dd;
  out.inf_F_boundary = inf_F;
  out.boundary_samples = (long)boundary.size();
  out.margin_fraction = opts.margin_fraction;
  out.nu_boundary_max = (0.5 * C_dd) / (-inf_F);
  out.nu_curvature_max = ref.epsilon >= 1.0
                             ? std::numeric_limits<double>::infinity()
                             : (1.0 - eps_prime) / (1.0 - ref.epsilon);
  if (out.nu_curvature_max <= 0)
    fail(ErrorKind::Construction, "choose_nu: reference certification too weak");
  out.nu = (1.0 - opts.margin_fraction) *
           std::min(out.nu_boundary_max, out.nu_curvature_max);
  return out;
}

Branch GluedExtension::active_branch(const ManifoldModel& model, const ChartPoint& p,
                                     double value_gap) const {
  double d = dist_to_V(model, p);
  if (d >= w_radius) return Branch::Outside;
  double a = local_branch.evaluate(p);
  double b = reference_branch.evaluate(p);
  if (value_gap > 0 && std::abs(a - b) < value_gap)
    fail(ErrorKind::Verification, "sample inside the branch-equality collar");
  return a >= b ? Branch::Local : Branch::Reference;
}

GluedExtension glue(const ScalarField& phi_tilde_m, long m, double nu,
                    const ScalarField& F, const ManifoldModel& model,
                    double w_radius, const ScalarField& phi_tilde_1,
                    const NuOptions& opts) {
  if (!(nu > 0)) fail(ErrorKind::Parameter, "glue requires nu > 0");
  GluedExtension g;
  g.m = m;
  g.nu = nu;
  g.w_radius = w_radius;

  const ManifoldModel* mm = &model;
  ScalarField nuF;
  nuF.name = "nuF";
  {
    ScalarField Fcopy = F;
    nuF.evaluate = [Fcopy, nu](const ChartPoint& p) { return nu * Fcopy.evaluate(p); };
    nuF.singular_proximity_sq = F.singular_proximity_sq;
  }
  g.reference_branch = nuF;
  g.local_branch = phi_tilde_m;

  ScalarField field;
  field.name = "Phi_" + std::to_string(m);
  ScalarField local = phi_tilde_m;
  field.evaluate = [mm, local, nuF, w_radius](const ChartPoint& p) {
    double d = dist_to_V(*mm, p);
    if (d < w_radius) return std::max(local.evaluate(p), nuF.evaluate(p));
    return nuF.evaluate(p);
  };
  field.singular_proximity_sq = nuF.singular_proximity_sq;
  g.field = field;

  // boundary margin: nu F must strictly dominate phi_tilde_1 on dW
  auto boundary = model.tube_shell_samples(w_radius, opts.n_v, opts.n_phase);
  double margin = std::numeric_limits<double>::infinity();
  double sup_phi1 = -std::numeric_limits<double>::infinity();
  for (const auto& p : boundary) {
    margin = std::min(margin, nuF.evaluate(p) - phi_tilde_1.evaluate(p));
    sup_phi1 = std::max(sup_phi1, phi_tilde_1.evaluate(p));
  }
  g.boundary_margin = margin;
  g.C_dd = -sup_phi1;
  if (!(margin > 0))
    fail(ErrorKind::Construction,
         "glue: nonpositive boundary margin " + fmt17(margin) + " on dW");
  return g;
}

// ------------------------------------------------------------ verification ---

namespace {

struct VerifyGrid {
  std::vector<ChartPoint> ambient; // grid points (pre-exclusion)
};

std::vector<ChartPoint> ambient_grid(const ManifoldModel& model,
                                     const VerifyOptions& opts) {
  std::vector<ChartPoint> pts;
  for (const auto& chart : model.ambient.charts) {
    GridSpec spec;
    spec.chart = chart.id;
    auto lin = model.V.linear_charts.find(chart.id);
    spec.counts.assign(chart.dim, {opts.grid_v_axis, opts.grid_v_axis});
    if (lin != model.V.linear_charts.end()) {
      for (int idx : lin->second.normal)
        spec.counts[idx] = {opts.grid_normal_axis, opts.grid_normal_axis};
    } else {
      // chart without linear V data: treat the first coordinate as transverse
      spec.counts[0] = {opts.grid_normal_axis, opts.grid_normal_axis};
    }
    spec.margin = 3.0 * opts.hessian_step;
    auto some = sample_grid(chart, spec);
    pts.insert(pts.end(), some.begin(), some.end());
  }
  return pts;
}

} // namespace

ExtensionReport verify_extension(const ManifoldModel& model,
                                 const std::vector<GluedExtension>& sequence,
                                 const std::vector<ScalarField>& phi_m_on_V,
                                 const VerifyOptions& opts) {
  if (sequence.size() < 2)
    fail(ErrorKind::Precondition, "verify_extension needs at least two m values");
  if (phi_m_on_V.size() != sequence.size())
    fail(ErrorKind::Parameter, "phi_m list does not match the glued sequence");

  ExtensionReport rep;
  rep.nu = sequence.front().nu;
  rep.w_radius = sequence.front().w_radius;
  rep.epsilon_prime = opts.eps_prime;

  auto grid = ambient_grid(model, opts);
  rep.grid_note = std::to_string(grid.size()) + " ambient samples; collars: equality " +
                  fmt17(opts.eq_value_collar) + " (value), seam " +
                  fmt17(opts.seam_collar) + ", cut " + fmt17(opts.cut_collar);

  // boundary re-check of the Step-2 inequality inf_dW(nu F) > -C''/2
  {
    const auto& g0 = sequence.front();
    auto boundary = model.tube_shell_samples(g0.w_radius, 8, 12);
    double inf_nuF = std::numeric_limits<double>::infinity();
    double margin = std::numeric_limits<double>::infinity();
    ChartPoint worst = boundary.front();
    for (const auto& p : boundary) {
      double nf = g0.reference_branch.evaluate(p);
      inf_nuF = std::min(inf_nuF, nf);
      double gm = nf - g0.local_branch.evaluate(p);
      if (gm < margin) {
        margin = gm;
        worst = p;
      }
    }
    if (!(inf_nuF > -0.5 * g0.C_dd))
      rep.failures.push_back(
          {worst, "boundary: inf_dW(nu F) = " + fmt17(inf_nuF) +
                      " violates > -C''/2 = " + fmt17(-0.5 * g0.C_dd),
           inf_nuF, g0.m});
    if (!(margin > 0))
      rep.failures.push_back({worst, "boundary: nonpositive margin nuF - phi_tilde_1",
                              margin, g0.m});
  }

  auto excluded_sample = [&](const GluedExtension& g, const ChartPoint& p) {
    double d = dist_to_V(model, p);
    // reference cap seam
    if (opts.cap_radius > 0 && std::abs(d - opts.cap_radius) < opts.seam_collar)
      return true;
    // W boundary collar (branch switch is structural there)
    if (std::abs(d - g.w_radius) < opts.seam_collar) return true;
    // cut-locus / chart-seam pullback through the retraction
    if (d < g.w_radius) {
      ChartPoint v = model.retraction(p);
      if (model.V.cut_locus_proximity_sq &&
          model.V.cut_locus_proximity_sq(v) < opts.cut_collar * opts.cut_collar)
        return true;
      if (model.V.chart_seam_proximity_sq &&
          model.V.chart_seam_proximity_sq(v) < opts.cut_collar * opts.cut_collar)
        return true;
      // branch-equality collar (value gap)
      double a = g.local_branch.evaluate(p);
      double b = g.reference_branch.evaluate(p);
      if (std::abs(a - b) < opts.eq_value_collar) return true;
    }
    return false;
  };

  std::vector<double> prev_values;
  for (size_t k = 0; k < sequence.size(); ++k) {
    const auto& g = sequence[k];
    PerMDiagnostics diag;
    diag.m = g.m;
    diag.min_positivity = std::numeric_limits<double>::infinity();
    diag.max_value = -std::numeric_limits<double>::infinity();
    diag.monotonicity_margin = std::numeric_limits<double>::infinity();

    std::vector<double> values;
    values.reserve(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      const auto& p = grid[i];
      double value = g.field.evaluate(p);
      values.push_back(value);
      diag.max_value = std::max(diag.max_value, value);
      if (value > 1e-12)
        rep.failures.push_back({p, "Phi_m > 0", value, g.m});
      if (!prev_values.empty()) {
        double gap = prev_values[i] - value;
        diag.monotonicity_margin = std::min(diag.monotonicity_margin, gap);
        if (gap < -1e-12)
          rep.failures.push_back({p, "monotonicity: Phi_m > Phi_{m-1}", gap, g.m});
      }
      // branch-wise positivity
      if (excluded_sample(g, p)) {
        ++diag.excluded;
        continue;
      }
      ++diag.samples;
      double d = dist_to_V(model, p);
      const ScalarField* branch = nullptr;
      if (d >= g.w_radius) branch = &g.reference_branch;
      else {
        double a = g.local_branch.evaluate(p);
        double b = g.reference_branch.evaluate(p);
        branch = a >= b ? &g.local_branch : &g.reference_branch;
      }
      HermitianForm G = metric_at(model, p);
      HermitianForm H = complex_hessian(*branch, p, opts.hessian_step);
      double ev = min_generalized_eigenvalue(H, G);
      diag.min_positivity = std::min(diag.min_positivity, ev);
      if (ev < opts.eps_prime)
        rep.failures.push_back({p, "positivity: margin below eps'", ev, g.m});
    }
    prev_values = std::move(values);

    // restriction to V and non-degeneracy
    double rerr = 0.0;
    double max_on_V = -std::numeric_limits<double>::infinity();
    for (const auto& vchart : model.V.intrinsic.charts) {
      GridSpec spec;
      spec.chart = vchart.id;
      int per_axis = std::max(2, (int)std::lround(std::sqrt((double)opts.restriction_samples)));
      spec.counts.assign(vchart.dim, {per_axis, per_axis});
      spec.margin = 0.02 * vchart.min_resolution();
      for (const auto& vp : sample_grid(vchart, spec)) {
        double on_v = phi_m_on_V[k].evaluate(vp);
        double glued = g.field.evaluate(model.V.include(vp));
        if (std::isinf(on_v) && std::isinf(glued)) continue;
        rerr = std::max(rerr, std::abs(on_v - glued));
        max_on_V = std::max(max_on_V, on_v);
      }
    }
    diag.restriction_error = rerr;
    diag.max_on_V = max_on_V;
    if (rerr > 1e-12) {
      rep.failures.push_back(
          {model.V.include(ChartPoint(model.V.intrinsic.charts.front().id,
                                      CVector::Zero(model.v_dim()))),
           "restriction: Phi_m|_V differs from phi_m", rerr, g.m});
    }
    if (max_on_V < opts.nondegeneracy_floor)
      rep.failures.push_back(
          {model.V.include(ChartPoint(model.V.intrinsic.charts.front().id,
                                      CVector::Zero(model.v_dim()))),
           "non-degeneracy: max_V phi_m below floor", max_on_V, g.m});

    rep.total_samples += diag.samples;
    rep.total_excluded += diag.excluded;
    rep.per_m.push_back(diag);
  }

  rep.pass = rep.failures.empty();
  return rep;
}

// --------------------------------------------------------------- pipeline ---

PipelineResult run_extension_pipeline(const ManifoldModel& model, QpshFunction phi,
                                      const PipelineOptions& opts) {
  PipelineResult res;
  std::string stage;
  try {
    // normalization: subtract a constant so that sup phi_1 <= -C/2
    stage = "normalize";
    {
      ScalarField phi1 = phi.regularized_field(model.V.intrinsic, 1);
      StarOptions so = opts.star;
      double sup = -std::numeric_limits<double>::infinity();
      for (const auto& vchart : model.V.intrinsic.charts) {
        GridSpec spec;
        spec.chart = vchart.id;
        spec.counts.assign(vchart.dim, {so.grid_per_axis, so.grid_per_axis});
        spec.margin = 0.02 * vchart.min_resolution();
        for (const auto& vp : sample_grid(vchart, spec))
          sup = std::max(sup, phi1.evaluate(vp));
      }
      phi.shift += std::max(0.0, sup + 0.5 * opts.C);
      res.report.shift = phi.shift;
    }

    stage = "check_star";
    {
      ScalarField phif = phi.field(model.V.intrinsic);
      res.star = check_star(phif, model, opts.epsilon, opts.C, opts.star);
      if (!res.star.ok)
        fail(ErrorKind::Verification, "star assumption failed: " + res.star.failure);
    }

    stage = "regularize";
    res.regularization = regularization_schedule(phi, model, opts.m_schedule,
                                                 opts.epsilon, opts.star);

    stage = "find_A";
    {
      FindAOptions fo = opts.find_a;
      fo.eps_family = 0.5 * opts.epsilon;
      fo.C_quarter_bound = opts.C;
      res.local_params = find_A(model, fo);
    }

    stage = "reference_function";
    ReferenceFunction ref;
    {
      ReferenceOptions ro = opts.reference;
      ro.eps_target = std::max(ro.eps_target, res.local_params.epsilon_prime);
      ro.cap_radius = 0.5 * (res.local_params.w_radius + model.tube_radius);
      ref = find_reference_c(model, opts.reference_c_candidates, ro);
      res.reference_c = ref.c;
      res.reference_eps = ref.epsilon;
    }

    stage = "choose_nu";
    std::vector<ScalarField> phi_on_V;
    for (long m : opts.m_schedule)
      phi_on_V.push_back(regularize(phi, model.V.intrinsic, m));
    ScalarField phi_tilde_1 = local_extend(phi_on_V.front(), model, res.local_params.A);
    res.nu_choice = choose_nu(model, res.local_params.w_radius, phi_tilde_1, ref,
                              res.local_params.epsilon_prime, opts.nu);
    double nu_used = res.nu_choice.nu * opts.nu_override_factor;

    stage = "glue";
    for (size_t k = 0; k < opts.m_schedule.size(); ++k) {
      ScalarField tilde = local_extend(phi_on_V[k], model, res.local_params.A);
      res.glued.push_back(glue(tilde, opts.m_schedule[k], nu_used, ref.F, model,
                               res.local_params.w_radius, phi_tilde_1, opts.nu));
    }

    stage = "verify_extension";
    {
      VerifyOptions vo = opts.verify;
      vo.eps_prime = res.local_params.epsilon_prime;
      vo.cap_radius = ref.cap_radius;
      // non-degeneracy floor: the limit candidate restricted to V dominates phi
      double floor = -std::numeric_limits<double>::infinity();
      ScalarField phif = phi.field(model.V.intrinsic);
      for (const auto& vchart : model.V.intrinsic.charts) {
        GridSpec spec;
        spec.chart = vchart.id;
        spec.counts.assign(vchart.dim, {7, 7});
        spec.margin = 0.02 * vchart.min_resolution();
        for (const auto& vp : sample_grid(vchart, spec))
          floor = std::max(floor, phif.evaluate(vp));
      }
      vo.nondegeneracy_floor = floor - 1e-9;
      res.report = verify_extension(model, res.glued, phi_on_V, vo);
      res.report.A = res.local_params.A;
      res.report.epsilon_prime = res.local_params.epsilon_prime;
      res.report.w_radius = res.local_params.w_radius;
      res.report.nu = nu_used;
      res.report.c_F = ref.c;
      res.report.K_F = ref.K;
      res.report.eps_F = ref.epsilon;
      res.report.cap_radius = ref.cap_radius;
      res.report.epsilon = opts.epsilon;
      res.report.C = opts.C;
      res.report.shift = phi.shift;
      if (!res.report.pass)
        fail(ErrorKind::Verification,
             "extension verification reported " +
                 std::to_string(res.report.failures.size()) + " failing samples");
    }

    res.ok = true;
    return res;
  } catch (const Error& e) {
    res.ok = false;
    res.failed_stage = stage;
    res.failure_message = std::string(error_kind_name(e.kind())) + ": " + e.what();
    if (e.kind() == ErrorKind::Config) throw; // configuration errors propagate
    return res;
  }
}

} // namespace qpx
