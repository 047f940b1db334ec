#include "qpx/qpsh.hpp"

#include <cmath>

#include "qpx/geometry.hpp"

namespace qpx {

namespace {

const QpshFunction::ChartData& chart_data(const QpshFunction& phi,
                                          const std::string& chart) {
  auto it = phi.charts.find(chart);
  if (it == phi.charts.end())
    fail(ErrorKind::Domain, "qpsh function has no data for chart '" + chart + "'");
  return it->second;
}

double eval_core(const QpshFunction& phi, const Manifold& V, const ChartPoint& p_in,
                 double mollify) {
  ChartPoint p = V.canonicalize ? V.canonicalize(p_in) : p_in;
  const auto& data = chart_data(phi, p.chart);
  double value = -phi.shift;
  if (data.smooth) {
    Complex s = data.smooth->eval(p.coords);
    if (std::abs(s.imag()) > 1e-9 * std::max(1.0, std::abs(s.real())))
      fail(ErrorKind::Config, "smooth part of qpsh function is not real-valued");
    value += s.real();
  }
  if (phi.has_singular_part()) {
    double q = mollify;
    for (const auto& f : data.f) q += std::norm(f->eval(p.coords));
    if (q <= 0.0) return kNegInf;
    value += phi.c * std::log(q);
  }
  return value;
}

} // namespace

double QpshFunction::evaluate(const Manifold& V, const ChartPoint& p) const {
  return eval_core(*this, V, p, 0.0);
}

double QpshFunction::evaluate_regularized(const Manifold& V, const ChartPoint& p,
                                          long m) const {
  if (m <= 0) fail(ErrorKind::Parameter, "regularization index m must be positive");
  if (!has_singular_part()) return evaluate(V, p);
  return eval_core(*this, V, p, 1.0 / double(m));
}

double QpshFunction::zero_proximity_sq(const Manifold& V, const ChartPoint& p_in) const {
  if (!has_singular_part()) return std::numeric_limits<double>::infinity();
  ChartPoint p = V.canonicalize ? V.canonicalize(p_in) : p_in;
  const auto& data = chart_data(*this, p.chart);
  if (data.f.empty()) return std::numeric_limits<double>::infinity();
  double q = 0.0;
  for (const auto& f : data.f) q += std::norm(f->eval(p.coords));
  return q;
}

ScalarField QpshFunction::field(const Manifold& V, double smoothness_margin) const {
  QpshFunction self = *this;
  const Manifold* vm = &V;
  ScalarField out;
  out.name = "phi";
  out.evaluate = [self, vm](const ChartPoint& p) { return self.evaluate(*vm, p); };
  out.singular_proximity_sq = [self, vm](const ChartPoint& p) {
    return self.zero_proximity_sq(*vm, p);
  };
  out.smoothness_margin = smoothness_margin;
  return out;
}

ScalarField QpshFunction::regularized_field(const Manifold& V, long m) const {
  QpshFunction self = *this;
  const Manifold* vm = &V;
  ScalarField out;
  out.name = "phi_m=" + std::to_string(m);
  out.evaluate = [self, vm, m](const ChartPoint& p) {
    return self.evaluate_regularized(*vm, p, m);
  };
  out.smoothness_margin = 0.0;
  return out;
}

ScalarField regularize(const QpshFunction& phi, const Manifold& V, long m) {
  if (m <= 0) fail(ErrorKind::Parameter, "regularization index m must be positive");
  if (!phi.analytic_form)
    fail(ErrorKind::Unsupported,
         "monotone regularization requires the analytic-singularity form");
  return phi.regularized_field(V, m);
}

namespace {

std::vector<Exclusion> v_grid_exclusions(const ScalarField& phi,
                                         const ManifoldModel& model,
                                         const StarOptions& opts) {
  std::vector<Exclusion> excl;
  if (phi.singular_proximity_sq)
    excl.push_back({phi.singular_proximity_sq, opts.singular_collar, "singular"});
  if (model.V.cut_locus_proximity_sq)
    excl.push_back({model.V.cut_locus_proximity_sq, opts.cut_collar, "cut-locus"});
  if (model.V.chart_seam_proximity_sq)
    excl.push_back({model.V.chart_seam_proximity_sq, opts.cut_collar, "chart-seam"});
  return excl;
}

std::vector<ChartPoint> v_certification_grid(const ScalarField& phi,
                                             const ManifoldModel& model,
                                             const StarOptions& opts) {
  std::vector<ChartPoint> pts;
  auto excl = v_grid_exclusions(phi, model, opts);
  for (const auto& chart : model.V.intrinsic.charts) {
    GridSpec spec;
    spec.chart = chart.id;
    spec.counts.assign(chart.dim, {opts.grid_per_axis, opts.grid_per_axis});
    spec.margin = 3.0 * opts.hessian_step;
    auto some = sample_grid(chart, spec, excl);
    pts.insert(pts.end(), some.begin(), some.end());
  }
  if (pts.empty()) fail(ErrorKind::Parameter, "star grid is empty after exclusions");
  return pts;
}

} // namespace

StarCheckResult check_star(const ScalarField& phi, const ManifoldModel& model,
                           double epsilon, double C, const StarOptions& opts) {
  if (!(epsilon > 0 && C > 0))
    fail(ErrorKind::Parameter, "star parameters epsilon and C must be positive");
  StarCheckResult res;
  auto pts = v_certification_grid(phi, model, opts);

  double min_margin = std::numeric_limits<double>::infinity();
  double sup_phi = -std::numeric_limits<double>::infinity();
  ChartPoint worst_margin = pts.front(), worst_sup = pts.front();
  for (const auto& p : pts) {
    CMatrix gv = model.V.intrinsic.metric(p);
    HermitianForm G = make_hermitian(p, gv);
    HermitianForm H = complex_hessian(phi, p, opts.hessian_step);
    double ev = min_generalized_eigenvalue(H, G);
    if (ev < min_margin) {
      min_margin = ev;
      worst_margin = p;
    }
    double value = phi.evaluate(p);
    if (value > sup_phi) {
      sup_phi = value;
      worst_sup = p;
    }
  }

  res.certificate.epsilon = epsilon;
  res.certificate.C = C;
  res.certificate.min_margin = min_margin;
  res.certificate.sup_phi = sup_phi;
  res.certificate.samples = (long)pts.size();
  res.certificate.grid_note =
      std::to_string(pts.size()) + " samples, collars (singular " +
      std::to_string(opts.singular_collar) + ", cut " + std::to_string(opts.cut_collar) +
      ")";

  if (min_margin < 0.5 * epsilon) {
    res.ok = false;
    res.worst_sample = worst_margin;
    res.failure = "curvature margin " + std::to_string(min_margin) +
                  " < epsilon/2 = " + std::to_string(0.5 * epsilon);
    return res;
  }
  if (!(sup_phi <= -0.5 * C)) {
    res.ok = false;
    res.worst_sample = worst_sup;
    res.failure = "sup phi = " + std::to_string(sup_phi) +
                  " violates phi <= -C/2 = " + std::to_string(-0.5 * C);
    return res;
  }
  res.ok = true;
  return res;
}

RegularizationTable regularization_schedule(const QpshFunction& phi,
                                            const ManifoldModel& model,
                                            const std::vector<long>& schedule,
                                            double epsilon, const StarOptions& opts) {
  if (schedule.size() < 2)
    fail(ErrorKind::Parameter, "regularization schedule needs at least two indices");
  for (size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1])
      fail(ErrorKind::Parameter, "regularization schedule must be strictly increasing");

  ScalarField phi_field = phi.field(model.V.intrinsic);
  auto pts = v_certification_grid(phi_field, model, opts);

  RegularizationTable table;
  table.epsilon = epsilon;
  table.samples = (long)pts.size();

  std::vector<double> prev_values;
  std::vector<double> phi_values;
  phi_values.reserve(pts.size());
  for (const auto& p : pts) phi_values.push_back(phi_field.evaluate(p));

  for (size_t k = 0; k < schedule.size(); ++k) {
    long m = schedule[k];
    ScalarField fm = regularize(phi, model.V.intrinsic, m);
    RegularizationRow row;
    row.m = m;
    double min_margin = std::numeric_limits<double>::infinity();
    double sup = -std::numeric_limits<double>::infinity();
    double gap_prev = std::numeric_limits<double>::infinity();
    double gap_phi = std::numeric_limits<double>::infinity();
    std::vector<double> values;
    values.reserve(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      CMatrix gv = model.V.intrinsic.metric(p);
      double ev = min_generalized_eigenvalue(complex_hessian(fm, p, opts.hessian_step),
                                             make_hermitian(p, gv));
      min_margin = std::min(min_margin, ev);
      double v = fm.evaluate(p);
      values.push_back(v);
      sup = std::max(sup, v);
      gap_phi = std::min(gap_phi, v - phi_values[i]);
      if (!prev_values.empty()) gap_prev = std::min(gap_prev, prev_values[i] - v);
    }
    row.margin = min_margin;
    row.deficit = std::max(0.0, epsilon - min_margin);
    row.sup_phi_m = sup;
    row.min_gap_phi = gap_phi;
    row.min_gap_prev = prev_values.empty() ? 0.0 : gap_prev;
    table.rows.push_back(row);
    prev_values = std::move(values);
  }

  // eps_m: decreasing envelope of the measured deficits plus a strictly
  // decreasing schedule term; margin_m >= epsilon - eps_m holds by
  // construction at every m.
  double tail = 0.0;
  for (size_t k = table.rows.size(); k-- > 0;) {
    tail = std::max(tail, table.rows[k].deficit);
    table.rows[k].eps_m = tail + epsilon / (2.0 * double(table.rows[k].m + 1));
  }
  return table;
}

} // namespace qpx
