#include "qpx/report.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "qpx/distance.hpp"
#include "qpx/geometry.hpp"

namespace qpx {

namespace {

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

Json point_json(const ChartPoint& p) {
  Json coords = Json::array();
  for (int i = 0; i < p.dim(); ++i)
    coords.push_back({p.coords[i].real(), p.coords[i].imag()});
  return Json{{"chart", p.chart}, {"coords", coords}};
}

} // namespace

Json model_check_report(const ManifoldModel& model, const std::vector<ModelCheck>& checks,
                        bool include_timestamp) {
  Json j;
  j["report"] = "model-validation";
  if (include_timestamp) j["generated_at"] = now_utc();
  j["model"] = model.kind;
  j["tube_radius"] = model.tube_radius;
  bool all = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    all = all && c.pass;
    list.push_back({{"name", c.name},
                    {"pass", c.pass},
                    {"worst", c.worst},
                    {"detail", c.detail}});
  }
  j["checks"] = list;
  j["pass"] = all;
  return j;
}

Json pipeline_report(const ManifoldModel& model, const PipelineResult& result,
                     bool include_timestamp) {
  Json j;
  j["report"] = "extension-run";
  if (include_timestamp) j["generated_at"] = now_utc();
  j["model"] = model.kind;
  j["pass"] = result.ok;
  j["failed_stage"] = result.failed_stage;
  j["failure_message"] = result.failure_message;

  j["constants"] = {{"A", result.report.A},
                    {"epsilon_prime", result.report.epsilon_prime},
                    {"nu", result.report.nu},
                    {"w_radius", result.report.w_radius},
                    {"c_F", result.report.c_F},
                    {"K_F", result.report.K_F},
                    {"eps_F", result.report.eps_F},
                    {"cap_radius", result.report.cap_radius},
                    {"epsilon", result.report.epsilon},
                    {"C", result.report.C},
                    {"normalization_shift", result.report.shift}};

  j["star"] = {{"ok", result.star.ok},
               {"min_margin", result.star.certificate.min_margin},
               {"sup_phi", result.star.certificate.sup_phi},
               {"samples", result.star.certificate.samples},
               {"grid", result.star.certificate.grid_note},
               {"failure", result.star.failure}};

  Json reg = Json::array();
  for (const auto& row : result.regularization.rows)
    reg.push_back({{"m", row.m},
                   {"margin", row.margin},
                   {"deficit", row.deficit},
                   {"eps_m", row.eps_m},
                   {"certified_bound", result.regularization.epsilon - row.eps_m},
                   {"sup_phi_m", row.sup_phi_m},
                   {"min_gap_prev", row.min_gap_prev},
                   {"min_gap_phi", row.min_gap_phi}});
  j["regularization"] = reg;

  j["find_A"] = {{"A", result.local_params.A},
                 {"epsilon_prime", result.local_params.epsilon_prime},
                 {"w_radius", result.local_params.w_radius},
                 {"certified_samples", result.local_params.certified_samples}};
  Json curve = Json::array();
  for (const auto& pr : result.local_params.margin_curve)
    curve.push_back({pr[0], pr[1]});
  j["find_A"]["margin_curve"] = curve;

  j["reference"] = {{"c", result.reference_c}, {"epsilon", result.reference_eps}};
  j["nu"] = {{"nu", result.nu_choice.nu},
             {"C_dd", result.nu_choice.C_dd},
             {"inf_F_boundary", result.nu_choice.inf_F_boundary},
             {"nu_boundary_max", result.nu_choice.nu_boundary_max},
             {"nu_curvature_max", result.nu_choice.nu_curvature_max},
             {"boundary_samples", result.nu_choice.boundary_samples}};

  Json per_m = Json::array();
  for (const auto& d : result.report.per_m)
    per_m.push_back({{"m", d.m},
                     {"min_positivity", d.min_positivity},
                     {"max_value", d.max_value},
                     {"restriction_error", d.restriction_error},
                     {"monotonicity_margin", d.monotonicity_margin},
                     {"max_on_V", d.max_on_V},
                     {"samples", d.samples},
                     {"excluded", d.excluded}});
  j["per_m"] = per_m;
  j["grid"] = result.report.grid_note;
  j["total_samples"] = result.report.total_samples;
  j["total_excluded"] = result.report.total_excluded;

  Json fails = Json::array();
  size_t cap = std::min<size_t>(result.report.failures.size(), 25);
  for (size_t i = 0; i < cap; ++i) {
    const auto& f = result.report.failures[i];
    fails.push_back({{"check", f.check},
                     {"value", f.value},
                     {"m", f.m},
                     {"point", point_json(f.point)}});
  }
  j["failures"] = fails;
  j["failure_count"] = result.report.failures.size();
  return j;
}

std::string render_report(const Json& report) { return report.dump(2) + "\n"; }

void write_report(const Json& report, const std::string& path) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Config, "cannot write report to '" + path + "'");
  out << render_report(report);
}

std::string report_comparison_key(const Json& report) {
  Json copy = report;
  copy.erase("generated_at");
  return copy.dump(2);
}

void write_extension_csv(const ManifoldModel& model,
                         const std::vector<GluedExtension>& glued,
                         const VerifyOptions& opts, const std::string& path) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Config, "cannot write CSV to '" + path + "'");

  out << "chart";
  int dim = model.ambient_dim();
  for (int i = 0; i < dim; ++i) out << ",re" << i << ",im" << i;
  out << ",h";
  for (const auto& g : glued) out << ",phi_" << g.m;
  out << ",min_eigenvalue,active_branch\n";

  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };

  for (const auto& chart : model.ambient.charts) {
    GridSpec spec;
    spec.chart = chart.id;
    auto lin = model.V.linear_charts.find(chart.id);
    spec.counts.assign(chart.dim, {opts.grid_v_axis, opts.grid_v_axis});
    if (lin != model.V.linear_charts.end())
      for (int idx : lin->second.normal)
        spec.counts[idx] = {opts.grid_normal_axis, opts.grid_normal_axis};
    spec.margin = 3.0 * opts.hessian_step;
    for (const auto& p : sample_grid(chart, spec)) {
      double d = model.distance_to_V ? model.distance_to_V(p)
                                     : nearest_point(model, p).distance;
      out << chart.id;
      for (int i = 0; i < dim; ++i)
        out << "," << num(p.coords[i].real()) << "," << num(p.coords[i].imag());
      out << "," << num(d * d);
      for (const auto& g : glued) out << "," << num(g.field.evaluate(p));
      const auto& g = glued.back();
      std::string branch = "reference";
      double min_ev = std::numeric_limits<double>::quiet_NaN();
      if (d < g.w_radius &&
          g.local_branch.evaluate(p) >= g.reference_branch.evaluate(p))
        branch = "local";
      if (d >= g.w_radius) branch = "outside";
      bool excluded = std::abs(d - g.w_radius) < opts.seam_collar ||
                      (opts.cap_radius > 0 &&
                       std::abs(d - opts.cap_radius) < opts.seam_collar);
      if (!excluded && d < g.w_radius) {
        double a = g.local_branch.evaluate(p), b = g.reference_branch.evaluate(p);
        excluded = std::abs(a - b) < opts.eq_value_collar;
      }
      if (!excluded) {
        try {
          const ScalarField* br = (branch == "local") ? &g.local_branch
                                                      : &g.reference_branch;
          HermitianForm G = metric_at(model, p);
          HermitianForm H = complex_hessian(*br, p, opts.hessian_step);
          min_ev = min_generalized_eigenvalue(H, G);
        } catch (const Error&) {
          // leave NaN for refused samples
        }
      }
      out << "," << num(min_ev) << "," << branch << "\n";
    }
  }
}

} // namespace qpx
