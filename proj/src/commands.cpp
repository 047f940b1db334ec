#include "qpx/commands.hpp"

#include <filesystem>

#include "qpx/distance.hpp"
#include "qpx/geometry.hpp"
#include "qpx/report.hpp"

namespace qpx {

namespace {

int status_for(const Error& e) {
  return e.kind() == ErrorKind::Config ? kStatusConfigError : kStatusVerificationFailed;
}

std::vector<ChartPoint> v_sample_points(const ManifoldModel& model, int per_chart) {
  std::vector<ChartPoint> pts;
  std::vector<Exclusion> excl;
  if (model.V.cut_locus_proximity_sq)
    excl.push_back({model.V.cut_locus_proximity_sq, 0.08, "cut"});
  if (model.V.chart_seam_proximity_sq)
    excl.push_back({model.V.chart_seam_proximity_sq, 0.08, "seam"});
  for (const auto& vchart : model.V.intrinsic.charts) {
    GridSpec spec;
    spec.chart = vchart.id;
    int n = std::max(3, (int)std::lround(std::sqrt((double)per_chart)));
    spec.counts.assign(vchart.dim, {n, n});
    spec.margin = 0.15 * vchart.min_resolution();
    auto some = sample_grid(vchart, spec, excl);
    for (size_t i = 0; i < some.size() && pts.size() < size_t(per_chart) * 2; ++i)
      pts.push_back(some[i]);
  }
  return pts;
}

} // namespace

int cmd_validate_model(const CommandOptions& opts) {
  std::ostream& out = *opts.out;
  try {
    RunConfig cfg = load_config(opts.config_path);
    apply_overrides(cfg, opts.overrides);
    try {
      ManifoldModel model = build_model_from_config(cfg);
      auto checks = validate_model(model);
      Json rep = model_check_report(model, checks);
      write_report(rep, cfg.out_dir + "/model_validation.json");
      out << render_report(rep);
      for (const auto& c : checks)
        if (!c.pass) return kStatusVerificationFailed;
      return kStatusOk;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Parameter) {
        out << "configuration error: " << e.what() << "\n";
        return kStatusConfigError;
      }
      out << "model validation failed: " << e.what() << "\n";
      return kStatusVerificationFailed;
    }
  } catch (const Error& e) {
    out << "configuration error: " << e.what() << "\n";
    return status_for(e);
  }
}

int cmd_verify_hessian(const CommandOptions& opts) {
  std::ostream& out = *opts.out;
  try {
    RunConfig cfg = load_config(opts.config_path);
    apply_overrides(cfg, opts.overrides);
    ManifoldModel model = build_model_from_config(cfg);

    const double step = cfg.hessian_step;
    const double tol_off = cfg.tolerance_override > 0 ? cfg.tolerance_override : 1e-4;
    const double tol_spread = 1e-3;
    const double tol_jac = cfg.tolerance_override > 0 ? cfg.tolerance_override : 1e-4;
    const double tol_metric = 1e-4;

    Json rep;
    rep["report"] = "hessian-verification";
    rep["model"] = model.kind;
    rep["hessian_step"] = step;
    Json rows = Json::array();
    bool ok = true;

    auto pts = v_sample_points(model, 9);
    if (pts.size() < 5)
      fail(ErrorKind::Parameter, "fewer than 5 usable V sample points");

    for (const auto& vp : pts) {
      ChartPoint amb = model.V.include(vp);
      Json row;
      row["point"] = {{"chart", amb.chart},
                      {"coords",
                       {{amb.coords[0].real(), amb.coords[0].imag()},
                        {amb.coords[1].real(), amb.coords[1].imag()}}}};
      HessianBlockReport hb = hessian_h_on_V(model, amb, step);
      row["max_offblock"] = hb.max_offblock;
      row["normal_constant"] = hb.normal_constant;
      row["normal_spread"] = hb.normal_spread;
      bool pass = hb.max_offblock <= tol_off && hb.normal_spread <= tol_spread;
      if (model.kind == "flat2d") pass = pass && std::abs(hb.normal_constant - 1.0) <= 1e-5;

      RMatrix J = nearest_point_jacobian(model, amb, step);
      RMatrix expected = RMatrix::Zero(J.rows(), J.cols());
      for (int i = 0; i < J.rows(); ++i) expected(i, i) = 1.0;
      double jerr = (J - expected).cwiseAbs().maxCoeff();
      row["jacobian_error"] = jerr;
      pass = pass && jerr <= tol_jac;

      row["pass"] = pass;
      ok = ok && pass;
      rows.push_back(row);
    }
    rep["v_points"] = rows;

    // metric consistency: finite-difference Hessian of the potential vs the
    // model's closed-form metric, at generic ambient samples.
    {
      double worst = 0.0;
      ScalarField pot;
      const ManifoldModel* m = &model;
      pot.name = "potential";
      pot.evaluate = [m](const ChartPoint& p) { return m->ambient.potential(p); };
      for (const auto& chart : model.ambient.charts) {
        GridSpec spec;
        spec.chart = chart.id;
        spec.counts.assign(chart.dim, {3, 3});
        spec.margin = 0.2 * chart.min_resolution();
        for (const auto& p : sample_grid(chart, spec)) {
          HermitianForm H = complex_hessian(pot, p, step);
          CMatrix g = model.ambient.metric(p);
          worst = std::max(worst, (H.entries - g).cwiseAbs().maxCoeff());
        }
      }
      rep["metric_fd_error"] = worst;
      if (worst > tol_metric) {
        ok = false;
        rep["metric_fd_diagnostic"] =
            "finite-difference metric differs from the closed form by " +
            std::to_string(worst) + " (tolerance " + std::to_string(tol_metric) +
            "); the step " + std::to_string(step) + " is too coarse for this model";
      }
    }

    rep["pass"] = ok;
    write_report(rep, cfg.out_dir + "/hessian_verification.json");
    out << render_report(rep);
    return ok ? kStatusOk : kStatusVerificationFailed;
  } catch (const Error& e) {
    out << (e.kind() == ErrorKind::Config ? "configuration error: " : "error: ")
        << e.what() << "\n";
    return status_for(e);
  }
}

int cmd_extend(const CommandOptions& opts) {
  std::ostream& out = *opts.out;
  try {
    RunConfig cfg = load_config(opts.config_path);
    apply_overrides(cfg, opts.overrides);
    ManifoldModel model = build_model_from_config(cfg);
    QpshFunction phi = build_phi_from_config(cfg, model);

    PipelineResult result = run_extension_pipeline(model, phi, cfg.pipeline);
    Json rep = pipeline_report(model, result);
    write_report(rep, cfg.out_dir + "/extension_report.json");
    if (!result.glued.empty()) {
      VerifyOptions vo = cfg.pipeline.verify;
      vo.cap_radius = result.report.cap_radius;
      write_extension_csv(model, result.glued, vo, cfg.out_dir + "/extension_grid.csv");
    }
    out << render_report(rep);
    return result.ok ? kStatusOk : kStatusVerificationFailed;
  } catch (const Error& e) {
    out << (e.kind() == ErrorKind::Config ? "configuration error: " : "error: ")
        << e.what() << "\n";
    return status_for(e);
  }
}

} // namespace qpx
