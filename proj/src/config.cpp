#include "qpx/config.hpp"

#include <cmath>
#include <fstream>

namespace qpx {

namespace {

Complex complex_from(const Json& j, Complex fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2)
    return Complex(j[0].get<double>(), j[1].get<double>());
  fail(ErrorKind::Config, "expected a number or [re, im] pair");
}

double num_or(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail(ErrorKind::Config, std::string(key) + " must be a number");
  return j[key].get<double>();
}

} // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::Config, "config parse error in '" + path + "': " + e.what());
  }
  return parse_config(j, path);
}

RunConfig parse_config(const Json& j, const std::string& source) {
  RunConfig cfg;
  cfg.raw = j;
  cfg.source_path = source;
  if (!j.contains("model") || !j["model"].is_object())
    fail(ErrorKind::Config, "config needs a 'model' table");
  if (!j["model"].contains("kind"))
    fail(ErrorKind::Config, "model table needs a 'kind'");
  cfg.model_kind = j["model"]["kind"].get<std::string>();

  if (j.contains("output") && j["output"].contains("dir"))
    cfg.out_dir = j["output"]["dir"].get<std::string>();

  const Json pipeline = j.value("pipeline", Json::object());
  auto& po = cfg.pipeline;
  if (pipeline.contains("m_schedule")) {
    po.m_schedule.clear();
    for (const auto& v : pipeline["m_schedule"]) po.m_schedule.push_back(v.get<long>());
    if (po.m_schedule.size() < 2)
      fail(ErrorKind::Config, "m_schedule needs at least two entries");
    for (size_t i = 1; i < po.m_schedule.size(); ++i)
      if (po.m_schedule[i] <= po.m_schedule[i - 1])
        fail(ErrorKind::Config, "m_schedule must be strictly increasing");
  }
  if (j.contains("star")) {
    po.epsilon = num_or(j["star"], "epsilon", po.epsilon);
    po.C = num_or(j["star"], "C", po.C);
    if (!(po.epsilon > 0) || !(po.C > 0))
      fail(ErrorKind::Config, "star epsilon and C must be positive");
  }
  po.find_a.eps_prime_target = num_or(pipeline, "eps_prime_target",
                                      po.find_a.eps_prime_target);
  if (pipeline.contains("A_range")) {
    po.find_a.A_min = pipeline["A_range"][0].get<double>();
    po.find_a.A_max = pipeline["A_range"][1].get<double>();
    if (!(po.find_a.A_min > 0 && po.find_a.A_max > po.find_a.A_min))
      fail(ErrorKind::Config, "A_range must satisfy 0 < A_min < A_max");
  }
  po.find_a.w_radius_fraction =
      num_or(pipeline, "w_radius_fraction", po.find_a.w_radius_fraction);
  if (pipeline.contains("reference_c")) {
    po.reference_c_candidates.clear();
    for (const auto& v : pipeline["reference_c"])
      po.reference_c_candidates.push_back(v.get<double>());
  }
  po.reference.eps_target = num_or(pipeline, "reference_eps_target",
                                   po.reference.eps_target);
  po.nu.margin_fraction = num_or(pipeline, "nu_margin", po.nu.margin_fraction);
  po.nu_override_factor = num_or(pipeline, "nu_override_factor", 1.0);
  if (!(po.nu_override_factor > 0))
    fail(ErrorKind::Config, "nu_override_factor must be positive");

  cfg.hessian_step = num_or(pipeline, "hessian_step", cfg.hessian_step);
  if (!(cfg.hessian_step > 0)) fail(ErrorKind::Config, "hessian_step must be positive");
  po.star.hessian_step = cfg.hessian_step;
  po.find_a.hessian_step = cfg.hessian_step;
  po.verify.hessian_step = cfg.hessian_step;
  po.reference.hessian_step = cfg.hessian_step;

  const Json collars = pipeline.value("collars", Json::object());
  po.verify.eq_value_collar = num_or(collars, "equality", po.verify.eq_value_collar);
  po.verify.seam_collar = num_or(collars, "seam", po.verify.seam_collar);
  po.verify.cut_collar = num_or(collars, "cut", po.verify.cut_collar);
  po.star.singular_collar = num_or(collars, "singular", po.star.singular_collar);
  po.star.cut_collar = num_or(collars, "cut", po.star.cut_collar);
  po.reference.collar_v = num_or(collars, "reference_v", po.reference.collar_v);
  po.reference.collar_seam = num_or(collars, "seam", po.reference.collar_seam);

  const Json grid = pipeline.value("grid", Json::object());
  po.verify.grid_normal_axis =
      (int)num_or(grid, "normal_axis", po.verify.grid_normal_axis);
  po.verify.grid_v_axis = (int)num_or(grid, "v_axis", po.verify.grid_v_axis);
  po.star.grid_per_axis = (int)num_or(grid, "star_axis", po.star.grid_per_axis);
  po.reference.grid_per_axis =
      (int)num_or(grid, "reference_axis", po.reference.grid_per_axis);

  cfg.jitter_seed = (uint64_t)num_or(pipeline, "jitter_seed", 0.0);
  return cfg;
}

ManifoldModel build_model_from_config(const RunConfig& cfg) {
  const Json& m = cfg.raw["model"];
  if (cfg.model_kind == "flat2d") {
    FlatModelParams p;
    p.a1 = num_or(m, "a1", p.a1);
    p.a2 = num_or(m, "a2", p.a2);
    p.box = num_or(m, "box", p.box);
    p.tube_radius = num_or(m, "tube_radius", p.tube_radius);
    p.positivity_threshold = num_or(m, "positivity_threshold", p.positivity_threshold);
    return build_flat_model(p);
  }
  if (cfg.model_kind == "product") {
    ProductModelParams p;
    if (m.contains("first")) {
      p.first.kind = m["first"].value("kind", "p1");
      p.first.tau = complex_from(m["first"].value("tau", Json()), p.first.tau);
    }
    if (m.contains("second")) {
      p.second.kind = m["second"].value("kind", "torus");
      p.second.tau = complex_from(m["second"].value("tau", Json()), p.second.tau);
    }
    if (p.second.kind == "torus" && !(p.second.tau.imag() > 0))
      fail(ErrorKind::Config, "model invariant Im(tau) > 0 violated");
    p.tube_radius = num_or(m, "tube_radius", p.tube_radius);
    p.positivity_threshold = num_or(m, "positivity_threshold", p.positivity_threshold);
    return build_product_model(p);
  }
  if (cfg.model_kind == "serre") {
    SerreParameters p;
    p.tau = complex_from(m.value("tau", Json()), p.tau);
    if (!(p.tau.imag() > 0))
      fail(ErrorKind::Config, "model invariant Im(tau) > 0 violated");
    p.kappa = num_or(m, "kappa", p.kappa);
    p.sigma_tube = num_or(m, "sigma_tube", p.sigma_tube);
    p.box = num_or(m, "box", p.box);
    p.positivity_threshold = num_or(m, "positivity_threshold", p.positivity_threshold);
    return build_serre_model(p);
  }
  fail(ErrorKind::Config, "unknown model kind '" + cfg.model_kind + "'");
}

QpshFunction build_phi_from_config(const RunConfig& cfg, const ManifoldModel& model) {
  if (!cfg.raw.contains("phi"))
    fail(ErrorKind::Config, "config needs a 'phi' table for the extension run");
  const Json& pj = cfg.raw["phi"];
  QpshFunction phi;
  phi.c = num_or(pj, "c", 0.0);
  if (phi.c < 0) fail(ErrorKind::Config, "phi.c must be >= 0");

  Complex tau(0, 1);
  if (cfg.raw["model"].contains("tau"))
    tau = complex_from(cfg.raw["model"]["tau"], tau);
  else if (cfg.raw["model"].contains("second") &&
           cfg.raw["model"]["second"].contains("tau"))
    tau = complex_from(cfg.raw["model"]["second"]["tau"], tau);

  const Json& charts = pj.value("charts", Json::object());
  for (const auto& vchart : model.V.intrinsic.charts) {
    if (!charts.contains(vchart.id)) continue;
    const Json& cj = charts[vchart.id];
    ExprContext ctx;
    ctx.tau = tau;
    if (cj.contains("coords")) {
      for (const auto& n : cj["coords"]) ctx.coord_names.push_back(n.get<std::string>());
    } else {
      // default single-coordinate names per model kind
      ctx.coord_names = {vchart.id == "va" || vchart.id == "vb" ? "w" : "z"};
    }
    QpshFunction::ChartData data;
    if (cj.contains("smooth")) data.smooth = parse_expression(cj["smooth"].get<std::string>(), ctx);
    if (cj.contains("f")) {
      for (const auto& fj : cj["f"]) {
        ExprPtr e = parse_expression(fj.get<std::string>(), ctx);
        if (!e->holomorphic())
          fail(ErrorKind::Config, "singular-part expression is not holomorphic: " +
                                      fj.get<std::string>());
        data.f.push_back(e);
      }
    }
    phi.charts[vchart.id] = std::move(data);
  }
  if (phi.charts.empty())
    fail(ErrorKind::Config, "phi.charts covers no chart of V");
  return phi;
}

void apply_overrides(RunConfig& cfg, const CliOverrides& ov) {
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (!ov.m_schedule.empty()) {
    if (ov.m_schedule.size() < 2)
      fail(ErrorKind::Config, "m-schedule override needs at least two entries");
    for (size_t i = 1; i < ov.m_schedule.size(); ++i)
      if (ov.m_schedule[i] <= ov.m_schedule[i - 1])
        fail(ErrorKind::Config, "m-schedule override must be strictly increasing");
    cfg.pipeline.m_schedule = ov.m_schedule;
  }
  if (ov.grid_spacing > 0) {
    // spacing in chart units -> counts on the transverse axes
    int n = std::max(4, (int)std::lround(2.0 / ov.grid_spacing));
    cfg.pipeline.verify.grid_normal_axis = n;
  }
  if (ov.tolerance > 0) cfg.tolerance_override = ov.tolerance;
  if (ov.jitter_seed != 0) cfg.jitter_seed = ov.jitter_seed;
  if (ov.hessian_step > 0) {
    cfg.hessian_step = ov.hessian_step;
    cfg.pipeline.star.hessian_step = ov.hessian_step;
    cfg.pipeline.find_a.hessian_step = ov.hessian_step;
    cfg.pipeline.verify.hessian_step = ov.hessian_step;
    cfg.pipeline.reference.hessian_step = ov.hessian_step;
  }
}

} // namespace qpx
