// Command-line driver: model validation, Hessian verification, and
// end-to-end extension runs with report emission.

#include <CLI11.hpp>

#include "qpx/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"quasi-psh extension toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  double grid_spacing = 0.0, tolerance = 0.0, hessian_step = 0.0;
  std::vector<long> m_schedule;
  uint64_t jitter_seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--grid-spacing", grid_spacing, "grid spacing override");
    sub->add_option("--m-schedule", m_schedule, "m schedule (comma separated)")
        ->delimiter(',');
    sub->add_option("--tolerance", tolerance, "tolerance override");
    sub->add_option("--jitter-seed", jitter_seed, "grid jitter seed (0 = none)");
    sub->add_option("--hessian-step", hessian_step, "finite-difference step");
  };

  CLI::App* validate = app.add_subcommand("validate-model", "run the model invariant suite");
  CLI::App* hessian = app.add_subcommand("verify-hessian", "validate distance Hessians on V");
  CLI::App* extend = app.add_subcommand("extend", "run the full extension pipeline");
  add_common(validate);
  add_common(hessian);
  add_common(extend);

  CLI11_PARSE(app, argc, argv);

  qpx::CommandOptions opts;
  opts.config_path = config_path;
  opts.overrides.out_dir = out_dir;
  opts.overrides.grid_spacing = grid_spacing;
  opts.overrides.m_schedule = m_schedule;
  opts.overrides.tolerance = tolerance;
  opts.overrides.jitter_seed = jitter_seed;
  opts.overrides.hessian_step = hessian_step;

  if (validate->parsed()) return qpx::cmd_validate_model(opts);
  if (hessian->parsed()) return qpx::cmd_verify_hessian(opts);
  if (extend->parsed()) return qpx::cmd_extend(opts);
  return qpx::kStatusConfigError;
}
