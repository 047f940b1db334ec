#pragma once

#include <string>

#include <json.hpp>

#include "qpx/extension.hpp"
#include "qpx/manifold.hpp"
#include "qpx/qpsh.hpp"

namespace qpx {

using Json = nlohmann::ordered_json;

// Parsed run configuration: model parameters, the qpsh descriptor, pipeline
// options and output settings, with CLI overrides applied on top.
struct RunConfig {
  Json raw;
  std::string model_kind;
  std::string source_path;
  std::string out_dir = "out";
  PipelineOptions pipeline;
  double hessian_step = 1e-3;
  double tolerance_override = 0.0; // 0 = use built-in tolerances
  uint64_t jitter_seed = 0;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const Json& j, const std::string& source);

ManifoldModel build_model_from_config(const RunConfig& cfg);
QpshFunction build_phi_from_config(const RunConfig& cfg, const ManifoldModel& model);

// Overrides from the command line; zero/empty means "keep config value".
struct CliOverrides {
  std::string out_dir;
  double grid_spacing = 0.0;
  std::vector<long> m_schedule;
  double tolerance = 0.0;
  uint64_t jitter_seed = 0;
  double hessian_step = 0.0;
};
void apply_overrides(RunConfig& cfg, const CliOverrides& ov);

} // namespace qpx
