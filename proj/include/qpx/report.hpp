#pragma once

#include <string>
#include <vector>

#include "qpx/config.hpp"
#include "qpx/extension.hpp"
#include "qpx/models.hpp"

namespace qpx {

// Structured report with stable key order. `include_timestamp` exists so
// determinism tests can compare byte-identical documents.
Json model_check_report(const ManifoldModel& model, const std::vector<ModelCheck>& checks,
                        bool include_timestamp = true);
Json pipeline_report(const ManifoldModel& model, const PipelineResult& result,
                     bool include_timestamp = true);

std::string render_report(const Json& report);
void write_report(const Json& report, const std::string& path);

// Per-grid CSV: chart, coordinates, h, Phi_m for each m, min eigenvalue,
// active branch (of the last m).
void write_extension_csv(const ManifoldModel& model,
                         const std::vector<GluedExtension>& glued,
                         const VerifyOptions& opts, const std::string& path);

// Strips volatile fields (timestamps) for byte comparison.
std::string report_comparison_key(const Json& report);

} // namespace qpx
