#pragma once

#include <array>
#include <optional>
#include <vector>

#include "qpx/grid.hpp"
#include "qpx/manifold.hpp"
#include "qpx/models.hpp"
#include "qpx/qpsh.hpp"

namespace qpx {

// ----------------------------------------------------------- local step ---

// phi_bar = phi_m o r + A h on the tube; restriction to V is exactly phi_m.
ScalarField local_extend(const ScalarField& phi_m_on_V, const ManifoldModel& model,
                         double A);

struct LocalExtensionParams {
  double A = 0.0;
  double epsilon_prime = 0.0; // certified min generalized eigenvalue margin
  double w_radius = 0.0;      // W = { delta(., V) < w_radius }
  std::vector<std::array<double, 2>> margin_curve; // (A, margin) evaluations
  long certified_samples = 0;
  std::string serialize() const; // canonical text, for bit-identity checks
};

struct FindAOptions {
  double eps_family = 0.0;      // certified uniform family bound (epsilon/2)
  double eps_prime_target = 0.05;
  double A_min = 0.25;
  double A_max = 64.0;
  int A_scan = 10;              // log-spaced scan points
  int bisect_iters = 30;
  double w_radius_fraction = 0.6; // initial W radius as a fraction of the tube
  double w_radius_shrink = 0.7;
  int w_attempts = 3;
  double hessian_step = 1e-3;
  int grid_n_v = 4;
  int grid_n_phase = 6;
  int grid_n_radial = 4;
  double C_quarter_bound = 0.0; // if > 0, enforce A * w_radius^2 <= C/4
};

// Searches (A, W radius) so that the worst-case curvature surrogate
//   G + A * Hess(h) + (eps_family - 1) * r^*(omega|_V)
// has min generalized eigenvalue >= eps_prime_target against G on the
// shrunken-tube grid. Never reads any phi_m: depends on (model, eps) only.
LocalExtensionParams find_A(const ManifoldModel& model, const FindAOptions& opts);

// ---------------------------------------------------------- global step ---

struct NuChoice {
  double nu = 0.0;
  double C_dd = 0.0;             // -sup_{dW} phi_tilde_1
  double inf_F_boundary = 0.0;   // min of F over dW samples
  double nu_boundary_max = 0.0;  // (C''/2) / (-inf F)
  double nu_curvature_max = 0.0; // (1 - eps') / (1 - eps_F), +inf if eps_F >= 1
  double margin_fraction = 0.0;
  long boundary_samples = 0;
};

struct NuOptions {
  double margin_fraction = 0.05;
  int n_v = 8;
  int n_phase = 12;
};

// Largest admissible nu from the boundary condition inf_dW(nu F) > -C''/2,
// intersected with the curvature bound derived from the certified eps_F.
NuChoice choose_nu(const ManifoldModel& model, double w_radius,
                   const ScalarField& phi_tilde_1, const ReferenceFunction& ref,
                   double eps_prime, const NuOptions& opts);

enum class Branch { Local, Reference, Outside };

struct GluedExtension {
  long m = 0;
  double nu = 0.0;
  double w_radius = 0.0;
  double boundary_margin = 0.0; // min over dW samples of nu F - phi_tilde_1
  double C_dd = 0.0;
  ScalarField field;            // max(phi_tilde_m, nu F) on W; nu F outside
  ScalarField local_branch;     // phi_tilde_m
  ScalarField reference_branch; // nu F

  Branch active_branch(const ManifoldModel& model, const ChartPoint& p,
                       double value_gap = 0.0) const;
};

// Step-2 gluing. Requires a positive boundary margin (checked on samples).
GluedExtension glue(const ScalarField& phi_tilde_m, long m, double nu,
                    const ScalarField& F, const ManifoldModel& model,
                    double w_radius, const ScalarField& phi_tilde_1,
                    const NuOptions& opts);

// ----------------------------------------------------------- diagnostics ---

struct SampleFailure {
  ChartPoint point;
  std::string check;
  double value = 0.0;
  long m = 0;
};

struct PerMDiagnostics {
  long m = 0;
  double min_positivity = 0.0;   // min branch-wise generalized eigenvalue
  double max_value = 0.0;        // max Phi_m over the grid (must be <= 0)
  double restriction_error = 0.0;
  double monotonicity_margin = 0.0; // min over samples of Phi_{m-1} - Phi_m
  double max_on_V = 0.0;            // max phi_m over V samples (non-degeneracy)
  long samples = 0;
  long excluded = 0;
};

struct VerifyOptions {
  double hessian_step = 1e-3;
  double eps_prime = 0.0;
  double eq_value_collar = 0.08; // exclude samples with |phi_tilde - nu F| below
  double seam_collar = 0.04;     // spatial collar around the reference cap seam
  double cut_collar = 0.05;      // collar around cut-locus / chart-seam pullbacks
  int grid_normal_axis = 12;     // grid count per real axis, normal coordinate
  int grid_v_axis = 4;           // grid count per real axis, V-direction coordinate
  int restriction_samples = 40;
  double nondegeneracy_floor = -1e30;
  double cap_radius = 0.0;       // reference cap (for the seam exclusion)
};

struct ExtensionReport {
  // chosen constants
  double A = 0.0, epsilon_prime = 0.0, nu = 0.0, w_radius = 0.0;
  double c_F = 0.0, K_F = 0.0, eps_F = 0.0, cap_radius = 0.0;
  double epsilon = 0.0, C = 0.0, shift = 0.0;
  std::vector<PerMDiagnostics> per_m;
  std::vector<SampleFailure> failures;
  bool pass = false;
  std::string grid_note;
  long total_samples = 0, total_excluded = 0;
};

// Certifies, at grid samples away from the singular/equality loci:
// (i) monotone non-increase in m, (ii) Phi_m <= 0, (iii) branch-wise
// positivity >= eps', (iv) exact restriction to phi_m on V, (v)
// non-degeneracy of the limit candidate. Never a silent pass.
ExtensionReport verify_extension(const ManifoldModel& model,
                                 const std::vector<GluedExtension>& sequence,
                                 const std::vector<ScalarField>& phi_m_on_V,
                                 const VerifyOptions& opts);

// ------------------------------------------------------------- pipeline ---

struct PipelineOptions {
  double epsilon = 1.0;
  double C = 20.0;
  std::vector<long> m_schedule = {1, 2, 4, 8, 16};
  StarOptions star;
  FindAOptions find_a;
  NuOptions nu;
  VerifyOptions verify;
  std::vector<double> reference_c_candidates = {0.6, 0.45, 0.3, 0.2, 0.1, 0.05};
  ReferenceOptions reference;
  double nu_override_factor = 1.0; // fault-injection knob; 1 = faithful
};

struct PipelineResult {
  bool ok = false;
  std::string failed_stage; // empty on success
  std::string failure_message;
  ExtensionReport report;
  RegularizationTable regularization;
  StarCheckResult star;
  LocalExtensionParams local_params;
  NuChoice nu_choice;
  double reference_c = 0.0, reference_eps = 0.0;
  std::vector<GluedExtension> glued;
};

PipelineResult run_extension_pipeline(const ManifoldModel& model, QpshFunction phi,
                                      const PipelineOptions& opts);

} // namespace qpx
