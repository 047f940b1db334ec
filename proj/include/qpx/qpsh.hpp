#pragma once

#include <map>
#include <vector>

#include "qpx/expressions.hpp"
#include "qpx/grid.hpp"
#include "qpx/manifold.hpp"

namespace qpx {

// Quasi-psh function on V with analytic singularities:
//   phi = smooth + c * log( sum_j |f_j|^2 )
// given per intrinsic chart of V. Evaluation goes through the canonical
// chart, so identified representatives evaluate identically.
struct QpshFunction {
  struct ChartData {
    ExprPtr smooth;              // real-valued expression (may be null = 0)
    std::vector<ExprPtr> f;      // holomorphic tuple; empty = no singular part here
  };
  double c = 0.0;
  std::map<std::string, ChartData> charts;
  double shift = 0.0;            // normalization constant subtracted from phi
  bool analytic_form = true;     // false models a black-box evaluator

  bool has_singular_part() const { return c > 0.0; }

  double evaluate(const Manifold& V, const ChartPoint& p) const;
  // smooth + c log(sum |f_j|^2 + 1/m); equals phi when c == 0.
  double evaluate_regularized(const Manifold& V, const ChartPoint& p, long m) const;
  // sum_j |f_j(p)|^2 in the canonical chart (squared proxy distance to the
  // singular locus); +inf when there is no singular part.
  double zero_proximity_sq(const Manifold& V, const ChartPoint& p) const;

  ScalarField field(const Manifold& V, double smoothness_margin = 0.0) const;
  ScalarField regularized_field(const Manifold& V, long m) const;
};

// The checkable form of assumption *_{eps,C}:
//   omega|_V + i ddbar(phi) >= (eps/2) omega|_V on the grid, and
//   sup phi <= -C/2.
struct StarCertificate {
  double epsilon = 0.0;
  double C = 0.0;
  double min_margin = 0.0; // min generalized eigenvalue observed
  double sup_phi = 0.0;
  long samples = 0;
  std::string grid_note;
};

struct StarCheckResult {
  bool ok = false;
  StarCertificate certificate;
  ChartPoint worst_sample;
  std::string failure;
};

struct StarOptions {
  double hessian_step = 1e-3;
  double singular_collar = 0.05; // exclusion around the singular locus
  double cut_collar = 0.05;      // exclusion around the V cut locus / chart seam
  int grid_per_axis = 9;
};

StarCheckResult check_star(const ScalarField& phi, const ManifoldModel& model,
                           double epsilon, double C, const StarOptions& opts);

// Monotone regularization of the analytic-singularity class:
//   phi_m = smooth + c log( sum |f_j|^2 + 1/m )  (pointwise >= phi, decreasing in m).
ScalarField regularize(const QpshFunction& phi, const Manifold& V, long m);

// Measured schedule diagnostics. margin_m is the certified min generalized
// eigenvalue of (omega_V + i ddbar phi_m) vs omega_V over the grid;
// deficit_m = max(0, eps - margin_m); eps_m is a valid decreasing sequence
// with margin_m >= eps - eps_m at every m:
//   eps_m = max_{m' >= m} deficit_{m'} + eps / (2 (m + 1)).
struct RegularizationRow {
  long m = 0;
  double margin = 0.0;
  double deficit = 0.0;
  double eps_m = 0.0;
  double sup_phi_m = 0.0;
  double min_gap_prev = 0.0; // min over samples of phi_{prev} - phi_m (>= 0)
  double min_gap_phi = 0.0;  // min over samples of phi_m - phi (>= 0)
};

struct RegularizationTable {
  std::vector<RegularizationRow> rows;
  double epsilon = 0.0;
  long samples = 0;
};

RegularizationTable regularization_schedule(const QpshFunction& phi,
                                            const ManifoldModel& model,
                                            const std::vector<long>& schedule,
                                            double epsilon, const StarOptions& opts);

} // namespace qpx
