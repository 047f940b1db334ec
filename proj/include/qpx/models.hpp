#pragma once

#include <vector>

#include "qpx/manifold.hpp"

namespace qpx {

// Flat C^2 test model with metric diag(a1, a2), V = { z2 = 0 }.
struct FlatModelParams {
  double a1 = 1.0;
  double a2 = 1.0;
  double box = 1.5;
  double tube_radius = 1.0;
  double positivity_threshold = 1e-3;
};
ManifoldModel build_flat_model(const FlatModelParams& params = {});

// Product of two factors, V = first factor x {0}.
struct ProductFactor {
  std::string kind;            // "p1" | "torus"
  Complex tau = Complex(0, 1); // torus modulus
};
struct ProductModelParams {
  ProductFactor first{"p1"};
  ProductFactor second{"torus"};
  double tube_radius = 0.35;
  double positivity_threshold = 1e-3;
};
ManifoldModel build_product_model(const ProductModelParams& params = {});

// Serre's example: (P^1 x C) / ~ with ([x;y],z) ~ ([x;y+x],z+1) ~ ([x;y+tau_bar x],z+tau),
// V = {x=0} an elliptic curve. Affine fiber coordinate w = y/x with deck action
// (w,z) -> (w + conj(lambda), z + lambda); chart at x=0 uses s = 1/w.
// Kaehler potential: |z|^2 + kappa*log(1+|w - conj(z)|^2); positivity is
// certified at load, never assumed.
struct SerreParameters {
  Complex tau = Complex(0, 1);
  double kappa = 0.5;
  double sigma_tube = 0.55;  // tube extent in the fiber invariant |sigma|
  double box = 1.25;         // half-width of the w / s chart boxes
  double z_margin = 0.25;    // z box beyond the fundamental domain
  double positivity_threshold = 1e-3;
};
ManifoldModel build_serre_model(const SerreParameters& params = {});

// Load-time / on-demand certification of the ManifoldModel invariants.
struct ModelCheck {
  std::string name;
  bool pass = false;
  double worst = 0.0; // worst observed value (meaning depends on the check)
  std::string detail;
};
std::vector<ModelCheck> validate_model(const ManifoldModel& model);

// Reference function F = c log h_capped - K with K = c log(cap^2) + 1, so
// F <= -1 everywhere and F = -inf exactly on V. The positivity
// omega + i ddbar F >= eps * omega is certified on a grid that excludes a
// collar around V and around the cap seam; outside the cap F is constant.
struct ReferenceOptions {
  double c = 0.25;
  double cap_radius = 0.3;      // in distance units; must be < tube_radius
  double eps_target = 0.05;     // required certified margin
  double collar_v = 0.04;       // exclusion collar around V (distance units)
  double collar_seam = 0.04;    // exclusion collar around the cap seam
  int grid_per_axis = 7;
  double hessian_step = 1e-3;
};
struct ReferenceFunction {
  ScalarField F;
  double c = 0.0;
  double K = 0.0;
  double epsilon = 0.0;    // certified margin vs omega
  double cap_radius = 0.0;
  long certified_samples = 0;
};
ReferenceFunction reference_function(const ManifoldModel& model, const ReferenceOptions& opts);

// Deterministic downward scan over c candidates; returns the first (largest)
// c whose certification met eps_target. Throws Construction with the best
// (c, eps) found when none does.
ReferenceFunction find_reference_c(const ManifoldModel& model,
                                   const std::vector<double>& candidates,
                                   ReferenceOptions base);

} // namespace qpx
