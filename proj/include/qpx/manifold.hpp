#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "qpx/types.hpp"

namespace qpx {

// Rectangular chart domain: per complex coordinate a box in Re/Im.
struct Chart {
  std::string id;
  int dim = 0;
  RVector lo; // size 2*dim, interleaved (Re0, Im0, Re1, Im1, ...)
  RVector hi;

  bool contains(const CVector& z, double slack = 0.0) const {
    if ((int)z.size() != dim) return false;
    for (int i = 0; i < dim; ++i) {
      double re = z[i].real(), im = z[i].imag();
      if (re < lo[2 * i] - slack || re > hi[2 * i] + slack) return false;
      if (im < lo[2 * i + 1] - slack || im > hi[2 * i + 1] + slack) return false;
    }
    return true;
  }
  double min_resolution() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2 * dim; ++i) m = std::min(m, hi[i] - lo[i]);
    return m;
  }
};

inline Chart make_box_chart(std::string id, int dim, double half_width) {
  Chart c;
  c.id = std::move(id);
  c.dim = dim;
  c.lo = RVector::Constant(2 * dim, -half_width);
  c.hi = RVector::Constant(2 * dim, half_width);
  return c;
}

// Immutable atlas + metric bundle. All callbacks are pure.
struct Manifold {
  std::vector<Chart> charts;
  // Closed-form Hermitian metric matrix [g_{i jbar}] at a chart point.
  std::function<CMatrix(const ChartPoint&)> metric;
  // Per-chart Kaehler potential (local; potentials in different charts may
  // differ by pluriharmonic terms).
  std::function<double(const ChartPoint&)> potential;
  // Normal form: deck reduction plus preferred-chart selection. Field
  // evaluation goes through this, which makes identified points evaluate
  // identically by construction.
  std::function<ChartPoint(const ChartPoint&)> canonicalize;
  // Express a point in a named chart if possible.
  std::function<std::optional<ChartPoint>(const ChartPoint&, const std::string&)> transition;
  // Minimal coordinate displacement b - a respecting identifications,
  // assuming both points in the same chart. Used by finite differences of
  // chart-valued maps (retraction, foot map).
  std::function<CVector(const ChartPoint&, const ChartPoint&)> displacement;
  // Deck transformations (for quotient models); empty otherwise.
  std::vector<std::function<ChartPoint(const ChartPoint&)>> identifications;

  const Chart& chart(const std::string& id) const {
    for (const auto& c : charts)
      if (c.id == id) return c;
    fail(ErrorKind::Domain, "unknown chart '" + id + "'");
  }
  bool has_chart(const std::string& id) const {
    for (const auto& c : charts)
      if (c.id == id) return true;
    return false;
  }
  void require_inside(const ChartPoint& p, double slack = 1e-9) const {
    if (!chart(p.chart).contains(p.coords, slack))
      fail(ErrorKind::Domain, "point outside declared domain of chart '" + p.chart + "'");
  }
  CVector delta(const ChartPoint& a, const ChartPoint& b) const {
    if (displacement) return displacement(a, b);
    if (a.chart != b.chart) fail(ErrorKind::Domain, "displacement across charts");
    return b.coords - a.coords;
  }
};

// A complex submanifold V together with its intrinsic manifold structure.
struct Submanifold {
  Manifold intrinsic; // V as a manifold in its own right
  // Map an intrinsic V point to an ambient chart point.
  std::function<ChartPoint(const ChartPoint&)> include;
  // Does an ambient point lie on V (within tol in defining coordinates)?
  std::function<bool(const ChartPoint&, double)> contains;
  // For an ambient point assumed on V, its intrinsic coordinates.
  std::function<ChartPoint(const ChartPoint&)> coordinates_on_V;
  // Ambient charts in which V is affine-linear: chart id -> indices.
  struct LinearData {
    std::vector<int> tangential; // ambient coord indices spanning T V
    std::vector<int> normal;     // ambient coord indices vanishing on V
    CVector offset;              // V = { z : z[normal[i]] == offset[i] }
  };
  std::map<std::string, LinearData> linear_charts;
  // Squared distance proxy from an intrinsic V point to the cut locus of the
  // fundamental-domain reduction (+inf when none).
  std::function<double(const ChartPoint&)> cut_locus_proximity_sq;
  // Squared distance proxy to the canonical-chart seam on V (+inf when the
  // canonical chart is unique).
  std::function<double(const ChartPoint&)> chart_seam_proximity_sq;
};

struct NearestPointResult {
  ChartPoint query;        // the ambient point x
  ChartPoint foot;         // ambient representation of y(x)
  ChartPoint foot_on_V;    // intrinsic V coordinates of y(x)
  CVector exp_inverse;     // v(x, y) in the chart of `query`, tangent units
  double distance = 0.0;   // delta(x, V)
};

struct ManifoldModel; // below

using NearestFn =
    std::function<NearestPointResult(const ManifoldModel&, const ChartPoint&)>;

// Immutable bundle: atlas, metric, submanifold V, retraction, tube data and
// the model's closed-form shortcuts. Built by the model constructors in
// models.cpp, certified at load time.
struct ManifoldModel {
  std::string kind;
  Manifold ambient;
  Submanifold V;
  // Holomorphic retraction: ambient tube point -> intrinsic V point.
  std::function<ChartPoint(const ChartPoint&)> retraction;
  double tube_radius = 0.0; // in distance units
  // Closed-form point-to-point geodesic distance (null -> shooting fallback).
  std::function<double(const ChartPoint&, const ChartPoint&)> closed_distance;
  // Closed-form nearest point (null -> generic minimization).
  NearestFn closed_nearest;
  // Globally defined delta(x, V); exact inside the tube, may be clamped to a
  // value above tube_radius far away. Used by h and its capped variant.
  std::function<double(const ChartPoint&)> distance_to_V;
  // Samples of the shell { dist(x, V) = d } used for boundary checks.
  std::function<std::vector<ChartPoint>(double, int, int)> tube_shell_samples;
  // Induced metric on V at an intrinsic point (k x k Hermitian).
  std::function<CMatrix(const ChartPoint&)> metric_on_V;
  double metric_positivity_threshold = 1e-3;
  double locality_radius = 2.0; // max geodesic length handled by shooting

  int ambient_dim() const { return ambient.charts.empty() ? 0 : ambient.charts.front().dim; }
  int v_dim() const {
    return V.intrinsic.charts.empty() ? 0 : V.intrinsic.charts.front().dim;
  }
};

} // namespace qpx
