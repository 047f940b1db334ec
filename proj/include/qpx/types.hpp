#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace qpx {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorKind {
  Domain,          // point outside atlas / chart box
  Parameter,       // bad numeric parameter (step, tolerance, ...)
  Precondition,    // contract violated by the caller
  Convergence,     // iterative solver did not converge
  ModelDefinition, // model fails its own load-time certification
  Construction,    // a search (A, nu, c) found no admissible value
  Verification,    // a certified check failed
  Unsupported,     // function class outside the supported one
  OutsideTube,     // evaluation outside the declared tube neighborhood
  Config,          // unreadable / ill-formed configuration
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::ModelDefinition: return "model-definition";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Verification: return "verification";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::OutsideTube: return "outside-tube";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

// A point given by a chart label and complex coordinates in that chart.
struct ChartPoint {
  std::string chart;
  CVector coords;

  ChartPoint() = default;
  ChartPoint(std::string chart_id, CVector c)
      : chart(std::move(chart_id)), coords(std::move(c)) {}
  ChartPoint(std::string chart_id, std::initializer_list<Complex> c)
      : chart(std::move(chart_id)), coords(CVector::Zero((long)c.size())) {
    long i = 0;
    for (const auto& v : c) coords[i++] = v;
  }

  int dim() const { return static_cast<int>(coords.size()); }
};

inline bool same_point(const ChartPoint& a, const ChartPoint& b, double tol = 1e-12) {
  return a.chart == b.chart && a.coords.size() == b.coords.size() &&
         (a.coords - b.coords).cwiseAbs().maxCoeff() <= tol;
}

// Hermitian matrix anchored at a base point; entries in metric units.
struct HermitianForm {
  ChartPoint base;
  CMatrix entries;

  double hermitian_defect() const {
    return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  }
  void symmetrize() { entries = 0.5 * (entries + entries.adjoint()).eval(); }
};

inline HermitianForm make_hermitian(ChartPoint base, CMatrix m) {
  HermitianForm f{std::move(base), std::move(m)};
  double scale = std::max(1.0, f.entries.cwiseAbs().maxCoeff());
  if (f.hermitian_defect() > 1e-10 * scale)
    fail(ErrorKind::Parameter, "matrix is not Hermitian within tolerance");
  f.symmetrize();
  return f;
}

// Evaluation contract ChartPoint -> real (possibly -inf on the singular locus),
// plus enough metadata for finite-difference code to refuse unsafe samples.
struct ScalarField {
  std::function<double(const ChartPoint&)> evaluate;
  // Squared distance proxy to the singular locus (+inf when there is none).
  std::function<double(const ChartPoint&)> singular_proximity_sq;
  double smoothness_margin = 0.0;
  std::string name;

  double operator()(const ChartPoint& p) const { return evaluate(p); }
  double proximity_sq(const ChartPoint& p) const {
    return singular_proximity_sq ? singular_proximity_sq(p)
                                 : std::numeric_limits<double>::infinity();
  }
};

inline ScalarField constant_field(double value, std::string name = "const") {
  ScalarField f;
  f.evaluate = [value](const ChartPoint&) { return value; };
  f.name = std::move(name);
  return f;
}

} // namespace qpx
