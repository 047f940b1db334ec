#include "qpx/grid.hpp"

#include <random>

namespace qpx {

std::vector<ChartPoint> sample_grid(const Chart& chart, const GridSpec& spec,
                                    const std::vector<Exclusion>& exclusions) {
  if ((int)spec.counts.size() != chart.dim)
    fail(ErrorKind::Parameter, "grid counts do not match chart dimension");
  const int n2 = 2 * chart.dim;
  std::vector<int> counts(n2);
  std::vector<double> lo(n2), step(n2);
  for (int i = 0; i < chart.dim; ++i) {
    counts[2 * i] = spec.counts[i][0];
    counts[2 * i + 1] = spec.counts[i][1];
  }
  for (int a = 0; a < n2; ++a) {
    if (counts[a] < 1) fail(ErrorKind::Parameter, "grid count must be >= 1");
    double l = chart.lo[a] + spec.margin, h = chart.hi[a] - spec.margin;
    if (!(h > l)) fail(ErrorKind::Parameter, "grid margin exceeds chart box");
    if (counts[a] == 1) {
      lo[a] = 0.5 * (l + h);
      step[a] = 0.0;
    } else {
      lo[a] = l;
      step[a] = (h - l) / (counts[a] - 1);
    }
  }

  std::mt19937_64 rng(spec.jitter_seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const bool jitter = spec.jitter_seed != 0 && spec.jitter > 0;

  long total = 1;
  for (int a = 0; a < n2; ++a) total *= counts[a];
  std::vector<ChartPoint> out;
  out.reserve(total);
  std::vector<int> idx(n2, 0);
  for (long t = 0; t < total; ++t) {
    RVector x(n2);
    for (int a = 0; a < n2; ++a) {
      x[a] = lo[a] + idx[a] * step[a];
      if (jitter && counts[a] > 1) x[a] += uni(rng) * spec.jitter * step[a];
    }
    CVector z(chart.dim);
    for (int i = 0; i < chart.dim; ++i) z[i] = Complex(x[2 * i], x[2 * i + 1]);
    ChartPoint p(chart.id, z);
    bool keep = chart.contains(z);
    for (const auto& ex : exclusions) {
      if (!keep) break;
      if (ex.proximity_sq(p) < ex.radius * ex.radius) keep = false;
    }
    if (keep) out.push_back(std::move(p));
    for (int a = n2 - 1; a >= 0; --a) {
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

} // namespace qpx
