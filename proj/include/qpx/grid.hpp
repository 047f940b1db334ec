#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qpx/manifold.hpp"
#include "qpx/types.hpp"

namespace qpx {

// Exclusion set: samples with proximity_sq < radius^2 are skipped.
struct Exclusion {
  std::function<double(const ChartPoint&)> proximity_sq;
  double radius = 0.0;
  std::string name;
};

struct GridSpec {
  std::string chart;
  std::vector<std::array<int, 2>> counts; // per complex coord: {n_re, n_im}
  double margin = 0.0;      // shrink the chart box by this much per side
  uint64_t jitter_seed = 0; // 0 = no jitter
  double jitter = 0.0;      // jitter amplitude as a fraction of spacing
};

// Lattice of chart points inside the (shrunken) chart box, minus exclusions.
std::vector<ChartPoint> sample_grid(const Chart& chart, const GridSpec& spec,
                                    const std::vector<Exclusion>& exclusions = {});

} // namespace qpx
