#pragma once

#include <initializer_list>
#include <vector>

#include "perfolab/marked_process.hpp"

namespace perfolab::test {

struct P {
  std::vector<double> z;
  double rho;
};

/// Realization over the unit cube with explicit lattice points.
inline MarkedRealization scene(double eps, std::initializer_list<P> pts, int d = 3, double beta = 0.5) {
  MarkedRealization r;
  r.epsilon = eps;
  r.lambda = 1.0;
  r.beta = beta;
  r.domain = Domain::unit_cube(d);
  r.mark_dist = MarkDistribution::pareto(1.0, 2.5);
  r.seed = 0;
  for (const auto& p : pts) {
    PointD z(d);
    for (int k = 0; k < d; ++k) z[k] = p.z[static_cast<std::size_t>(k)];
    r.points.push_back({z, p.rho});
  }
  return r;
}

inline PointD pt(std::initializer_list<double> c) { return PointD(c); }

}  // namespace perfolab::test
