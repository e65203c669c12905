#pragma once

#include <random>

#include "hycon/lorentz.hpp"

namespace hycon::testing {

using Rng = std::mt19937_64;

inline Vector gaussian(Rng& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline LorentzPoint random_point(Rng& rng, Eigen::Index n, Curvature c, double scale = 1.0) {
  return lift(gaussian(rng, n, scale), c);
}

inline TangentVector random_tangent(Rng& rng, const LorentzPoint& p, double scale = 1.0) {
  return TangentVector(project_to_tangent(gaussian(rng, p.coords().size(), scale), p), p);
}

}  // namespace hycon::testing
