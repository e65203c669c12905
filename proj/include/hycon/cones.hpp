#pragma once

// Entailment cones on the hyperboloid.
//
// A cone is rooted at an apex x with half-aperture
//   omega(x) = arcsin(min(1, 2K / (sqrt(kappa) |x_s|)))
// and contains y when the exterior angle at x between the outward radial
// geodesic and the geodesic towards y does not exceed omega(x).

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "hycon/errors.hpp"
#include "hycon/lorentz.hpp"

namespace hycon {

inline constexpr double kDefaultBoundaryConst = 0.1;

class EntailmentCone {
 public:
  EntailmentCone(LorentzPoint apex, double boundary_const = kDefaultBoundaryConst, std::string label = {})
      : apex_(std::move(apex)), boundary_const_(boundary_const), label_(std::move(label)) {
    if (!(boundary_const_ > 0.0) || !std::isfinite(boundary_const_)) {
      throw ConfigError("cone boundary constant must be positive and finite");
    }
    if (apex_.spatial().norm() == 0.0) {
      throw DegenerateError("cone apex sits at the sheet origin; aperture is undefined");
    }
  }

  const LorentzPoint& apex() const noexcept { return apex_; }
  double boundary_const() const noexcept { return boundary_const_; }
  const std::string& label() const noexcept { return label_; }

 private:
  LorentzPoint apex_;
  double boundary_const_;
  std::string label_;
};

inline double half_aperture(const LorentzPoint& apex, double boundary_const) {
  const double r = apex.spatial().norm();
  if (r == 0.0) throw DegenerateError("half-aperture is undefined at the sheet origin");
  return std::asin(std::min(1.0, 2.0 * boundary_const / (apex.curvature().sqrt() * r)));
}

inline double half_aperture(const EntailmentCone& cone) {
  return half_aperture(cone.apex(), cone.boundary_const());
}

inline constexpr double kCoincidentTolerance = 1e-10;

// Unit tangent at `apex` pointing away from the sheet origin along the radial
// geodesic.
inline TangentVector outward_radial(const LorentzPoint& apex) {
  const double r = apex.spatial().norm();
  if (r == 0.0) throw DegenerateError("radial direction is undefined at the sheet origin");
  Vector v(apex.coords().size());
  v(0) = r * r;
  v.tail(apex.dim()) = apex.time() * apex.spatial();
  v *= apex.curvature().sqrt() / r;
  return TangentVector(project_to_tangent(v, apex), apex);
}

// Angle at the apex between the geodesic to y and the outward radial ray.
// Equals arccos((y0 + x0 kappa<x,y>_L) / (|x_s| sqrt((kappa<x,y>_L)^2 - 1)));
// evaluated as atan2 of the across/along components of log_x(y).
inline double exterior_angle(const LorentzPoint& apex, const LorentzPoint& y) {
  require_compatible(apex, y);
  if (apex.spatial().norm() == 0.0) throw DegenerateError("exterior angle is undefined at the sheet origin");
  if (geodesic_distance(apex, y) <= kCoincidentTolerance) {
    throw DegenerateError("exterior angle is undefined when the point coincides with the apex");
  }
  const Vector u = project_to_tangent(y.coords() - apex.coords(), apex);
  const Vector er = outward_radial(apex).coords();
  const double along = lorentz_inner(u, er);
  const Vector perp = u - along * er;
  const double across = std::sqrt(std::max(lorentz_inner(perp, perp), 0.0));
  return std::atan2(across, along);
}

struct Membership {
  bool inside = false;
  // half_aperture - exterior_angle, in radians.
  double margin = 0.0;
};

inline Membership contains(const EntailmentCone& cone, const LorentzPoint& y) {
  const double margin = half_aperture(cone) - exterior_angle(cone.apex(), y);
  return {margin >= 0.0, margin};
}

inline bool intersection_contains(std::span<const EntailmentCone> cones, const LorentzPoint& y) {
  if (cones.empty()) throw EmptySetError("intersection of an empty cone list");
  for (const auto& cone : cones) {
    if (!contains(cone, y).inside) return false;
  }
  return true;
}

}  // namespace hycon
