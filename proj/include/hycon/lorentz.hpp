#pragma once

// Lorentz (hyperboloid) model of hyperbolic space with curvature -kappa.
//
// Points live on the upper sheet {x in R^{n+1} : <x,x>_L = -1/kappa, x0 > 0}
// with the time coordinate stored first. Every function here is pure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "hycon/errors.hpp"

namespace hycon {

using Vector = Eigen::VectorXd;

inline constexpr double kSheetTolerance = 1e-9;
inline constexpr double kTangentTolerance = 1e-9;

class Curvature {
 public:
  explicit Curvature(double kappa = 1.0) : kappa_(kappa) {
    if (!std::isfinite(kappa) || kappa <= 0.0) {
      std::ostringstream os;
      os << "curvature magnitude must be positive and finite, got " << kappa;
      throw ConfigError(os.str());
    }
  }

  double value() const noexcept { return kappa_; }
  double sqrt() const noexcept { return std::sqrt(kappa_); }

  friend bool operator==(Curvature a, Curvature b) noexcept { return a.kappa_ == b.kappa_; }

 private:
  double kappa_;
};

namespace detail {

inline void require_same_length(Eigen::Index a, Eigen::Index b) {
  if (a != b || a < 2) {
    std::ostringstream os;
    os << "Lorentz vectors need equal lengths >= 2, got " << a << " and " << b;
    throw DimensionError(os.str());
  }
}

inline bool all_finite(const Eigen::Ref<const Vector>& v) { return v.allFinite(); }

// Divisor that turns absolute sheet residuals into relative ones.
inline double sheet_scale(double x0) { return std::max(1.0, x0 * x0); }

}  // namespace detail

// Minkowski bilinear form -x0*y0 + sum_i xi*yi.
inline double lorentz_inner(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  detail::require_same_length(x.size(), y.size());
  const Eigen::Index n = x.size() - 1;
  return -x(0) * y(0) + x.tail(n).dot(y.tail(n));
}

// |<x,x>_L + 1/kappa|, relative to x0^2 once x0 exceeds 1.
inline double sheet_residual(const Eigen::Ref<const Vector>& x, Curvature c) {
  return std::abs(lorentz_inner(x, x) + 1.0 / c.value()) / detail::sheet_scale(x(0));
}

// |<v,p>_L|, relative to |v||p| once that product exceeds 1.
inline double tangency_residual(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& p) {
  return std::abs(lorentz_inner(v, p)) / std::max(1.0, v.norm() * p.norm());
}

class LorentzPoint {
 public:
  // Accepts coordinates verbatim after checking the sheet constraint.
  static LorentzPoint from_coords(Vector coords, Curvature c, double tolerance = kSheetTolerance) {
    if (coords.size() < 2) throw DimensionError("a Lorentz point needs at least 2 coordinates");
    if (!coords.allFinite()) throw NumericError("non-finite Lorentz coordinates");
    if (coords(0) <= 0.0) throw ValidationError("Lorentz point has non-positive time coordinate");
    const double r = sheet_residual(coords, c);
    if (r > tolerance) {
      std::ostringstream os;
      os << "point is off the hyperboloid sheet (residual " << r << " > " << tolerance << ")";
      throw ValidationError(os.str());
    }
    return LorentzPoint(std::move(coords), c);
  }

  const Vector& coords() const noexcept { return coords_; }
  Curvature curvature() const noexcept { return curvature_; }
  double time() const noexcept { return coords_(0); }
  auto spatial() const { return coords_.tail(coords_.size() - 1); }
  // Manifold dimension n (the point has n+1 coordinates).
  Eigen::Index dim() const noexcept { return coords_.size() - 1; }

  friend bool operator==(const LorentzPoint& a, const LorentzPoint& b) {
    return a.curvature_ == b.curvature_ && a.coords_.size() == b.coords_.size() &&
           a.coords_ == b.coords_;
  }

 private:
  template <typename Derived>
  friend LorentzPoint lift(const Eigen::MatrixBase<Derived>& spatial, Curvature c);

  LorentzPoint(Vector coords, Curvature c) : coords_(std::move(coords)), curvature_(c) {}

  Vector coords_;
  Curvature curvature_;
};

// x0 = sqrt(1/kappa + |x_s|^2); the time coordinate is always recomputed.
template <typename Derived>
LorentzPoint lift(const Eigen::MatrixBase<Derived>& spatial, Curvature c) {
  if (!spatial.allFinite()) throw NumericError("cannot lift non-finite spatial coordinates");
  if (spatial.size() < 1) throw DimensionError("cannot lift an empty spatial vector");
  Vector coords(spatial.size() + 1);
  coords.tail(spatial.size()) = spatial;
  coords(0) = std::sqrt(1.0 / c.value() + spatial.squaredNorm());
  return LorentzPoint(std::move(coords), c);
}

inline LorentzPoint origin(Eigen::Index n, Curvature c) { return lift(Vector::Zero(n), c); }

inline void require_compatible(const LorentzPoint& p, const LorentzPoint& q) {
  if (!(p.curvature() == q.curvature())) {
    std::ostringstream os;
    os << "curvature mismatch: " << p.curvature().value() << " vs " << q.curvature().value();
    throw ConfigError(os.str());
  }
  if (p.dim() != q.dim()) {
    std::ostringstream os;
    os << "dimension mismatch: " << p.dim() << " vs " << q.dim();
    throw ConfigError(os.str());
  }
}

// A direction anchored at a base point, <v, base>_L = 0.
class TangentVector {
 public:
  TangentVector(Vector coords, LorentzPoint base, double tolerance = kTangentTolerance)
      : coords_(std::move(coords)), base_(std::move(base)) {
    if (coords_.size() != base_.coords().size()) {
      throw DimensionError("tangent vector length does not match its base point");
    }
    if (!coords_.allFinite()) throw NumericError("non-finite tangent vector");
    const double r = tangency_residual(coords_, base_.coords());
    if (r > tolerance) {
      std::ostringstream os;
      os << "vector is not tangent at its base point (residual " << r << ")";
      throw InvalidTangentError(os.str());
    }
  }

  static TangentVector zero(const LorentzPoint& base) {
    return TangentVector(Vector::Zero(base.coords().size()), base);
  }

  const Vector& coords() const noexcept { return coords_; }
  const LorentzPoint& base() const noexcept { return base_; }

  TangentVector scaled(double s) const { return TangentVector(coords_ * s, base_, kTangentTolerance); }

 private:
  Vector coords_;
  LorentzPoint base_;
};

// Removes the component of v along p, so the result is tangent at p.
inline Vector project_to_tangent(const Eigen::Ref<const Vector>& v, const LorentzPoint& p) {
  return v + p.curvature().value() * lorentz_inner(v, p.coords()) * p.coords();
}

// sqrt(<v,v>_L) for a tangent vector. A square below -1e-12 is not spacelike
// and is rejected.
inline double lorentz_norm(const Eigen::Ref<const Vector>& v) {
  const double sq = lorentz_inner(v, v);
  if (sq < -1e-12 * std::max(1.0, v.squaredNorm())) {
    std::ostringstream os;
    os << "negative Lorentzian square " << sq << " for a tangent vector";
    throw InvalidTangentError(os.str());
  }
  return std::sqrt(std::max(sq, 0.0));
}

inline double lorentz_norm(const TangentVector& v) { return lorentz_norm(v.coords()); }

// (1/sqrt(kappa)) * arcosh(-kappa <p,q>_L).
//
// Below alpha = 1.5 the chord form 2/sqrt(kappa) * asinh(sqrt(kappa)/2 * |p-q|_L)
// is used.
inline double geodesic_distance(const LorentzPoint& p, const LorentzPoint& q) {
  require_compatible(p, q);
  const double k = p.curvature().value();
  const double sk = p.curvature().sqrt();
  const double alpha = -k * lorentz_inner(p.coords(), q.coords());
  if (alpha > 1.5) return std::acosh(alpha) / sk;
  const Vector delta = p.coords() - q.coords();
  const double chord_sq = std::max(lorentz_inner(delta, delta), 0.0);
  return 2.0 / sk * std::asinh(0.5 * sk * std::sqrt(chord_sq));
}

namespace detail {

// sinh(t)/t with the t^2/6 series below 1e-6.
inline double sinhc(double t) { return t < 1e-6 ? 1.0 + t * t / 6.0 : std::sinh(t) / t; }

inline LorentzPoint reproject(const Vector& coords, Curvature c) {
  return lift(coords.tail(coords.size() - 1), c);
}

}  // namespace detail

// exp_p(v) = cosh(sqrt(k)|v|) p + sinh(sqrt(k)|v|)/(sqrt(k)|v|) v, reprojected
// onto the sheet through its spatial part.
inline LorentzPoint exp_map(const TangentVector& v) {
  const LorentzPoint& p = v.base();
  const double norm = lorentz_norm(v);
  if (norm == 0.0) return p;
  const double theta = p.curvature().sqrt() * norm;
  const double ch = theta < 1e-6 ? 1.0 + 0.5 * theta * theta : std::cosh(theta);
  const Vector out = ch * p.coords() + detail::sinhc(theta) * v.coords();
  if (!out.allFinite()) throw NumericError("exp map overflowed");
  return detail::reproject(out, p.curvature());
}

inline LorentzPoint exp_map(const LorentzPoint& base, const Eigen::Ref<const Vector>& v) {
  return exp_map(TangentVector(Vector(v), base));
}

// Point at arclength t along the geodesic through p with unit velocity u:
// cosh(sqrt(k) t) p + sinh(sqrt(k) t)/sqrt(k) u. Takes |u|_L = 1 as given.
inline LorentzPoint geodesic_point(const TangentVector& unit, double t) {
  const LorentzPoint& p = unit.base();
  if (t == 0.0) return p;
  const double sk = p.curvature().sqrt();
  const double theta = sk * t;
  const Vector out = std::cosh(theta) * p.coords() + (t * detail::sinhc(std::abs(theta))) * unit.coords();
  if (!out.allFinite()) throw NumericError("geodesic point overflowed");
  return detail::reproject(out, p.curvature());
}

// Velocity of the same geodesic at arclength t, expressed at geodesic_point(u, t).
inline TangentVector geodesic_velocity(const TangentVector& unit, double t, const LorentzPoint& at) {
  const LorentzPoint& p = unit.base();
  const double sk = p.curvature().sqrt();
  const double theta = sk * t;
  Vector v = (sk * std::sinh(theta)) * p.coords() + std::cosh(theta) * unit.coords();
  return TangentVector(std::move(v), at);
}

// log_p(q) = arcosh(a)/sqrt(a^2-1) * (q - a p), a = -kappa <p,q>_L.
//
// Evaluated as d * u / |u|_L with u the tangent projection of (q - p) and d the
// geodesic distance. Returns the exact zero vector when u vanishes.
inline TangentVector log_map(const LorentzPoint& base, const LorentzPoint& target) {
  require_compatible(base, target);
  const Vector delta = target.coords() - base.coords();
  if (delta.isZero(0.0)) return TangentVector::zero(base);
  const Vector u = project_to_tangent(delta, base);
  const double u_sq = lorentz_inner(u, u);
  if (!(u_sq > 0.0)) return TangentVector::zero(base);
  const double d = geodesic_distance(base, target);
  Vector v = (d / std::sqrt(u_sq)) * u;
  v = project_to_tangent(v, base);
  return TangentVector(std::move(v), base);
}

// PT_{p->q}(v) = v + <v,q>_L / (1/kappa - <p,q>_L) * (p + q).
inline TangentVector parallel_transport(const TangentVector& v, const LorentzPoint& to) {
  const LorentzPoint& from = v.base();
  require_compatible(from, to);
  const double k = from.curvature().value();
  const double denom = 1.0 / k - lorentz_inner(from.coords(), to.coords());
  const double coef = lorentz_inner(v.coords(), to.coords()) / denom;
  Vector out = v.coords() + coef * (from.coords() + to.coords());
  out = project_to_tangent(out, to);
  return TangentVector(std::move(out), to);
}

inline TangentVector parallel_transport(const Eigen::Ref<const Vector>& v, const LorentzPoint& from,
                                        const LorentzPoint& to) {
  return parallel_transport(TangentVector(Vector(v), from), to);
}

// log at the sheet origin, returned as its n spatial coordinates (the time
// component of a tangent vector at the origin is zero).
inline Vector log_at_origin(const LorentzPoint& x) {
  const double sk = x.curvature().sqrt();
  const Vector xs = x.spatial();
  const double r = xs.norm();
  if (r == 0.0) return Vector::Zero(xs.size());
  const double t = sk * r;
  return (std::asinh(t) / t) * xs;
}

inline LorentzPoint exp_at_origin(const Eigen::Ref<const Vector>& u, Curvature c) {
  const double sk = c.sqrt();
  const double theta = sk * u.norm();
  // Spatial part of exp_o(u) is sinh(theta)/sqrt(k) * u/|u|.
  return lift(detail::sinhc(theta) * u, c);
}

// Hyperboloid to Poincare ball of radius R = 1/sqrt(kappa): R x_s / (x0 + R).
inline Vector poincare_project(const LorentzPoint& x) {
  const double r = 1.0 / x.curvature().sqrt();
  return r * x.spatial() / (x.time() + r);
}

}  // namespace hycon
