#pragma once

// Concept directions and geodesic steering.
//
// A concept direction is r = log_{mu+}(mu-) where mu+/mu- are the Frechet means
// of the concept-present and concept-absent embeddings. To steer a new point z
// the direction is parallel-transported from mu+ to z, normalized to unit
// Lorentz norm and followed for arclength lambda: z' = exp_z(lambda * r_hat).

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hycon/cones.hpp"
#include "hycon/embedding_set.hpp"
#include "hycon/errors.hpp"
#include "hycon/frechet.hpp"
#include "hycon/lorentz.hpp"

namespace hycon {

inline constexpr double kDegenerateNorm = 1e-9;
inline constexpr double kAnchorLandingTolerance = 1e-8;

class ConceptDirection {
 public:
  ConceptDirection(LorentzPoint anchor, TangentVector direction, LorentzPoint negative_centroid,
                   std::string concept_name = {}, std::vector<std::string> provenance = {})
      : anchor_(std::move(anchor)),
        direction_(std::move(direction)),
        negative_centroid_(std::move(negative_centroid)),
        concept_(std::move(concept_name)),
        provenance_(std::move(provenance)) {
    require_compatible(anchor_, negative_centroid_);
    if (!(direction_.base() == anchor_)) {
      throw InvalidTangentError("concept direction is not anchored at its positive centroid");
    }
    if (lorentz_norm(direction_) < kDegenerateNorm) {
      throw DegenerateError("concept direction '" + concept_ +
                            "' is degenerate: positive and negative centroids coincide");
    }
    const double miss = geodesic_distance(exp_map(direction_), negative_centroid_);
    if (miss > kAnchorLandingTolerance) {
      std::ostringstream os;
      os << "concept direction does not reach its negative centroid (miss " << miss << ")";
      throw ValidationError(os.str());
    }
  }

  const LorentzPoint& anchor() const noexcept { return anchor_; }
  const TangentVector& direction() const noexcept { return direction_; }
  const LorentzPoint& negative_centroid() const noexcept { return negative_centroid_; }
  const std::string& concept_name() const noexcept { return concept_; }
  const std::vector<std::string>& provenance() const noexcept { return provenance_; }
  double length() const { return lorentz_norm(direction_); }

 private:
  LorentzPoint anchor_;
  TangentVector direction_;
  LorentzPoint negative_centroid_;
  std::string concept_;
  std::vector<std::string> provenance_;
};

inline ConceptDirection direction_between(const LorentzPoint& positive_centroid,
                                          const LorentzPoint& negative_centroid, std::string concept_name = {},
                                          std::vector<std::string> provenance = {}) {
  require_compatible(positive_centroid, negative_centroid);
  if (geodesic_distance(positive_centroid, negative_centroid) <= kDegenerateNorm) {
    throw DegenerateError("degenerate concept direction for '" + concept_name +
                          "': positive and negative sets are indistinguishable");
  }
  return ConceptDirection(positive_centroid, log_map(positive_centroid, negative_centroid),
                          negative_centroid, std::move(concept_name), std::move(provenance));
}

inline std::vector<LorentzPoint> lorentz_points(const EmbeddingSet& set, const char* role) {
  if (!set.is_lorentz()) throw ConfigError(std::string(role) + " set must be in a Lorentz space");
  if (set.size() == 0) throw EmptySetError(std::string(role) + " set is empty");
  return set.points();
}

// Frechet means of both sets followed by r = log_{mu+}(mu-).
inline ConceptDirection build_concept_direction(const EmbeddingSet& positives, const EmbeddingSet& negatives,
                                                const FrechetConfig& config = {},
                                                std::string concept_name = {}) {
  const auto pos = lorentz_points(positives, "positive");
  const auto neg = lorentz_points(negatives, "negative");
  require_compatible(pos.front(), neg.front());
  const auto mu_pos = frechet_mean(pos, config);
  const auto mu_neg = frechet_mean(neg, config);
  std::vector<std::string> provenance{positives.metadata().source, negatives.metadata().source};
  return direction_between(mu_pos.mean, mu_neg.mean, std::move(concept_name), std::move(provenance));
}

// PT_{mu+ -> z}(r) / |PT_{mu+ -> z}(r)|_L.
inline TangentVector unit_direction_at(const LorentzPoint& z, const ConceptDirection& direction) {
  require_compatible(z, direction.anchor());
  const TangentVector moved = parallel_transport(direction.direction(), z);
  const double norm = lorentz_norm(moved);
  if (norm < kDegenerateNorm) {
    throw DegenerateError("transported concept direction has vanishing norm");
  }
  return moved.scaled(1.0 / norm);
}

struct SteerRequest {
  LorentzPoint input;
  const ConceptDirection& direction;
  // Signed arclength; negative values walk against the direction.
  double lambda = 3.0;
};

struct SteerOutcome {
  LorentzPoint point;
  // Unit velocity of the steering geodesic at `point` (the transported unit
  // direction, evaluated in closed form).
  TangentVector velocity;
};

inline SteerOutcome steer_with_velocity(const SteerRequest& req) {
  if (!std::isfinite(req.lambda)) throw ConfigError("steering strength must be finite");
  const TangentVector unit = unit_direction_at(req.input, req.direction);
  const LorentzPoint out = geodesic_point(unit, req.lambda);
  const double sign = req.lambda < 0.0 ? -1.0 : 1.0;
  TangentVector velocity = geodesic_velocity(unit, req.lambda, out).scaled(sign);
  return {out, std::move(velocity)};
}

inline LorentzPoint steer(const SteerRequest& req) {
  if (!std::isfinite(req.lambda)) throw ConfigError("steering strength must be finite");
  return exp_map(unit_direction_at(req.input, req.direction).scaled(req.lambda));
}

inline LorentzPoint steer(const LorentzPoint& z, const ConceptDirection& direction, double lambda) {
  return steer(SteerRequest{z, direction, lambda});
}

// Walks back along the geodesic that produced `outcome`, following -v from the
// intermediate point for arclength |lambda|. Returns the original input.
inline LorentzPoint reverse_step(const SteerOutcome& outcome, double lambda) {
  return geodesic_point(outcome.velocity.scaled(-1.0), std::abs(lambda));
}

struct SweepPoint {
  double lambda = 0.0;
  LorentzPoint point;
  double distance = 0.0;  // geodesic distance from the input
  std::vector<double> margins;  // one per cone, in the order given
};

inline std::vector<SweepPoint> steer_sweep(const LorentzPoint& input, const ConceptDirection& direction,
                                           std::span<const double> lambdas,
                                           std::span<const EntailmentCone> cones = {}) {
  const TangentVector unit = unit_direction_at(input, direction);
  std::vector<SweepPoint> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    if (!std::isfinite(lambda)) throw ConfigError("steering strength must be finite");
    LorentzPoint p = exp_map(unit.scaled(lambda));
    SweepPoint sp{lambda, p, geodesic_distance(input, p), {}};
    for (const auto& cone : cones) sp.margins.push_back(contains(cone, p).margin);
    out.push_back(std::move(sp));
  }
  return out;
}

// Euclidean refusal-vector baseline.
class EuclideanRefusalVector {
 public:
  explicit EuclideanRefusalVector(Vector v, std::string concept_name = {})
      : vector_(std::move(v)), concept_(std::move(concept_name)) {
    if (!vector_.allFinite()) throw NumericError("non-finite refusal vector");
    if (vector_.norm() == 0.0) throw DegenerateError("refusal vector has zero norm");
  }

  const Vector& vector() const noexcept { return vector_; }
  const std::string& concept_name() const noexcept { return concept_; }

 private:
  Vector vector_;
  std::string concept_;
};

// x' = x - lambda <x,v>/|v|^2 v.
inline Vector euclidean_refusal_steer(const Eigen::Ref<const Vector>& x, const EuclideanRefusalVector& v,
                                      double lambda) {
  if (x.size() != v.vector().size()) throw DimensionError("refusal vector and input differ in length");
  const Vector& r = v.vector();
  return x - lambda * (x.dot(r) / r.squaredNorm()) * r;
}

// mean(positives) - mean(negatives).
inline EuclideanRefusalVector build_euclidean_refusal(const EmbeddingSet& positives,
                                                      const EmbeddingSet& negatives,
                                                      std::string concept_name = {}) {
  if (positives.space() != Space::euclidean || negatives.space() != Space::euclidean) {
    throw ConfigError("Euclidean refusal vectors need Euclidean embedding sets");
  }
  if (positives.size() == 0 || negatives.size() == 0) throw EmptySetError("refusal vector from an empty set");
  if (positives.dim() != negatives.dim()) throw DimensionError("positive and negative sets differ in dimension");
  const Vector diff = positives.rows().colwise().mean().transpose() - negatives.rows().colwise().mean().transpose();
  if (diff.norm() == 0.0) throw DegenerateError("positive and negative means coincide");
  return EuclideanRefusalVector(diff, std::move(concept_name));
}

}  // namespace hycon
