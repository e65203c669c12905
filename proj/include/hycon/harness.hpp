#pragma once

// Desk-scale experiments on synthetic hierarchies.
//
// Tag conventions for generated rows:
//   {c, "@prompt"}  concept-present prompt for concept c (sits on the apex)
//   {"@prompt"}     neutral, concept-absent prompt
//   {c}             member of concept c, sampled inside its cone
//   {c1, c2, ...}   composite sample inside the intersection of the cones
//   {}              background sample outside every cone
//   {"@query"}      retrieval query outside every cone
// Tags starting with '@' are roles, not concepts.
//
// CLIPScore, NudeNet and GPT-4o metrics are replaced throughout by
// geometry-level oracles (cone membership, geodesic ranking, cosine
// similarity in a Euclidean companion space).

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hycon/cones.hpp"
#include "hycon/embedding_set.hpp"
#include "hycon/errors.hpp"
#include "hycon/frechet.hpp"
#include "hycon/lorentz.hpp"
#include "hycon/parallel.hpp"
#include "hycon/steering.hpp"

namespace hycon {

inline constexpr const char* kPromptTag = "@prompt";
inline constexpr const char* kQueryTag = "@query";
inline constexpr const char* kMetricSubstitution =
    "image-level metrics (CLIPScore, NudeNet, GPT-4o) are replaced by geometry-level oracles: "
    "cone membership, geodesic ranking and companion-space cosine similarity";

inline bool is_role_tag(const std::string& t) { return !t.empty() && t.front() == '@'; }

// Concept tags of a row with role tags removed.
inline TagSet concept_tags(const TagSet& tags) {
  TagSet out;
  for (const auto& t : tags) {
    if (!is_role_tag(t)) out.push_back(t);
  }
  return out;
}

struct ConceptSpec {
  std::string name;
  double apex_norm = 0.25;  // spatial norm |x_s| of the apex
  std::uint64_t direction_seed = 0;
  // Explicit apex direction; drawn from direction_seed when empty.
  std::vector<double> direction;
};

struct CompositeSpec {
  std::vector<std::string> concepts;
  std::size_t count = 0;
};

struct HierarchySpec {
  std::size_t dim = 8;
  double kappa = 1.0;
  double boundary_const = kDefaultBoundaryConst;
  std::vector<ConceptSpec> concepts;
  std::size_t samples_per_concept = 100;
  std::vector<CompositeSpec> composites;
  // Members draw their exterior angle from [0, aperture_fill * omega].
  double aperture_fill = 0.5;
  // Geodesic distance of members beyond their apex.
  double radial_min = 0.5;
  double radial_max = 2.0;
  std::size_t prompts_per_concept = 16;
  double prompt_radius = 0.02;
  std::size_t neutral_prompts = 0;
  std::size_t background = 0;
  std::size_t queries = 0;
  // Background, neutral prompts and queries sit within this geodesic radius.
  double background_radius = 0.6;
  // Angular jitter of composite directions, radians.
  double composite_jitter = 0.03;
  std::size_t composite_retries = 16;
  // Euclidean companion rows are produced when companion_dim > 0.
  std::size_t companion_dim = 0;
  double planted_margin = 0.5;
  std::uint64_t noise_seed = 0;

  void validate() const {
    if (dim < 2) throw ConfigError("hierarchy dimension must be >= 2");
    Curvature{kappa};
    if (!(boundary_const > 0.0)) throw ConfigError("boundary constant must be positive");
    if (!(aperture_fill > 0.0 && aperture_fill < 1.0)) throw ConfigError("aperture_fill must lie in (0, 1)");
    if (!(radial_min >= 0.0 && radial_max >= radial_min)) throw ConfigError("invalid radial band");
    if (!(prompt_radius >= 0.0) || !(background_radius > 0.0)) throw ConfigError("invalid radii");
    std::set<std::string> names;
    for (const auto& c : concepts) {
      if (c.name.empty() || is_role_tag(c.name)) throw ConfigError("invalid concept name '" + c.name + "'");
      if (!names.insert(c.name).second) throw ConfigError("duplicate concept '" + c.name + "'");
      if (!(c.apex_norm > 0.0)) throw ConfigError("apex norm of '" + c.name + "' must be positive");
      if (!c.direction.empty() && c.direction.size() != dim) {
        throw ConfigError("apex direction of '" + c.name + "' has the wrong length");
      }
    }
    for (const auto& t : composites) {
      if (t.concepts.size() < 2) throw ConfigError("composites need at least two concepts");
      for (const auto& n : t.concepts) {
        if (!names.count(n)) throw ConfigError("composite names unknown concept '" + n + "'");
      }
    }
    if (companion_dim > 0 && companion_dim < concepts.size() + 2) {
      throw ConfigError("companion_dim must exceed the concept count by at least 2");
    }
    if (companion_dim > 0 && !(planted_margin > 0.0 && planted_margin < 0.7)) {
      throw ConfigError("planted_margin must lie in (0, 0.7)");
    }
  }
};

// Reads a hierarchy spec from JSON. Keys mirror the HierarchySpec fields;
// unknown keys are rejected.
inline HierarchySpec hierarchy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("hierarchy spec must be a JSON object");
  HierarchySpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dim") s.dim = v.get<std::size_t>();
      else if (key == "kappa") s.kappa = v.get<double>();
      else if (key == "boundary_const") s.boundary_const = v.get<double>();
      else if (key == "samples_per_concept") s.samples_per_concept = v.get<std::size_t>();
      else if (key == "aperture_fill") s.aperture_fill = v.get<double>();
      else if (key == "radial_min") s.radial_min = v.get<double>();
      else if (key == "radial_max") s.radial_max = v.get<double>();
      else if (key == "prompts_per_concept") s.prompts_per_concept = v.get<std::size_t>();
      else if (key == "prompt_radius") s.prompt_radius = v.get<double>();
      else if (key == "neutral_prompts") s.neutral_prompts = v.get<std::size_t>();
      else if (key == "background") s.background = v.get<std::size_t>();
      else if (key == "queries") s.queries = v.get<std::size_t>();
      else if (key == "background_radius") s.background_radius = v.get<double>();
      else if (key == "composite_jitter") s.composite_jitter = v.get<double>();
      else if (key == "composite_retries") s.composite_retries = v.get<std::size_t>();
      else if (key == "companion_dim") s.companion_dim = v.get<std::size_t>();
      else if (key == "planted_margin") s.planted_margin = v.get<double>();
      else if (key == "noise_seed") s.noise_seed = v.get<std::uint64_t>();
      else if (key == "concepts") {
        for (const auto& c : v) {
          ConceptSpec cs;
          cs.name = c.at("name").get<std::string>();
          cs.apex_norm = c.value("apex_norm", cs.apex_norm);
          cs.direction_seed = c.value("direction_seed", cs.direction_seed);
          cs.direction = c.value("direction", cs.direction);
          s.concepts.push_back(std::move(cs));
        }
      } else if (key == "composites") {
        for (const auto& c : v) {
          s.composites.push_back({c.at("concepts").get<std::vector<std::string>>(), c.at("count").get<std::size_t>()});
        }
      } else {
        throw ConfigError("unknown hierarchy spec key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed hierarchy spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::string tuple_name(const std::vector<std::string>& concepts) {
  std::string s;
  for (std::size_t i = 0; i < concepts.size(); ++i) s += (i ? "+" : "") + concepts[i];
  return s;
}

struct SyntheticWorld {
  EmbeddingSet set;
  std::optional<EmbeddingSet> companion;
  // Cones at the planted apexes, in spec order.
  std::vector<EntailmentCone> planted_cones;
};

namespace harness_detail {

using Rng = std::mt19937_64;

inline Vector gaussian(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline Vector unit_gaussian(Rng& rng, Eigen::Index n) {
  Vector v;
  do {
    v = gaussian(rng, n);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

// Random unit vector orthogonal to the unit vector `axis`.
inline Vector unit_orthogonal(Rng& rng, const Vector& axis) {
  for (;;) {
    Vector g = gaussian(rng, axis.size());
    g -= g.dot(axis) * axis;
    if (g.norm() > 1e-9) return g.normalized();
  }
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

// exp at `apex` of t * (cos(theta) e_r + sin(theta) e_perp), where e_r is the
// outward radial direction and e_perp a unit direction transported from the
// origin. The exterior angle of the result at `apex` is theta.
inline LorentzPoint sample_in_cone(const LorentzPoint& apex, double theta, double t, Rng& rng) {
  const Vector axis = apex.spatial().normalized();
  const Vector w = unit_orthogonal(rng, axis);
  Vector perp_at_origin = Vector::Zero(apex.coords().size());
  perp_at_origin.tail(apex.dim()) = w;
  const LorentzPoint o = origin(apex.dim(), apex.curvature());
  const TangentVector e_perp = parallel_transport(perp_at_origin, o, apex);
  const TangentVector e_r = outward_radial(apex);
  const Vector mix = std::cos(theta) * e_r.coords() + std::sin(theta) * e_perp.coords();
  return exp_map(apex, project_to_tangent(t * mix, apex));
}

inline bool inside_any(std::span<const EntailmentCone> cones, const LorentzPoint& y, double guard) {
  for (const auto& cone : cones) {
    if (geodesic_distance(cone.apex(), y) <= kCoincidentTolerance) return true;
    if (contains(cone, y).margin > -guard) return true;
  }
  return false;
}

}  // namespace harness_detail

inline SyntheticWorld generate_hierarchy(const HierarchySpec& spec) {
  using namespace harness_detail;
  spec.validate();
  const Curvature c(spec.kappa);
  const auto n = static_cast<Eigen::Index>(spec.dim);
  Rng rng(spec.noise_seed);

  std::vector<EntailmentCone> cones;
  std::map<std::string, std::size_t> index;
  for (const auto& cs : spec.concepts) {
    Vector dir;
    if (cs.direction.empty()) {
      Rng drng(cs.direction_seed);
      dir = unit_gaussian(drng, n);
    } else {
      dir = Eigen::Map<const Vector>(cs.direction.data(), n);
      if (dir.norm() == 0.0) throw ConfigError("apex direction of '" + cs.name + "' is zero");
      dir.normalize();
    }
    index[cs.name] = cones.size();
    cones.emplace_back(lift(cs.apex_norm * dir, c), spec.boundary_const, cs.name);
  }

  std::vector<LorentzPoint> pts;
  std::vector<std::string> labels;
  std::vector<TagSet> tags;
  auto push = [&](LorentzPoint p, std::string label, TagSet t) {
    pts.push_back(std::move(p));
    labels.push_back(std::move(label));
    tags.push_back(make_tags(std::move(t)));
  };

  for (const auto& cone : cones) {
    const std::string& name = cone.label();
    for (std::size_t i = 0; i < spec.prompts_per_concept; ++i) {
      const Vector u = project_to_tangent(gaussian(rng, n + 1), cone.apex());
      const double len = lorentz_norm(u);
      const double r = uniform(rng, 0.0, spec.prompt_radius);
      push(len > 0.0 ? exp_map(cone.apex(), (r / len) * u) : cone.apex(), name + "/prompt/" + std::to_string(i),
           {name, kPromptTag});
    }
    const double omega = half_aperture(cone);
    for (std::size_t i = 0; i < spec.samples_per_concept; ++i) {
      const double theta = uniform(rng, 0.0, spec.aperture_fill * omega);
      const double t = uniform(rng, spec.radial_min, spec.radial_max);
      push(sample_in_cone(cone.apex(), theta, t, rng), name + "/" + std::to_string(i), {name});
    }
  }

  const LorentzPoint o = origin(n, c);
  for (const auto& comp : spec.composites) {
    std::vector<LorentzPoint> apexes;
    std::vector<EntailmentCone> parents;
    for (const auto& name : comp.concepts) {
      parents.push_back(cones[index.at(name)]);
      apexes.push_back(parents.back().apex());
    }
    FrechetConfig fc;
    fc.step_size = 1.0;
    const LorentzPoint mean = frechet_mean(apexes, fc).mean;
    const Vector axis = mean.spatial().normalized();
    const double start = geodesic_distance(o, mean);
    constexpr double kStep = 0.05;
    constexpr double kMaxRadius = 12.0;

    // Radius along `dir` at which the ray from the origin enters all parents.
    auto entry_radius = [&](const Vector& dir) -> std::optional<double> {
      for (double rho = start; rho <= kMaxRadius; rho += kStep) {
        if (intersection_contains(parents, exp_at_origin(rho * dir, c))) return rho;
      }
      return std::nullopt;
    };
    if (!entry_radius(axis)) {
      throw GenerationError("composite '" + tuple_name(comp.concepts) +
                            "' is infeasible: the parent cones do not intersect along the mean direction");
    }
    const std::string name = tuple_name(comp.concepts);
    TagSet ctags(comp.concepts.begin(), comp.concepts.end());
    for (std::size_t i = 0; i < comp.count; ++i) {
      std::optional<LorentzPoint> sample;
      for (std::size_t attempt = 0; attempt <= spec.composite_retries && !sample; ++attempt) {
        const Vector jitter = unit_orthogonal(rng, axis);
        const double ang = std::abs(std::normal_distribution<double>(0.0, spec.composite_jitter)(rng));
        const Vector dir = (std::cos(ang) * axis + std::sin(ang) * jitter).normalized();
        const double extra = uniform(rng, spec.radial_min, spec.radial_max);
        if (auto rho = entry_radius(dir)) {
          sample = exp_at_origin((*rho + extra) * dir, c);
        } else if (attempt == spec.composite_retries) {
          // Retries exhausted; keep the unpushed attempt so the census sees it.
          sample = exp_at_origin((start + extra) * dir, c);
        }
      }
      push(*sample, name + "/" + std::to_string(i), ctags);
    }
  }

  // Rows near the origin and outside every cone.
  auto sample_outside = [&](const std::string& what) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const Vector dir = unit_gaussian(rng, n);
      const double rho = uniform(rng, 0.05 * spec.background_radius, spec.background_radius);
      LorentzPoint p = exp_at_origin(rho * dir, c);
      if (!inside_any(cones, p, 0.05)) return p;
    }
    throw GenerationError("could not place a " + what + " row outside every cone");
  };
  for (std::size_t i = 0; i < spec.neutral_prompts; ++i) {
    push(sample_outside("neutral prompt"), "neutral/prompt/" + std::to_string(i), {kPromptTag});
  }
  for (std::size_t i = 0; i < spec.background; ++i) {
    push(sample_outside("background"), "background/" + std::to_string(i), {});
  }
  for (std::size_t i = 0; i < spec.queries; ++i) {
    push(sample_outside("query"), "query/" + std::to_string(i), {kQueryTag});
  }

  SetMetadata meta{spec.boundary_const, "synthetic hierarchy (seed " + std::to_string(spec.noise_seed) + ")"};
  EmbeddingSet set = pts.empty() ? EmbeddingSet(Space::lorentz_full, EmbeddingSet::Matrix(0, n + 1), c, {}, {}, meta)
                                 : EmbeddingSet::from_points(pts, labels, tags, meta);

  std::optional<EmbeddingSet> companion;
  if (spec.companion_dim > 0) {
    // Concept c owns axis c. Prompts sit exactly on their axis; members have
    // own-axis cosine in [margin + 0.1, margin + 0.3] and at most 0.05 on any
    // other concept axis, so own minus other similarity exceeds the planted
    // margin row by row.
    const auto m = static_cast<Eigen::Index>(spec.companion_dim);
    const auto k = static_cast<Eigen::Index>(cones.size());
    Rng crng(spec.noise_seed ^ 0x9e3779b97f4a7c15ULL);
    EmbeddingSet::Matrix rows(static_cast<Eigen::Index>(pts.size()), m);
    auto complement_unit = [&] {
      Vector w = Vector::Zero(m);
      w.tail(m - k) = unit_gaussian(crng, m - k);
      return w;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const TagSet concepts_here = concept_tags(tags[i]);
      Vector u = Vector::Zero(m);
      if (concepts_here.empty()) {
        u = complement_unit();
      } else if (has_tag(tags[i], kPromptTag)) {
        for (const auto& cn : concepts_here) u(static_cast<Eigen::Index>(index.at(cn))) = 1.0;
        u.normalize();
      } else {
        const double own = uniform(crng, spec.planted_margin + 0.1, spec.planted_margin + 0.3);
        const double share = own / std::sqrt(static_cast<double>(concepts_here.size()));
        for (Eigen::Index j = 0; j < k; ++j) u(j) = uniform(crng, -0.05, 0.05);
        for (const auto& cn : concepts_here) u(static_cast<Eigen::Index>(index.at(cn))) = share;
        const double rest = 1.0 - u.head(k).squaredNorm();
        u += std::sqrt(std::max(rest, 0.0)) * complement_unit();
      }
      rows.row(static_cast<Eigen::Index>(i)) = u.transpose();
    }
    companion = EmbeddingSet(Space::euclidean, std::move(rows), std::nullopt, labels, tags,
                             SetMetadata{std::nullopt, "companion of " + meta.source});
  }
  return {std::move(set), std::move(companion), std::move(cones)};
}

// Cones rooted at the Frechet mean of each concept's prompt rows.
inline std::vector<EntailmentCone> cones_from_prompts(const EmbeddingSet& set, const std::vector<std::string>& concepts,
                                                      double boundary_const, const FrechetConfig& config = {}) {
  std::vector<EntailmentCone> cones;
  for (const auto& name : concepts) {
    const EmbeddingSet prompts = set.select_exact({name, kPromptTag});
    if (prompts.size() == 0) throw EmptySetError("no prompt rows for concept '" + name + "'");
    cones.emplace_back(frechet_mean(prompts.points(), config).mean, boundary_const, name);
  }
  return cones;
}

// --- census ---------------------------------------------------------------

struct CensusRow {
  std::vector<std::string> concepts;
  std::size_t count = 0;
  std::size_t inside = 0;
  double fraction() const { return count ? static_cast<double>(inside) / static_cast<double>(count) : 0.0; }
};

struct CensusTable {
  double boundary_const = 0.0;
  std::vector<CensusRow> rows;
};

// For each tuple, the fraction of rows tagged with exactly that concept set
// (prompts excluded) that lie in the intersection of the tuple's cones.
inline CensusTable cone_census(const EmbeddingSet& set, std::span<const EntailmentCone> cones,
                               const std::vector<std::vector<std::string>>& tuples, unsigned threads = 1) {
  std::map<std::string, const EntailmentCone*> by_name;
  for (const auto& cone : cones) by_name[cone.label()] = &cone;
  CensusTable table;
  if (!cones.empty()) table.boundary_const = cones.front().boundary_const();
  const auto pts = set.is_lorentz() ? set.points() : throw ConfigError("census needs a Lorentz set");
  for (const auto& tuple : tuples) {
    if (tuple.empty()) throw ConfigError("census tuple is empty");
    std::vector<EntailmentCone> sel;
    for (const auto& name : tuple) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ConfigError("census names unknown concept '" + name + "'");
      sel.push_back(*it->second);
    }
    const TagSet want = make_tags(tuple);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!has_tag(set.tags()[i], kPromptTag) && concept_tags(set.tags()[i]) == want) rows.push_back(i);
    }
    std::vector<char> in(rows.size(), 0);
    parallel_for(rows.size(), threads, [&](std::size_t r) {
      const LorentzPoint& y = pts[rows[r]];
      bool ok = true;
      for (const auto& cone : sel) {
        if (geodesic_distance(cone.apex(), y) <= kCoincidentTolerance || !contains(cone, y).inside) {
          ok = false;
          break;
        }
      }
      in[r] = ok;
    });
    CensusRow row{tuple, rows.size(), static_cast<std::size_t>(std::count(in.begin(), in.end(), 1))};
    table.rows.push_back(std::move(row));
  }
  return table;
}

// --- retrieval -------------------------------------------------------------

struct RankedHit {
  std::size_t row = 0;
  double distance = 0.0;
  bool member = false;  // row carries the cone's concept tag
};

struct RankedList {
  std::vector<RankedHit> hits;
  bool truncated = false;  // k exceeded the gallery size
};

// Gallery rows ranked by geodesic distance to `query`, ties broken by row
// index; each hit is flagged when it is tagged with the cone's concept.
inline RankedList cone_retrieve(const EmbeddingSet& gallery, const std::vector<LorentzPoint>& gallery_points,
                                const EntailmentCone& cone, const LorentzPoint& query, std::size_t k) {
  if (k < 1) throw ConfigError("retrieval depth k must be >= 1");
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(gallery_points.size());
  for (std::size_t i = 0; i < gallery_points.size(); ++i) {
    order.emplace_back(geodesic_distance(query, gallery_points[i]), i);
  }
  RankedList out;
  out.truncated = k > order.size();
  const std::size_t take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
  for (std::size_t r = 0; r < take; ++r) {
    const std::size_t row = order[r].second;
    out.hits.push_back({row, order[r].first, has_tag(gallery.tags()[row], cone.label())});
  }
  return out;
}

inline RankedList cone_retrieve(const EmbeddingSet& gallery, const EntailmentCone& cone, const LorentzPoint& query,
                                std::size_t k) {
  return cone_retrieve(gallery, gallery.points(), cone, query, k);
}

inline constexpr std::array<std::size_t, 3> kRecallDepths{1, 5, 10};

struct RecallRow {
  std::string target;  // "caption" for the unsteered queries
  double lambda = 0.0;
  // recall[cone][j] is R@kRecallDepths[j].
  std::vector<std::array<double, 3>> recall;
  // margins[query][cone] of the (steered) query.
  std::vector<std::vector<double>> margins;
  // Queries counted as an R@1 hit for the target cone while lying outside it.
  std::size_t hits_outside_target = 0;
};

struct RetrievalReport {
  std::vector<std::string> cones;
  std::string control;
  std::vector<double> lambdas;
  RecallRow caption;
  std::vector<RecallRow> sweep;  // every (target, lambda)
  std::vector<RecallRow> best;   // best lambda per target
  std::string config_digest;
  std::string note = kMetricSubstitution;
};

inline RecallRow evaluate_queries(const EmbeddingSet& gallery, const std::vector<LorentzPoint>& gallery_points,
                                  std::span<const EntailmentCone> cones, const std::vector<LorentzPoint>& queries,
                                  std::string target, double lambda, unsigned threads) {
  RecallRow row;
  row.target = std::move(target);
  row.lambda = lambda;
  row.margins.assign(queries.size(), std::vector<double>(cones.size(), 0.0));
  std::vector<std::vector<std::array<char, 3>>> hit(queries.size(), std::vector<std::array<char, 3>>(cones.size()));
  const std::size_t depth = kRecallDepths.back();
  parallel_for(queries.size(), threads, [&](std::size_t q) {
    for (std::size_t ci = 0; ci < cones.size(); ++ci) {
      const auto ranked = cone_retrieve(gallery, gallery_points, cones[ci], queries[q], depth);
      for (std::size_t j = 0; j < kRecallDepths.size(); ++j) {
        bool h = false;
        for (std::size_t r = 0; r < std::min(kRecallDepths[j], ranked.hits.size()); ++r) h = h || ranked.hits[r].member;
        hit[q][ci][j] = h;
      }
      const bool coincident = geodesic_distance(cones[ci].apex(), queries[q]) <= kCoincidentTolerance;
      row.margins[q][ci] = coincident ? 0.0 : contains(cones[ci], queries[q]).margin;
    }
  });
  row.recall.assign(cones.size(), {0.0, 0.0, 0.0});
  for (std::size_t ci = 0; ci < cones.size(); ++ci) {
    for (std::size_t j = 0; j < kRecallDepths.size(); ++j) {
      std::size_t total = 0;
      for (std::size_t q = 0; q < queries.size(); ++q) total += hit[q][ci][j];
      row.recall[ci][j] = queries.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(queries.size());
    }
    if (cones[ci].label() == row.target) {
      for (std::size_t q = 0; q < queries.size(); ++q) {
        if (hit[q][ci][0] && row.margins[q][ci] < 0.0) ++row.hits_outside_target;
      }
    }
  }
  return row;
}

// Steers every query towards each target concept for every lambda and
// measures R@K into all cones. `directions` pairs a target concept name with
// its (concept-adding) direction.
inline RetrievalReport steering_retrieval_experiment(const EmbeddingSet& gallery, std::span<const EntailmentCone> cones,
                                                     const std::vector<ConceptDirection>& directions,
                                                     const std::vector<double>& lambdas,
                                                     const std::vector<LorentzPoint>& queries,
                                                     const std::string& control = {}, unsigned threads = 1) {
  if (lambdas.empty()) throw ConfigError("retrieval experiment needs at least one lambda");
  const std::vector<LorentzPoint> gallery_points = gallery.points();
  RetrievalReport report;
  for (const auto& cone : cones) report.cones.push_back(cone.label());
  report.control = control;
  report.lambdas = lambdas;
  report.caption = evaluate_queries(gallery, gallery_points, cones, queries, "caption", 0.0, threads);

  for (const auto& dir : directions) {
    const auto target_it = std::find(report.cones.begin(), report.cones.end(), dir.concept_name());
    if (target_it == report.cones.end()) {
      throw ConfigError("direction targets '" + dir.concept_name() + "', which has no cone");
    }
    const std::size_t ti = static_cast<std::size_t>(target_it - report.cones.begin());
    std::optional<std::size_t> best;
    for (double lambda : lambdas) {
      std::vector<LorentzPoint> steered(queries.size(), queries.empty() ? origin(1, Curvature{}) : queries.front());
      parallel_for(queries.size(), threads, [&](std::size_t q) { steered[q] = steer(queries[q], dir, lambda); });
      report.sweep.push_back(
          evaluate_queries(gallery, gallery_points, cones, steered, dir.concept_name(), lambda, threads));
      const auto& cur = report.sweep.back().recall[ti];
      if (!best || cur > report.sweep[*best].recall[ti]) best = report.sweep.size() - 1;
    }
    report.best.push_back(report.sweep[*best]);
  }
  return report;
}

// --- alignment study ----------------------------------------------------------

struct AlignmentRow {
  std::string concept_name;
  std::size_t retrieved = 0;
  std::vector<double> own;
  std::vector<double> other;
  double median_own = 0.0;
  double median_other = 0.0;
  double separation() const { return median_own - median_other; }
};

struct AlignmentReport {
  std::vector<AlignmentRow> rows;
  std::size_t overlap = 0;  // retrieved rows that fall in more than one cone
  std::string note = kMetricSubstitution;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline double cosine(const Vector& a, const Vector& b) {
  const double den = a.norm() * b.norm();
  return den > 0.0 ? a.dot(b) / den : 0.0;
}

// For the rows inside each cone, cosine similarity of their companion vectors
// to the cone's own concept centroid versus every other concept's centroid.
// Centroids are means of the companion vectors of each concept's prompt rows.
inline AlignmentReport alignment_study(const EmbeddingSet& set, std::span<const EntailmentCone> cones,
                                       const EmbeddingSet& companion, unsigned threads = 1) {
  if (companion.size() != set.size()) {
    std::ostringstream os;
    os << "companion has " << companion.size() << " rows, expected " << set.size();
    throw ConfigError(os.str());
  }
  if (companion.space() != Space::euclidean) throw ConfigError("companion must be a Euclidean set");
  std::vector<Vector> centroids;
  for (const auto& cone : cones) {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(companion.dim()));
    std::size_t count = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.tags()[i] == make_tags({cone.label(), kPromptTag})) {
        sum += companion.vector(i);
        ++count;
      }
    }
    if (count == 0) throw EmptySetError("no prompt rows for concept '" + cone.label() + "'");
    centroids.push_back(sum / static_cast<double>(count));
  }
  const auto pts = set.points();
  std::vector<std::vector<char>> inside(set.size(), std::vector<char>(cones.size(), 0));
  parallel_for(set.size(), threads, [&](std::size_t i) {
    if (has_tag(set.tags()[i], kPromptTag) || has_tag(set.tags()[i], kQueryTag)) return;
    for (std::size_t c = 0; c < cones.size(); ++c) {
      if (geodesic_distance(cones[c].apex(), pts[i]) <= kCoincidentTolerance) continue;
      inside[i][c] = contains(cones[c], pts[i]).inside;
    }
  });
  AlignmentReport report;
  for (std::size_t c = 0; c < cones.size(); ++c) {
    AlignmentRow row;
    row.concept_name = cones[c].label();
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (!inside[i][c]) continue;
      ++row.retrieved;
      const Vector u = companion.vector(i);
      row.own.push_back(cosine(u, centroids[c]));
      for (std::size_t o = 0; o < cones.size(); ++o) {
        if (o != c) row.other.push_back(cosine(u, centroids[o]));
      }
    }
    row.median_own = median(row.own);
    row.median_other = median(row.other);
    report.rows.push_back(std::move(row));
  }
  for (const auto& flags : inside) {
    if (std::count(flags.begin(), flags.end(), 1) > 1) ++report.overlap;
  }
  return report;
}

// Companion rows of non-prompt rows randomly permuted; breaks the pairing
// between cone membership and companion geometry.
inline EmbeddingSet shuffle_companion(const EmbeddingSet& set, const EmbeddingSet& companion, std::uint64_t seed) {
  std::vector<std::size_t> movable;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (!has_tag(set.tags()[i], kPromptTag)) movable.push_back(i);
  }
  std::vector<std::size_t> perm = movable;
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  EmbeddingSet::Matrix rows = companion.rows();
  for (std::size_t j = 0; j < movable.size(); ++j) {
    rows.row(static_cast<Eigen::Index>(movable[j])) = companion.rows().row(static_cast<Eigen::Index>(perm[j]));
  }
  return EmbeddingSet(Space::euclidean, std::move(rows), std::nullopt, companion.labels(), companion.tags(),
                      companion.metadata());
}

// --- report serialization ------------------------------------------------------

inline nlohmann::json to_json(const CensusTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"tuple", tuple_name(r.concepts)}, {"count", r.count}, {"inside", r.inside},
                    {"fraction", r.fraction()}});
  }
  return {{"boundary_const", t.boundary_const}, {"rows", rows}, {"note", kMetricSubstitution}};
}

inline std::string to_csv(const CensusTable& t) {
  std::ostringstream os;
  os.precision(17);
  os << "# " << kMetricSubstitution << "\n";
  os << "boundary_const,tuple,count,inside,fraction\n";
  for (const auto& r : t.rows) {
    os << t.boundary_const << "," << tuple_name(r.concepts) << "," << r.count << "," << r.inside << ","
       << r.fraction() << "\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const RecallRow& r, const std::vector<std::string>& cones, bool with_margins) {
  nlohmann::json recall = nlohmann::json::object();
  for (std::size_t c = 0; c < cones.size(); ++c) {
    recall[cones[c]] = {{"R@1", r.recall[c][0]}, {"R@5", r.recall[c][1]}, {"R@10", r.recall[c][2]}};
  }
  nlohmann::json j{{"target", r.target},
                   {"lambda", r.lambda},
                   {"recall", recall},
                   {"hits_outside_target", r.hits_outside_target}};
  if (with_margins) j["query_margins"] = r.margins;
  return j;
}

inline nlohmann::json to_json(const RetrievalReport& rep) {
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& r : rep.sweep) sweep.push_back(to_json(r, rep.cones, false));
  nlohmann::json best = nlohmann::json::array();
  for (const auto& r : rep.best) best.push_back(to_json(r, rep.cones, true));
  return {{"note", rep.note},
          {"cones", rep.cones},
          {"control", rep.control},
          {"lambdas", rep.lambdas},
          {"caption", to_json(rep.caption, rep.cones, true)},
          {"sweep", sweep},
          {"best", best},
          {"config_digest", rep.config_digest}};
}

inline std::string to_csv(const RetrievalReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "# " << rep.note << "\n";
  os << "row,target,lambda,cone,R@1,R@5,R@10\n";
  auto emit = [&](const char* kind, const RecallRow& r) {
    for (std::size_t c = 0; c < rep.cones.size(); ++c) {
      os << kind << "," << r.target << "," << r.lambda << "," << rep.cones[c] << "," << r.recall[c][0] << ","
         << r.recall[c][1] << "," << r.recall[c][2] << "\n";
    }
  };
  emit("caption", rep.caption);
  for (const auto& r : rep.best) emit("best", r);
  for (const auto& r : rep.sweep) emit("sweep", r);
  return os.str();
}

inline nlohmann::json to_json(const AlignmentReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"concept", r.concept_name},
                    {"retrieved", r.retrieved},
                    {"median_own", r.median_own},
                    {"median_other", r.median_other},
                    {"separation", r.separation()},
                    {"own", r.own},
                    {"other", r.other}});
  }
  return {{"note", rep.note}, {"overlap", rep.overlap}, {"rows", rows}};
}

inline std::string to_csv(const AlignmentReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "# " << rep.note << "\n";
  os << "concept,retrieved,median_own,median_other,separation\n";
  for (const auto& r : rep.rows) {
    os << r.concept_name << "," << r.retrieved << "," << r.median_own << "," << r.median_other << ","
       << r.separation() << "\n";
  }
  return os.str();
}

// lambda, px, py, margin_<cone>... using the first two Poincare coordinates.
inline std::string sweep_csv(const std::vector<SweepPoint>& sweep, std::span<const EntailmentCone> cones) {
  std::ostringstream os;
  os.precision(17);
  os << "lambda,px,py";
  for (const auto& cone : cones) os << ",margin_" << cone.label();
  os << "\n";
  for (const auto& p : sweep) {
    const Vector b = poincare_project(p.point);
    os << p.lambda << "," << b(0) << "," << (b.size() > 1 ? b(1) : 0.0);
    for (double m : p.margins) os << "," << m;
    os << "\n";
  }
  return os.str();
}

}  // namespace hycon
