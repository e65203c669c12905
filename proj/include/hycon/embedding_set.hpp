#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hycon/errors.hpp"
#include "hycon/lorentz.hpp"

namespace hycon {

enum class Space : std::uint8_t { euclidean = 0, lorentz_spatial = 1, lorentz_full = 2 };

inline const char* to_string(Space s) {
  switch (s) {
    case Space::euclidean: return "euclidean";
    case Space::lorentz_spatial: return "lorentz-spatial";
    case Space::lorentz_full: return "lorentz-full";
  }
  return "unknown";
}

inline Space parse_space(const std::string& s) {
  if (s == "euclidean") return Space::euclidean;
  if (s == "lorentz-spatial") return Space::lorentz_spatial;
  if (s == "lorentz-full") return Space::lorentz_full;
  throw ConfigError("unknown space '" + s + "'");
}

// Sorted, duplicate-free list of concept tags.
using TagSet = std::vector<std::string>;

inline TagSet make_tags(std::vector<std::string> tags) {
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return tags;
}

inline bool has_tag(const TagSet& tags, const std::string& tag) {
  return std::binary_search(tags.begin(), tags.end(), tag);
}

inline constexpr double kLoadSheetTolerance = 1e-6;

struct SetMetadata {
  std::optional<double> boundary_const;
  std::string source;
};

// Immutable labeled matrix of embeddings in one declared space.
//
// `dim()` is the number of stored columns: n for euclidean and lorentz-spatial
// rows, n+1 for lorentz-full rows.
class EmbeddingSet {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  struct Options {
    bool check_sheet = true;
    double sheet_tolerance = kLoadSheetTolerance;
  };

  EmbeddingSet(Space space, Matrix rows, std::optional<Curvature> curvature,
               std::vector<std::string> labels, std::vector<TagSet> tags, SetMetadata meta = {})
      : EmbeddingSet(space, std::move(rows), curvature, std::move(labels), std::move(tags),
                     std::move(meta), Options{}) {}

  EmbeddingSet(Space space, Matrix rows, std::optional<Curvature> curvature,
               std::vector<std::string> labels, std::vector<TagSet> tags, SetMetadata meta,
               Options options)
      : space_(space),
        rows_(std::move(rows)),
        curvature_(curvature),
        labels_(std::move(labels)),
        tags_(std::move(tags)),
        meta_(std::move(meta)) {
    if (labels_.size() != static_cast<std::size_t>(rows_.rows()) || tags_.size() != labels_.size()) {
      std::ostringstream os;
      os << "row/label/tag counts differ: " << rows_.rows() << "/" << labels_.size() << "/"
         << tags_.size();
      throw ValidationError(os.str());
    }
    for (auto& t : tags_) t = make_tags(std::move(t));
    if (space_ != Space::euclidean && !curvature_) {
      throw ConfigError("Lorentz embedding sets require a curvature");
    }
    if (space_ == Space::euclidean) curvature_.reset();
    const Eigen::Index min_cols = space_ == Space::lorentz_full ? 2 : 1;
    if (rows_.rows() > 0 && rows_.cols() < min_cols) throw DimensionError("embedding rows are too short");
    if (!rows_.allFinite()) {
      std::vector<Eigen::Index> bad;
      for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
        if (!rows_.row(i).allFinite()) bad.push_back(i);
      }
      throw ValidationError("non-finite values in rows " + join_indices(bad));
    }
    if (space_ == Space::lorentz_full && options.check_sheet) {
      const auto bad = sheet_violations(options.sheet_tolerance);
      if (!bad.empty()) {
        throw ValidationError("rows off the hyperboloid sheet: " + join_indices(bad));
      }
    }
  }

  Space space() const noexcept { return space_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(rows_.cols()); }
  const Matrix& rows() const noexcept { return rows_; }
  const std::optional<Curvature>& curvature() const noexcept { return curvature_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<TagSet>& tags() const noexcept { return tags_; }
  const SetMetadata& metadata() const noexcept { return meta_; }
  bool is_lorentz() const noexcept { return space_ != Space::euclidean; }

  // Manifold dimension for Lorentz sets, vector length for Euclidean ones.
  std::size_t manifold_dim() const noexcept {
    return space_ == Space::lorentz_full ? dim() - 1 : dim();
  }

  Vector vector(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)).transpose(); }

  // Row i as a point on the sheet. Spatial rows are lifted; full rows are kept
  // verbatim when they already satisfy the sheet constraint to 1e-9 and
  // reprojected otherwise.
  LorentzPoint point(std::size_t i) const {
    require_lorentz();
    const Vector row = vector(i);
    if (space_ == Space::lorentz_spatial) return lift(row, *curvature_);
    if (row(0) > 0.0 && sheet_residual(row, *curvature_) <= kSheetTolerance) {
      return LorentzPoint::from_coords(row, *curvature_);
    }
    return lift(row.tail(row.size() - 1), *curvature_);
  }

  std::vector<LorentzPoint> points() const {
    std::vector<LorentzPoint> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
  }

  std::vector<Eigen::Index> sheet_violations(double tolerance) const {
    std::vector<Eigen::Index> bad;
    if (space_ != Space::lorentz_full) return bad;
    for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
      const Vector row = rows_.row(i).transpose();
      if (!(row(0) > 0.0) || sheet_residual(row, *curvature_) > tolerance) bad.push_back(i);
    }
    return bad;
  }

  // Rows whose index satisfies `keep`, in original order.
  EmbeddingSet filter(const std::function<bool(std::size_t)>& keep) const {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < size(); ++i) {
      if (keep(i)) idx.push_back(static_cast<Eigen::Index>(i));
    }
    Matrix sub(static_cast<Eigen::Index>(idx.size()), rows_.cols());
    std::vector<std::string> labels;
    std::vector<TagSet> tags;
    for (std::size_t r = 0; r < idx.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = rows_.row(idx[r]);
      labels.push_back(labels_[static_cast<std::size_t>(idx[r])]);
      tags.push_back(tags_[static_cast<std::size_t>(idx[r])]);
    }
    return EmbeddingSet(space_, std::move(sub), curvature_, std::move(labels), std::move(tags), meta_,
                        Options{false, kLoadSheetTolerance});
  }

  // Rows whose tag set equals `tags` exactly.
  EmbeddingSet select_exact(const TagSet& tags) const {
    const TagSet want = make_tags(tags);
    return filter([&](std::size_t i) { return tags_[i] == want; });
  }

  // Full-coordinate copy of a Lorentz set.
  static EmbeddingSet from_points(const std::vector<LorentzPoint>& pts, std::vector<std::string> labels,
                                  std::vector<TagSet> tags, SetMetadata meta = {}) {
    if (pts.empty()) throw EmptySetError("cannot infer dimension from an empty point list");
    Matrix m(static_cast<Eigen::Index>(pts.size()), pts.front().coords().size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      require_compatible(pts.front(), pts[i]);
      m.row(static_cast<Eigen::Index>(i)) = pts[i].coords().transpose();
    }
    return EmbeddingSet(Space::lorentz_full, std::move(m), pts.front().curvature(), std::move(labels),
                        std::move(tags), std::move(meta));
  }

  static EmbeddingSet from_points(const std::vector<LorentzPoint>& pts) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < pts.size(); ++i) labels.push_back(std::to_string(i));
    return from_points(pts, std::move(labels), std::vector<TagSet>(pts.size()));
  }

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.space_ == b.space_ && a.rows_.rows() == b.rows_.rows() && a.rows_.cols() == b.rows_.cols() &&
           a.rows_ == b.rows_ && a.labels_ == b.labels_ && a.tags_ == b.tags_ &&
           a.curvature_.has_value() == b.curvature_.has_value() &&
           (!a.curvature_ || *a.curvature_ == *b.curvature_) &&
           a.meta_.boundary_const == b.meta_.boundary_const && a.meta_.source == b.meta_.source;
  }

 private:
  void require_lorentz() const {
    if (space_ == Space::euclidean) throw ConfigError("expected a Lorentz embedding set, got euclidean");
  }

  static std::string join_indices(const std::vector<Eigen::Index>& idx) {
    std::ostringstream os;
    for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i];
    return os.str();
  }

  Space space_;
  Matrix rows_;
  std::optional<Curvature> curvature_;
  std::vector<std::string> labels_;
  std::vector<TagSet> tags_;
  SetMetadata meta_;
};

}  // namespace hycon
