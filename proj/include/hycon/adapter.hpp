#pragma once

// Affine map from log-at-origin hyperbolic embeddings to Euclidean targets,
// fitted in closed form under the l2 objective
//   sum_i |W u_i + b - y_i|^2 + ridge |W|_F^2,   u_i = log_0(x_i).

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "hycon/embedding_set.hpp"
#include "hycon/errors.hpp"
#include "hycon/lorentz.hpp"

namespace hycon {

inline constexpr double kDefaultRidge = 1e-6;

struct LinearAdapter {
  Eigen::MatrixXd weight;  // target_dim x source_dim
  Vector bias;             // target_dim
  double ridge = kDefaultRidge;

  Eigen::Index source_dim() const { return weight.cols(); }
  Eigen::Index target_dim() const { return weight.rows(); }

  void validate() const {
    if (bias.size() != weight.rows()) throw DimensionError("adapter bias does not match weight rows");
    if (!weight.allFinite() || !bias.allFinite() || !std::isfinite(ridge) || ridge < 0.0) {
      throw NumericError("adapter has non-finite entries or a negative ridge");
    }
  }
};

inline Vector apply_adapter(const LinearAdapter& a, const LorentzPoint& x) {
  if (x.dim() != a.source_dim()) {
    std::ostringstream os;
    os << "adapter expects " << a.source_dim() << "-dimensional points, got " << x.dim();
    throw DimensionError(os.str());
  }
  return a.weight * log_at_origin(x) + a.bias;
}

struct AdapterFit {
  LinearAdapter adapter;
  double objective = 0.0;           // fitted value of the ridge objective
  double zero_map_objective = 0.0;  // sum_i |y_i|^2
  double rms_residual = 0.0;
  double max_abs_residual = 0.0;
};

namespace detail {

inline Eigen::MatrixXd log_origin_rows(const EmbeddingSet& source) {
  Eigen::MatrixXd u(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(source.manifold_dim()));
  for (std::size_t i = 0; i < source.size(); ++i) {
    u.row(static_cast<Eigen::Index>(i)) = log_at_origin(source.point(i)).transpose();
  }
  return u;
}

inline void check_adapter_sets(const EmbeddingSet& source, const EmbeddingSet& target) {
  if (!source.is_lorentz()) throw ConfigError("adapter source must be a Lorentz embedding set");
  if (target.space() != Space::euclidean) throw ConfigError("adapter target must be a Euclidean embedding set");
  if (source.size() != target.size()) {
    std::ostringstream os;
    os << "adapter sets are not row-aligned: " << source.size() << " vs " << target.size() << " rows";
    throw ConfigError(os.str());
  }
  if (source.size() == 0) throw EmptySetError("adapter fit on an empty set");
}

}  // namespace detail

inline double adapter_objective(const LinearAdapter& a, const EmbeddingSet& source, const EmbeddingSet& target) {
  detail::check_adapter_sets(source, target);
  const Eigen::MatrixXd u = detail::log_origin_rows(source);
  const Eigen::MatrixXd pred = (u * a.weight.transpose()).rowwise() + a.bias.transpose();
  return (pred - target.rows()).squaredNorm() + a.ridge * a.weight.squaredNorm();
}

inline AdapterFit fit_adapter(const EmbeddingSet& source, const EmbeddingSet& target, double ridge = kDefaultRidge) {
  detail::check_adapter_sets(source, target);
  if (!std::isfinite(ridge) || ridge < 0.0) throw ConfigError("ridge must be finite and nonnegative");
  const Eigen::MatrixXd u = detail::log_origin_rows(source);
  const Eigen::Index n = u.rows();
  const Eigen::Index p = u.cols();
  const Eigen::Index m = static_cast<Eigen::Index>(target.dim());

  // Stacked least squares [U 1; sqrt(ridge) [I 0]] B = [Y; 0], B = [W^T; b^T].
  const Eigen::Index extra = ridge > 0.0 ? p : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + extra, p + 1);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + extra, m);
  a.topLeftCorner(n, p) = u;
  a.col(p).head(n).setOnes();
  rhs.topRows(n) = target.rows();
  if (extra > 0) a.bottomLeftCorner(p, p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p + 1) {
    std::ostringstream os;
    os << "adapter design is rank deficient (rank " << qr.rank() << " < " << p + 1
       << "); use a positive ridge";
    throw RankDeficiencyError(os.str());
  }
  const Eigen::MatrixXd b = qr.solve(rhs);

  AdapterFit fit;
  fit.adapter.weight = b.topRows(p).transpose();
  fit.adapter.bias = b.row(p).transpose();
  fit.adapter.ridge = ridge;
  const Eigen::MatrixXd resid = ((u * fit.adapter.weight.transpose()).rowwise() + fit.adapter.bias.transpose()) -
                                target.rows();
  fit.objective = resid.squaredNorm() + ridge * fit.adapter.weight.squaredNorm();
  fit.zero_map_objective = target.rows().squaredNorm();
  fit.rms_residual = resid.size() ? std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size())) : 0.0;
  fit.max_abs_residual = resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
  return fit;
}

}  // namespace hycon
